"""Asymmetric double well, its linear finite-element discretisation and the
single-particle spectra.

Units: hbar = 1 and m = 1/2, so the kinetic operator is -d^2/dx^2, lengths
are in units of the experimental length scale and energies in its inverse
square.
"""
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import tridiag
from .errors import ConfigurationError, DomainError, NumericalError, ResourceError

DEFAULT_MAX_MODES = 20000


@dataclass(frozen=True)
class PotentialSpec:
    """Left well ``[0, l)``, barrier ``[l, l+b)`` of height ``v0``, right well
    ``[l+b, l+b+r]``, hard walls at both ends."""

    l: float = 50.0
    b: float = 2.0
    r: float = 4000.0
    v0: float = 0.1

    def __post_init__(self):
        for name in ("l", "b", "r", "v0"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise ConfigurationError(f"{name} must be finite, got {val}")
        if self.l <= 0 or self.r <= 0:
            raise ConfigurationError("well widths l and r must be positive")
        if self.b < 0 or self.v0 < 0:
            raise ConfigurationError("barrier width b and height v0 must be non-negative")

    @property
    def total_length(self):
        return self.l + self.b + self.r


def potential_value(spec, x):
    """V(x) on the closed domain ``[0, l+b+r]``."""
    if not 0.0 <= x <= spec.total_length:
        raise DomainError(f"x = {x} outside [0, {spec.total_length}]")
    if spec.l <= x < spec.l + spec.b:
        return spec.v0
    return 0.0


def _steps(length, h, name):
    q = length / h
    k = round(q)
    if abs(q - k) > 1e-9 * max(1.0, q):
        raise ConfigurationError(f"{name}/h = {q:.12g} is not an integer; breakpoints must sit on nodes")
    return int(k)


@dataclass(frozen=True, eq=False)
class FemSystem:
    """Hat-element matrices with the Dirichlet end nodes removed.

    ``k_diag``/``k_off`` hold the symmetric tridiagonal discretisation of
    -d^2/dx^2 + V(x), ``m_diag``/``m_off`` the element overlap (mass) matrix.
    Interior node ``i`` sits at ``(i + 1) * h``; ``n_system`` nodes lie in
    ``(0, l]``, the last of them exactly on the cut ``x = l``.
    """

    spec: PotentialSpec
    h: float
    nodes: np.ndarray
    k_diag: np.ndarray
    k_off: np.ndarray
    m_diag: np.ndarray
    m_off: np.ndarray
    n_system: int

    @property
    def n(self):
        return self.nodes.shape[0]

    def stiffness_dense(self):
        return _dense(self.k_diag, self.k_off)

    def mass_dense(self):
        return _dense(self.m_diag, self.m_off)

    def mass_apply(self, x):
        return tridiag._mass_apply(self.m_diag, self.m_off, np.asarray(x))

    def stiffness_apply(self, x):
        return tridiag._mass_apply(self.k_diag, self.k_off, np.asarray(x))

    @cached_property
    def system_mass(self):
        """Mass form of ``[0, l]`` on the first ``n_system`` nodes.

        The hat on the cut node contributes only its left half.
        """
        ns = self.n_system
        d = self.m_diag[:ns].copy()
        d[-1] = self.h / 3.0
        return d, self.m_off[:ns - 1].copy()

    @cached_property
    def environment_mass(self):
        """Mass form of ``[l, L]`` on nodes ``n_system - 1`` onwards."""
        ns = self.n_system
        d = self.m_diag[ns - 1:].copy()
        d[0] = self.h / 3.0
        return d, self.m_off[ns - 1:].copy()

    @cached_property
    def system_factor(self):
        """Upper bidiagonal ``U`` with ``U^T U`` = system mass form, so that
        ``U @ s`` are Euclidean coordinates of a system nodal vector."""
        d, o = self.system_mass
        ns = d.shape[0]
        piv = tridiag.mass_cholesky_pivots(d, o)
        diag = np.sqrt(piv)
        U = np.zeros((ns, ns))
        U[np.arange(ns), np.arange(ns)] = diag
        U[np.arange(ns - 1), np.arange(1, ns)] = o / diag[:-1]
        return U


def _dense(d, o):
    A = np.diag(d)
    if o.size:
        A += np.diag(o, 1) + np.diag(o, -1)
    return A


def assemble_fem(spec, h):
    """Uniform linear-element discretisation with exact element integrals."""
    if not h > 0 or h > spec.l / 10.0:
        raise ConfigurationError(f"mesh spacing h = {h} must lie in (0, l/10] = (0, {spec.l / 10}]")
    nl = _steps(spec.l, h, "l")
    nb = _steps(spec.b, h, "b")
    nr = _steps(spec.r, h, "r")
    ne = nl + nb + nr
    n = ne - 1
    elem_v = np.zeros(ne)
    elem_v[nl:nl + nb] = spec.v0
    # element matrices: (1/h)[[1,-1],[-1,1]] + V h/6 [[2,1],[1,2]]
    kd_full = np.zeros(ne + 1)
    kd_full[:-1] += 1.0 / h + elem_v * h / 3.0
    kd_full[1:] += 1.0 / h + elem_v * h / 3.0
    ko_full = -1.0 / h + elem_v * h / 6.0
    md_full = np.full(ne + 1, 2.0 * h / 3.0)
    mo_full = np.full(ne, h / 6.0)
    nodes = h * np.arange(1, n + 1)
    return FemSystem(
        spec=spec,
        h=float(h),
        nodes=nodes,
        k_diag=kd_full[1:-1].copy(),
        k_off=ko_full[1:-1].copy(),
        m_diag=md_full[1:-1].copy(),
        m_off=mo_full[1:-1].copy(),
        n_system=nl,
    )


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Ascending eigenpairs of the full-domain pencil.

    ``vectors`` stores one M-orthonormal nodal vector per row (``modes`` is
    the column view). ``e_cut`` is ``inf`` for the complete basis.
    """

    energies: np.ndarray
    vectors: np.ndarray
    e_cut: float
    fem: FemSystem = field(repr=False)

    @property
    def modes(self):
        return self.vectors.T

    @property
    def size(self):
        return self.energies.shape[0]

    @property
    def complete(self):
        return self.size == self.fem.n

    @cached_property
    def system_coordinates(self):
        """Euclidean system coordinates of every mode, shape (n_system, m)."""
        return self.fem.system_factor @ self.vectors[:, :self.fem.n_system].T

    def project(self, vec):
        """Coefficients ``modes^T M vec`` of a real or complex nodal vector."""
        return self.vectors @ self.fem.mass_apply(vec)

    def reconstruct(self, coefficients):
        """Nodal vector ``modes @ coefficients``."""
        return coefficients @ self.vectors


def solve_modes(fem, e_cut=None, *, max_modes=DEFAULT_MAX_MODES, backend=None):
    """All eigenpairs with ``E <= e_cut``; ``e_cut=None`` keeps every mode."""
    kd, ko, md, mo = fem.k_diag, fem.k_off, fem.m_diag, fem.m_off
    tridiag.mass_cholesky_pivots(md, mo)
    n = fem.n
    if e_cut is None or e_cut == math.inf:
        m = n
        e_cut = math.inf
    else:
        if not e_cut > 0:
            raise ConfigurationError(f"e_cut must be positive, got {e_cut}")
        m = int(tridiag.count_below(kd, ko, md, mo, [e_cut], backend=backend)[0])
    if m > max_modes:
        raise ResourceError(
            f"{m} eigenpairs requested, cap is {max_modes}; lower e_cut, coarsen h "
            f"or raise max_modes"
        )
    if m == 0:
        raise ConfigurationError(f"no eigenvalue below e_cut = {e_cut}")
    lo, hi = tridiag.spectrum_bounds(kd, ko, md, mo)
    if math.isfinite(e_cut):
        hi = min(hi, float(e_cut) * (1.0 + 4 * tridiag.EPS))
    energies = tridiag.bisect(kd, ko, md, mo, np.arange(m), lo, hi, backend=backend)
    V = tridiag.eigenvectors(kd, ko, md, mo, energies, backend=backend)
    res = tridiag.residual_norms(kd, ko, md, mo, energies, V)
    vnorm = tridiag.mass_norms(md, mo, V)
    # relative criterion, floored at the rounding level of forming (K - E M) v
    knorm = float(np.max(np.abs(kd) + np.r_[np.abs(ko), 0.0] + np.r_[0.0, np.abs(ko)]))
    floor = 8 * tridiag.EPS * knorm * tridiag.euclidean_norms(V)
    bad = res > 1e-8 * np.abs(energies) * vnorm + floor
    if bad.any():
        j = int(np.argmax(res / np.maximum(np.abs(energies), tridiag.EPS)))
        raise NumericalError(f"eigenpair {j} (E = {energies[j]:.6g}) failed the residual check")
    return SpectralBasis(energies=energies, vectors=V,
                         e_cut=float(e_cut), fem=fem)


@dataclass(frozen=True, eq=False)
class WellEigenstate:
    """Eigenstate ``|n>`` of the left well with a hard wall at ``x = l``,
    zero-extended to the full mesh."""

    n: int
    energy: float
    coefficients: np.ndarray


def isolated_well_modes(spec, h, n_max, fem=None):
    if n_max < 1:
        raise ConfigurationError("n_max must be at least 1")
    fem = fem if fem is not None else assemble_fem(spec, h)
    ns = fem.n_system - 1  # interior nodes of (0, l)
    if n_max > ns:
        raise ConfigurationError(f"only {ns} left-well modes on this mesh, asked for {n_max}")
    kd = fem.k_diag[:ns]
    ko = fem.k_off[:ns - 1]
    md = fem.m_diag[:ns]
    mo = fem.m_off[:ns - 1]
    lo, hi = tridiag.spectrum_bounds(kd, ko, md, mo)
    energies = tridiag.bisect(kd, ko, md, mo, np.arange(n_max), lo, hi)
    V = tridiag.eigenvectors(kd, ko, md, mo, energies)
    out = []
    for j in range(n_max):
        full = np.zeros(fem.n)
        v = V[j]
        # sign convention: positive slope at the left wall
        if v[0] < 0:
            v = -v
        full[:ns] = v
        out.append(WellEigenstate(n=j + 1, energy=float(energies[j]), coefficients=full))
    return out

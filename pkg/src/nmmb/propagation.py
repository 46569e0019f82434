"""Single-particle states in the spectral basis: expansion, phase evolution,
and the split into left-well (system) and barrier-plus-right-well
(environment) parts."""
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import CutoffTooLowError, DomainError
from .potential import WellEigenstate

EPS_COMPLETE = 1e-8


@dataclass(frozen=True, eq=False)
class Orbital:
    """Spectral amplitudes of a particle, its internal label and the time
    elapsed since ``initial`` was prepared.

    Phases are always applied to the stored initial amplitudes, so that
    consecutive evolutions compose exactly.
    """

    initial: np.ndarray
    basis: object = field(repr=False)
    internal: int = 0
    time: float = 0.0
    completeness_defect: float = 0.0

    @cached_property
    def coefficients(self):
        if self.time == 0.0:
            return self.initial.astype(np.complex128)
        return self.initial * np.exp(-1j * self.basis.energies * self.time)

    @property
    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.coefficients) ** 2)))


@dataclass(frozen=True, eq=False)
class SplitOrbital:
    """Nodal restrictions to ``[0, l]`` and ``[l, L]`` (the cut node appears
    in both) and the system probability ``p1``."""

    s_part: np.ndarray
    e_part: np.ndarray
    p1: float
    pe: float


def expand(initial, basis, internal=0, eps_complete=EPS_COMPLETE):
    """Spectral coefficients ``a_j = v_j^T M psi`` of a nodal vector."""
    vec = initial.coefficients if isinstance(initial, WellEigenstate) else np.asarray(initial)
    if vec.shape != (basis.fem.n,):
        raise DomainError(f"initial vector has shape {vec.shape}, mesh has {basis.fem.n} nodes")
    norm2 = float(np.real(np.vdot(vec, basis.fem.mass_apply(vec))))
    if not norm2 > 0.0:
        raise DomainError("initial vector is zero")
    a = basis.project(vec) / np.sqrt(norm2)
    captured = float(np.sum(np.abs(a) ** 2))
    defect = 1.0 - captured
    if defect > eps_complete:
        raise CutoffTooLowError(defect, eps_complete)
    a = a / np.sqrt(captured)
    return Orbital(initial=a, basis=basis, internal=internal, completeness_defect=max(defect, 0.0))


def evolve(orbital, t):
    """Advance by ``t``: ``a_j -> exp(-i E_j t) a_j``."""
    if not t >= 0.0:
        raise DomainError(f"evolution time must be non-negative, got {t}")
    return replace(orbital, time=orbital.time + t)


def split_system(orbital):
    basis = orbital.basis
    fem = basis.fem
    psi = basis.reconstruct(orbital.coefficients)
    ns = fem.n_system
    s = psi[:ns]
    e = psi[ns - 1:]
    sd, so = fem.system_mass
    ed, eo = fem.environment_mass
    p1 = float(np.real(np.vdot(s, _tri_apply(sd, so, s))))
    pe = float(np.real(np.vdot(e, _tri_apply(ed, eo, e))))
    return SplitOrbital(s_part=s, e_part=e, p1=p1, pe=pe)


def _tri_apply(d, o, x):
    y = d * x
    y[:-1] += o * x[1:]
    y[1:] += o * x[:-1]
    return y


def system_coordinates(orbitals):
    """Euclidean coordinates of the system parts, one column per orbital."""
    if not orbitals:
        return np.zeros((0, 0), dtype=np.complex128)
    W = orbitals[0].basis.system_coordinates
    C = np.stack([o.coefficients for o in orbitals], axis=1)
    return W @ C


def survival_probability(orbital, times):
    """``p1(t)`` on a grid of times, without reconstructing full vectors."""
    basis = orbital.basis
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    W = basis.system_coordinates
    out = np.empty(times.shape[0])
    step = 64
    for start in range(0, times.shape[0], step):
        tt = times[start:start + step] + orbital.time
        ph = np.exp(-1j * np.outer(basis.energies, tt)) * orbital.initial[:, None]
        Y = W @ ph
        out[start:start + step] = np.sum(np.abs(Y) ** 2, axis=0)
    return out


def correlation(orbital, reference):
    """Mass inner product ``<reference|orbital(t)>``."""
    ref = reference.coefficients if isinstance(reference, WellEigenstate) else np.asarray(reference)
    basis = orbital.basis
    if ref.shape != (basis.fem.n,):
        raise DomainError("reference vector does not live on the basis mesh")
    r = basis.project(ref)
    return complex(np.vdot(r, orbital.coefficients))


def autocorrelation(orbital, times):
    """``|<psi(0)|psi(t)>|^2`` on a grid of times, relative to the orbital's
    own preparation."""
    basis = orbital.basis
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    w = np.abs(orbital.initial) ** 2
    out = np.empty(times.shape[0])
    step = 64
    for start in range(0, times.shape[0], step):
        tt = times[start:start + step] + orbital.time
        amp = np.exp(-1j * np.outer(tt, basis.energies)) @ w
        out[start:start + step] = np.abs(amp) ** 2
    return out

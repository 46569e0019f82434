import math

import numpy as np
import pytest
import scipy.linalg as sla

from nmmb import tridiag
from nmmb.cache import cache_path, load_or_solve, read_basis, write_basis
from nmmb.errors import ConfigurationError, DomainError, NumericalError, ResourceError
from nmmb.potential import (PotentialSpec, assemble_fem, isolated_well_modes,
                            potential_value, solve_modes)

BASE = PotentialSpec()
SMALL = PotentialSpec(l=5.0, b=1.0, r=14.0, v0=0.8)


# -- geometry -----------------------------------------------------------------

@pytest.mark.parametrize("x, v", [(25.0, 0.0), (51.0, 0.1), (100.0, 0.0), (0.0, 0.0),
                                  (50.0, 0.1), (52.0, 0.0), (4052.0, 0.0)])
def test_potential_value(x, v):
    assert potential_value(BASE, x) == v


@pytest.mark.parametrize("x", [-1e-9, 4052.5])
def test_potential_value_outside(x):
    with pytest.raises(DomainError):
        potential_value(BASE, x)


@pytest.mark.parametrize("kw", [dict(l=0), dict(r=-1), dict(b=-0.1), dict(v0=-1),
                                dict(l=math.nan)])
def test_spec_validation(kw):
    with pytest.raises(ConfigurationError):
        PotentialSpec(**kw)


def test_total_length():
    assert BASE.total_length == 4052.0


# -- assembly -----------------------------------------------------------------

def test_node_count_default():
    assert assemble_fem(BASE, 0.5).n == 8103


def test_interior_stencils():
    h = 0.5
    fem = assemble_fem(BASE, h)
    i = 10
    assert fem.m_diag[i] == pytest.approx(2 * h / 3)
    assert fem.m_off[i] == pytest.approx(h / 6)
    assert fem.k_diag[i] == pytest.approx(2 / h)
    assert fem.k_off[i] == pytest.approx(-1 / h)


def _quadrature_matrices(spec, h):
    # independent assembly: 3-point Gauss per element, dense, then Dirichlet cut
    ne = round(spec.total_length / h)
    N = ne + 1
    K = np.zeros((N, N))
    M = np.zeros((N, N))
    gx, gw = np.polynomial.legendre.leggauss(3)
    for e in range(ne):
        a = e * h
        for xi, wi in zip(gx, gw):
            x = a + 0.5 * h * (xi + 1)
            w = 0.5 * h * wi
            phi = np.array([1 - (x - a) / h, (x - a) / h])
            dphi = np.array([-1 / h, 1 / h])
            v = spec.v0 if spec.l <= x < spec.l + spec.b else 0.0
            idx = [e, e + 1]
            K[np.ix_(idx, idx)] += w * (np.outer(dphi, dphi) + v * np.outer(phi, phi))
            M[np.ix_(idx, idx)] += w * np.outer(phi, phi)
    return K[1:-1, 1:-1], M[1:-1, 1:-1]


def test_assembly_matches_quadrature():
    fem = assemble_fem(SMALL, 0.25)
    K, M = _quadrature_matrices(SMALL, 0.25)
    assert np.allclose(fem.stiffness_dense(), K, atol=1e-13)
    assert np.allclose(fem.mass_dense(), M, atol=1e-13)


def test_mass_positive_definite():
    fem = assemble_fem(SMALL, 0.25)
    assert np.all(tridiag.mass_cholesky_pivots(fem.m_diag, fem.m_off) > 0)


@pytest.mark.parametrize("h", [0.3, 6.0, 0.0, -0.5])
def test_assembly_rejects_bad_mesh(h):
    with pytest.raises(ConfigurationError):
        assemble_fem(BASE, h)


def test_system_environment_mass_split():
    fem = assemble_fem(SMALL, 0.25)
    sd, so = fem.system_mass
    ed, eo = fem.environment_mass
    ns = fem.n_system
    assert fem.nodes[ns - 1] == pytest.approx(SMALL.l)
    total = np.zeros(fem.n)
    total[:ns] += sd
    total[ns - 1:] += ed
    assert np.allclose(total, fem.m_diag)
    U = fem.system_factor
    assert np.allclose(U.T @ U, np.diag(sd) + np.diag(so, 1) + np.diag(so, -1))


# -- spectra -----------------------------------------------------------------

def test_solve_modes_matches_dense(backend):
    fem = assemble_fem(SMALL, 0.25)
    basis = solve_modes(fem, backend=backend)
    ref, Vref = sla.eigh(fem.stiffness_dense(), fem.mass_dense())
    assert basis.complete
    assert np.allclose(basis.energies, ref, rtol=1e-10, atol=1e-12)
    M = fem.mass_dense()
    G = basis.vectors @ M @ basis.vectors.T
    assert np.max(np.abs(G - np.eye(fem.n))) < 1e-10
    # sign convention only: |overlap| with reference vectors is one
    assert np.allclose(np.abs(np.sum(basis.vectors * (M @ Vref).T, axis=1)), 1.0, atol=1e-8)


def test_solve_modes_cutoff_and_residuals(rng):
    fem = assemble_fem(SMALL, 0.25)
    basis = solve_modes(fem, 3.0)
    assert basis.size < fem.n
    assert np.all(basis.energies >= 0) and np.all(basis.energies <= 3.0)
    assert np.all(np.diff(basis.energies) > 0)
    pick = rng.choice(basis.size, size=10, replace=False)
    res = tridiag.residual_norms(fem.k_diag, fem.k_off, fem.m_diag, fem.m_off,
                                 basis.energies[pick], basis.vectors[pick])
    nrm = tridiag.mass_norms(fem.m_diag, fem.m_off, basis.vectors[pick])
    assert np.all(res <= 1e-8 * np.abs(basis.energies[pick]) * nrm)


def test_solve_modes_resource_cap():
    fem = assemble_fem(SMALL, 0.25)
    with pytest.raises(ResourceError, match="e_cut"):
        solve_modes(fem, max_modes=10)


def test_solve_modes_rejects_bad_cut():
    fem = assemble_fem(SMALL, 0.25)
    with pytest.raises(ConfigurationError):
        solve_modes(fem, -1.0)


def test_mass_not_spd_is_reported():
    with pytest.raises(NumericalError):
        tridiag.mass_cholesky_pivots(np.array([1.0, 1.0]), np.array([2.0]))


def test_weyl_count_default_geometry():
    # hard-wall box of length L: N(E) ~ (L / pi) sqrt(E)
    fem = assemble_fem(BASE, 0.5)
    n = int(tridiag.count_below(fem.k_diag, fem.k_off, fem.m_diag, fem.m_off, [0.4])[0])
    weyl = BASE.total_length / math.pi * math.sqrt(0.4)
    assert abs(n - weyl) <= 0.05 * weyl


def test_box_spectrum_v0_zero():
    spec = PotentialSpec(v0=0.0)
    fem = assemble_fem(spec, 0.1)
    L = spec.total_length
    cut = (10.5 * math.pi / L) ** 2
    basis = solve_modes(fem, cut)
    assert basis.size == 10
    exact = (np.arange(1, 11) * math.pi / L) ** 2
    assert np.max(np.abs(basis.energies / exact - 1)) < 1e-6


def test_b_zero_geometry_allowed():
    fem = assemble_fem(PotentialSpec(l=5, b=0, r=5, v0=1.0), 0.1)
    basis = solve_modes(fem, 1.0)
    exact = (np.arange(1, basis.size + 1) * math.pi / 10) ** 2
    assert np.allclose(basis.energies, exact, rtol=2e-3)


def test_isolated_well_levels():
    wells = isolated_well_modes(BASE, 0.1, 5)
    e1 = (math.pi / 50) ** 2
    assert wells[0].energy == pytest.approx(3.9478e-3, rel=1e-4)
    assert wells[1].energy / wells[0].energy == pytest.approx(4.0, rel=1e-3)
    fem = assemble_fem(BASE, 0.1)
    M = np.stack([w.coefficients for w in wells])
    G = M @ fem.mass_apply(M).T
    assert np.max(np.abs(G - np.eye(5))) < 1e-10
    ns = fem.n_system
    assert all(np.all(w.coefficients[ns - 1:] == 0) for w in wells)
    assert e1 > 0


def test_isolated_well_convergence_ratio():
    exact = (np.arange(1, 6) * math.pi / 50) ** 2
    err = []
    for h in (0.2, 0.1):
        e = np.array([w.energy for w in isolated_well_modes(BASE, h, 5)])
        err.append(np.abs(e - exact) / exact)
    ratio = err[0] / err[1]
    assert np.all(np.abs(ratio - 4) <= 0.5)


def test_isolated_well_too_many():
    with pytest.raises(ConfigurationError):
        isolated_well_modes(SMALL, 0.5, 50)


# -- cache --------------------------------------------------------------------

def test_cache_roundtrip(tmp_path):
    fem = assemble_fem(SMALL, 0.25)
    basis = solve_modes(fem, None)
    path = cache_path(fem, None, tmp_path)
    write_basis(path, basis)
    raw = path.read_bytes()
    assert raw[:5] == b"NMMB1"
    n, m = np.frombuffer(raw[5 + 48:5 + 64], dtype="<i8")
    assert (n, m) == (fem.n, basis.size)
    back = read_basis(path, fem, None)
    assert np.array_equal(back.energies, basis.energies)
    assert np.array_equal(back.vectors, basis.vectors)
    # modes are stored node-major
    first_row = np.frombuffer(raw, dtype="<f8", count=m, offset=5 + 64 + 8 * m)
    assert np.array_equal(first_row, basis.modes[0])


def test_cache_key_mismatch_forces_recompute(tmp_path):
    fem = assemble_fem(SMALL, 0.25)
    basis = solve_modes(fem, None)
    path = cache_path(fem, None, tmp_path)
    write_basis(path, basis)
    # same file, asked for under a different cutoff or potential -> ignored
    assert read_basis(path, fem, 3.0) is None
    other = assemble_fem(PotentialSpec(l=5.0, b=1.0, r=14.0, v0=0.9), 0.25)
    assert read_basis(path, other, None) is None
    assert cache_path(other, None, tmp_path) != path


def test_load_or_solve_uses_cache(tmp_path, monkeypatch):
    b1 = load_or_solve(SMALL, 0.25, None, directory=tmp_path)
    import nmmb.cache as cache_mod

    def boom(*a, **k):
        raise AssertionError("solver called despite warm cache")

    monkeypatch.setattr(cache_mod, "solve_modes", boom)
    b2 = load_or_solve(SMALL, 0.25, None, directory=tmp_path)
    assert np.array_equal(b1.vectors, b2.vectors)
    with pytest.raises(AssertionError):
        load_or_solve(SMALL, 0.25, 3.0, directory=tmp_path)

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nmmb.errors import CutoffTooLowError, DomainError
from nmmb.potential import PotentialSpec, assemble_fem, isolated_well_modes, solve_modes
from nmmb.propagation import (autocorrelation, correlation, evolve, expand,
                              split_system, survival_probability)

SMALL = PotentialSpec(l=5.0, b=1.0, r=30.0, v0=0.8)
H = 0.25


@pytest.fixture(scope="module")
def basis():
    return solve_modes(assemble_fem(SMALL, H))


@pytest.fixture(scope="module")
def wells():
    return isolated_well_modes(SMALL, H, 3)


def test_expand_eigenmode_is_unit_vector(basis):
    k = 7
    o = expand(basis.modes[:, k], basis)
    e = np.zeros(basis.size)
    e[k] = 1.0
    assert np.allclose(o.coefficients, e, atol=1e-10)


def test_expand_unit_norm(basis, wells):
    o = expand(wells[0], basis)
    assert abs(np.sum(np.abs(o.coefficients) ** 2) - 1) < 1e-10
    assert o.completeness_defect < 1e-12


def test_expand_rejects_zero_and_wrong_shape(basis):
    with pytest.raises(DomainError):
        expand(np.zeros(basis.fem.n), basis)
    with pytest.raises(DomainError):
        expand(np.ones(3), basis)


def test_expand_cutoff_too_low(basis, wells):
    cut = solve_modes(basis.fem, 0.5)
    with pytest.raises(CutoffTooLowError) as info:
        expand(wells[0], cut)
    assert info.value.defect > 1e-8
    assert "defect" in str(info.value)


def test_defect_decreases_with_cutoff(wells):
    fem = assemble_fem(SMALL, H)
    defects = []
    for cut in (1.0, 4.0, 16.0):
        b = solve_modes(fem, cut)
        a = b.project(wells[0].coefficients)
        defects.append(1 - np.sum(a ** 2))
    assert defects[0] > defects[1] > defects[2] > 0


def test_evolve_identity_and_semigroup(basis, wells):
    o = expand(wells[0], basis)
    assert np.array_equal(evolve(o, 0.0).coefficients, o.coefficients)
    a = evolve(evolve(o, 3.5), 1.25)
    b = evolve(o, 4.75)
    assert np.array_equal(a.coefficients, b.coefficients)
    with pytest.raises(DomainError):
        evolve(o, -1.0)


def test_evolve_eigenmode_is_phase(basis):
    o = expand(basis.modes[:, 3], basis)
    oe = evolve(o, 17.0)
    assert np.allclose(np.abs(oe.coefficients), np.abs(o.coefficients), atol=1e-14)
    assert abs(oe.coefficients[3] - np.exp(-1j * basis.energies[3] * 17.0)) < 1e-10


def test_time_reversal(basis, wells):
    o = expand(wells[1], basis)
    ot = evolve(o, 123.0)
    back = ot.coefficients * np.exp(1j * basis.energies * 123.0)
    assert np.allclose(back, o.coefficients, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(t=st.floats(min_value=0.0, max_value=1e5, allow_nan=False))
def test_norm_and_split_conservation(basis, wells, t):
    o = evolve(expand(wells[0], basis), t)
    assert abs(np.sum(np.abs(o.coefficients) ** 2) - 1) <= 1e-10
    s = split_system(o)
    assert -1e-10 <= s.p1 <= 1 + 1e-10
    assert abs(s.p1 + s.pe - 1) <= 1e-10


def test_confined_initial_state(basis, wells):
    s = split_system(expand(wells[0], basis))
    assert abs(s.p1 - 1) < 1e-8
    assert np.max(np.abs(s.e_part)) < 1e-8


def test_survival_matches_split(basis, wells):
    o = expand(wells[0], basis)
    times = np.array([0.0, 5.0, 40.0, 300.0])
    p = survival_probability(o, times)
    ref = [split_system(evolve(o, t)).p1 for t in times]
    assert np.allclose(p, ref, atol=1e-12)


def test_correlation_examples(basis, wells):
    o = expand(wells[0], basis)
    assert abs(abs(correlation(o, wells[0])) - 1) < 1e-8
    assert abs(correlation(o, wells[1])) < 1e-8
    times = np.linspace(0, 500, 41)
    p1 = survival_probability(o, times)
    ac = autocorrelation(o, times)
    direct = [abs(correlation(evolve(o, t), wells[0])) ** 2 for t in times]
    assert np.allclose(ac, direct, atol=1e-12)
    assert np.all(ac <= p1 + 1e-10)


def test_internal_label_does_not_change_dynamics(basis, wells):
    a = evolve(expand(wells[0], basis, internal=0), 50.0)
    b = evolve(replace(expand(wells[0], basis), internal=1), 50.0)
    assert np.array_equal(a.coefficients, b.coefficients)


def test_high_barrier_decouples():
    # v0 -> infinity limit: the two boxes decouple and |1> stays put
    spec = PotentialSpec(l=50.0, b=2.0, r=4000.0, v0=1e3)
    fem = assemble_fem(spec, 0.5)
    basis = solve_modes(fem)
    o = expand(isolated_well_modes(spec, 0.5, 1, fem=fem)[0], basis)
    p = survival_probability(o, np.linspace(0, 20000, 41))
    assert np.all(p >= 0.99)


@pytest.mark.xfail(strict=True, reason="e_cut = 4*v0 leaves a completeness defect of ~7e-5 "
                   "for |1>; the complete basis is the default instead")
def test_cutoff_04_example_default_geometry():
    spec = PotentialSpec()
    fem = assemble_fem(spec, 0.5)
    basis = solve_modes(fem, 0.4)
    o = expand(isolated_well_modes(spec, 0.5, 1, fem=fem)[0], basis)
    assert o.completeness_defect <= 1e-8

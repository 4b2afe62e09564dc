from math import factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import eval_hermite

from bsmc.errors import DivergenceError, MappingError, SingularityError
from bsmc.linalg import unitarity_defect
from bsmc.physics import (
    EfimovParams,
    SpatialGrid,
    configuration_to_pattern,
    default_half_range,
    efimov_potential,
    encode_unitary,
    hard_shell,
    hyperradius_sq,
    orbital,
    pattern_to_configuration,
    refinement_grid,
)

# 99.9% mean-density rule for orbitals 0..2 at m=12, from an independent
# scipy.special Hermite quadrature
DEFAULT_HALF_RANGE = 2.8196483925382148


def test_orbital_values():
    assert orbital(0, 0.0) == pytest.approx(np.pi**-0.25, abs=1e-15)
    assert orbital(1, 0.0) == 0.0


def test_orbital_normalized_by_quadrature():
    x = np.linspace(-10, 10, 10_000)
    assert np.trapezoid(orbital(2, x) ** 2, x) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("i", range(8))
def test_orbital_matches_closed_form(i):
    x = np.linspace(-5, 5, 41)
    ref = eval_hermite(i, x) * np.exp(-x**2 / 2) / np.sqrt(2**i * factorial(i) * np.sqrt(np.pi))
    assert np.allclose(orbital(i, x), ref, atol=1e-13)


def test_default_half_range_matches_oracle():
    assert default_half_range(12, (0, 1, 2)) == pytest.approx(DEFAULT_HALF_RANGE, rel=1e-9)


def test_grid_uniform_and_symmetric():
    g = SpatialGrid.uniform(12, 2.5)
    assert g.m == 12 and g.spacing == pytest.approx(5 / 11)
    assert np.allclose(g.positions, -g.positions[::-1])
    assert np.allclose(np.diff(g.bin_edges), g.spacing)


@pytest.mark.parametrize("k", [0, 1, 2, 3, 4, 8])
def test_refinement_keeps_base_points(k):
    base = SpatialGrid.uniform(12, 2.8)
    fine = refinement_grid(12 + 11 * k, 2.8)
    assert fine.m == 12 + 11 * k
    assert np.array_equal(fine.positions[:: k + 1], base.positions)
    assert fine.base_spacing == base.spacing
    assert np.allclose(np.diff(fine.positions), base.spacing / (k + 1))


def test_refinement_rejects_unreachable_m():
    with pytest.raises(ValueError):
        refinement_grid(96, 2.8)


def test_encoding_is_unitary_with_orbital_rows():
    g = SpatialGrid.uniform(12, DEFAULT_HALF_RANGE)
    u, dev = encode_unitary((0, 1, 2), g)
    assert unitarity_defect(u) <= 1e-10
    assert dev < 1e-4
    raw = np.sqrt(g.spacing) * orbital(1, g.positions)
    assert np.allclose(u[1], raw / np.linalg.norm(raw), atol=1e-4)


def test_encoding_orbital_rows_equal_lowdin_orthonormalization():
    # the polar factor's orbital block does not depend on how the rest is completed
    g = SpatialGrid.uniform(12, DEFAULT_HALF_RANGE)
    u, _ = encode_unitary((0, 1, 2), g)
    r = np.array([orbital(i, g.positions) for i in range(3)])
    r /= np.linalg.norm(r, axis=1, keepdims=True)
    w, v = np.linalg.eigh(r @ r.T)
    lowdin = (v @ np.diag(w**-0.5) @ v.T) @ r
    assert np.allclose(u[:3], lowdin, atol=1e-13)


def test_raw_rows_nearly_orthogonal_at_m48():
    g = SpatialGrid.uniform(48, 5.0)
    r = np.array([np.sqrt(g.spacing) * orbital(i, g.positions) for i in range(2)])
    assert abs(r[0] @ r[1]) <= 1e-6


def test_raw_deviation_converges_along_refinement():
    # on a range wide enough that truncation is negligible the deviation
    # falls with every refinement until it reaches round-off
    devs = [encode_unitary((0, 1, 2), refinement_grid(m, 6.0))[1] for m in (12, 23, 34, 45, 56)]
    for a, b in zip(devs, devs[1:]):
        assert b <= a or b <= 1e-14
    assert devs[-1] <= 1e-14 < devs[0]


def test_encoding_needs_enough_modes():
    with pytest.raises(SingularityError):
        encode_unitary((0, 1, 2), SpatialGrid.uniform(2, 1.0))


def test_pattern_mapping():
    g = SpatialGrid.uniform(12, 2.0)
    p = np.zeros(12, dtype=int)
    p[:3] = 1
    assert np.array_equal(pattern_to_configuration(p, g), g.positions[:3])
    q = np.zeros(12, dtype=int)
    q[[0, 5, 11]] = 1
    assert np.array_equal(pattern_to_configuration(q, g), g.positions[[0, 5, 11]])
    with pytest.raises(MappingError):
        pattern_to_configuration(np.r_[2, 1, np.zeros(10, int)], g)


@given(st.lists(st.integers(0, 11), min_size=3, max_size=3, unique=True),
       st.lists(st.floats(-0.49, 0.49), min_size=3, max_size=3))
def test_pattern_roundtrip_through_jittered_positions(modes, frac):
    g = SpatialGrid.uniform(12, 2.0)
    p = np.zeros(12, dtype=int)
    p[modes] = 1
    x = pattern_to_configuration(p, g) + np.array(frac) * g.spacing
    assert np.array_equal(configuration_to_pattern(x, g), p)


def test_efimov_examples():
    params = EfimovParams(C=0.0)
    assert efimov_potential([0.0, 1.0, 2.0], params) == pytest.approx(-0.0625)
    d, C = 0.7, 0.3
    assert hyperradius_sq([1.0, 1 + d, 1 + 2 * d]) == pytest.approx(4 * d * d)
    assert efimov_potential([1.0, 1 + d, 1 + 2 * d], EfimovParams(C=C)) == pytest.approx(-(C + 0.25) / (4 * d * d))
    with pytest.raises(DivergenceError):
        efimov_potential([1.0, 1.0, 1.0], params)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3, unique=True), st.floats(-10, 10))
def test_efimov_translation_invariant(x, c):
    x = np.array(x)
    if hyperradius_sq(x) < 1e-6:
        return
    p = EfimovParams(C=0.5)
    assert efimov_potential(x + c, p) == pytest.approx(efimov_potential(x, p), rel=1e-8)


def test_hard_shell_boundary_cases():
    assert hard_shell([0.0, 1.0, 2.0], 1.0, "include")
    assert not hard_shell([0.0, 1.0, 2.0], 1.0, "exclude")
    assert not hard_shell([0.0, 0.5, 2.0], 1.0, "include")
    assert not hard_shell([0.0, 0.5, 2.0], 1.0, "exclude")


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.floats(0.05, 2))
def test_exclude_acceptance_implies_include(x, d):
    if hard_shell(x, d, "exclude"):
        assert hard_shell(x, d, "include")

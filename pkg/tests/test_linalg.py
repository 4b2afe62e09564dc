import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bsmc.errors import DimensionError, SingularityError, SizeError
from bsmc.linalg import (
    amplitude_fidelity,
    check_unitary,
    gurvits_estimate,
    nearest_unitary,
    permanent,
    permanent_batch,
    random_unitary,
    unitarity_defect,
)
from conftest import perm_oracle, random_complex


def test_permanent_small_cases():
    assert permanent(np.eye(2)) == 1
    assert permanent([[1, 2], [3, 4]]) == pytest.approx(10)
    assert permanent(np.ones((3, 3))) == pytest.approx(6)
    assert permanent([[7.5]]) == pytest.approx(7.5)


@pytest.mark.parametrize("method", ["ryser", "glynn"])
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_permanent_matches_oracle(method, n, rng):
    a = random_complex(rng, n)
    want = perm_oracle(a)
    assert abs(permanent(a, method) - want) <= 1e-12 * max(1.0, abs(want))


def test_permanent_batch_matches_scalar(rng):
    mats = np.stack([random_complex(rng, 4) for _ in range(7)])
    got = permanent_batch(mats)
    want = np.array([permanent(m) for m in mats])
    assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


def test_permanent_rejects_bad_shapes():
    with pytest.raises(DimensionError):
        permanent(np.ones((2, 3)))
    with pytest.raises(SizeError):
        permanent(np.ones((31, 31)))


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_permanent_invariant_under_row_and_column_permutations(n, seed):
    rng = np.random.default_rng(seed)
    a = random_complex(rng, n)
    p, q = rng.permutation(n), rng.permutation(n)
    ref = permanent(a)
    assert abs(permanent(a[p][:, q]) - ref) <= 1e-10 * max(1.0, abs(ref))
    assert abs(permanent(a.T) - ref) <= 1e-10 * max(1.0, abs(ref))


@given(st.integers(1, 5), st.integers(0, 2**32 - 1), st.floats(-3, 3))
def test_permanent_is_linear_in_each_row(n, seed, c):
    rng = np.random.default_rng(seed)
    a = random_complex(rng, n)
    b = a.copy()
    b[0] *= c
    assert abs(permanent(b) - c * permanent(a)) <= 1e-9 * max(1.0, abs(permanent(a)))


def test_gurvits_zero_matrix_is_exact():
    est, err = gurvits_estimate(np.zeros((3, 3)), 1000, seed=1)
    assert est == 0 and err == 0


def test_gurvits_identity_within_three_sigma():
    est, err = gurvits_estimate(np.eye(3), 100_000, seed=2)
    assert abs(est - 1) <= 3 * err + 1e-12


def test_gurvits_stderr_halves_with_four_times_samples(rng):
    u = random_unitary(6, rng)[:3, :3]
    _, e1 = gurvits_estimate(u, 20_000, seed=3)
    _, e4 = gurvits_estimate(u, 80_000, seed=4)
    assert e4 / e1 == pytest.approx(0.5, rel=0.2)


def test_gurvits_is_seeded():
    a = random_complex(np.random.default_rng(0), 3)
    assert gurvits_estimate(a, 500, 9) == gurvits_estimate(a, 500, 9)


def test_nearest_unitary_cases(rng):
    u = random_unitary(5, rng)
    assert np.linalg.norm(nearest_unitary(u) - u) < 1e-12
    assert np.allclose(nearest_unitary(np.diag([2.0, 3.0])), np.eye(2))
    noisy = u + 0.05 * random_complex(rng, 5)
    w = nearest_unitary(noisy)
    assert unitarity_defect(w) <= 1e-10
    assert np.linalg.norm(w - u) < np.linalg.norm(noisy - u)


def test_nearest_unitary_rejects_rank_deficient():
    with pytest.raises(SingularityError):
        nearest_unitary(np.ones((3, 3)))


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_nearest_unitary_output_is_unitary(m, seed):
    a = random_complex(np.random.default_rng(seed), m)
    assert unitarity_defect(nearest_unitary(a)) <= 1e-10


def test_check_unitary():
    check_unitary(np.eye(3))
    with pytest.raises(ValueError):
        check_unitary(np.diag([1.0, 2.0]))


def test_amplitude_fidelity_cases(rng):
    u = random_unitary(6, rng)
    assert amplitude_fidelity(u, u) == pytest.approx(1.0, abs=1e-12)
    swap = np.array([[0, 1], [1, 0]])
    assert amplitude_fidelity(np.eye(2), swap) == 0.0
    with pytest.raises(DimensionError):
        amplitude_fidelity(np.eye(2), np.eye(3))


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_amplitude_fidelity_symmetric_and_bounded(m, seed):
    rng = np.random.default_rng(seed)
    u, v = random_unitary(m, rng), random_unitary(m, rng)
    f = amplitude_fidelity(u, v)
    assert f == pytest.approx(amplitude_fidelity(v, u), abs=1e-12)
    assert 0 <= f <= 1 + 1e-12

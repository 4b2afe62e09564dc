"""Dense complex linear algebra: permanents, randomized permanent
estimation, nearest-unitary projection and the amplitude fidelity metric.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np

from .errors import DimensionError, SingularityError, SizeError

MAX_PERMANENT_DIM = 30
UNITARY_TOL = 1e-10
RANK_TOL = 1e-12


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def _square(a) -> np.ndarray:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def unitarity_defect(u) -> float:
    """Max-norm of ``U^dagger U - I``."""
    u = _square(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def check_unitary(u, tol: float = UNITARY_TOL) -> np.ndarray:
    u = _square(u)
    defect = unitarity_defect(u)
    if defect > tol:
        raise ValueError(f"matrix is not unitary (defect {defect:.3e} > {tol:.0e})")
    return u


def permanent(a, method: str = "ryser") -> complex:
    """Exact permanent of a square matrix.

    ``method`` is ``"ryser"`` (default, Gray-code ordered inclusion-exclusion)
    or ``"glynn"``. Both cost O(2^n n).
    """
    a = _square(a)
    n = a.shape[0]
    if n > MAX_PERMANENT_DIM:
        raise SizeError(f"permanent of a {n}x{n} matrix exceeds the n <= {MAX_PERMANENT_DIM} guard")
    if method == "ryser":
        return _ryser(a)
    if method == "glynn":
        return _glynn(a)
    raise ValueError(f"unknown permanent method {method!r}")


def _gray_flips(k: int):
    """Yield (bit index, +1/-1) for successive Gray-code steps over k bits."""
    state = 0
    for g in range(1, 2**k):
        bit = (g & -g).bit_length() - 1
        state ^= 1 << bit
        yield bit, (1 if state >> bit & 1 else -1)


def _ryser(a: np.ndarray) -> complex:
    n = a.shape[0]
    row_sums = np.zeros(n, dtype=complex)
    total = 0j
    size = 0
    for col, sign in _gray_flips(n):
        row_sums += sign * a[:, col]
        size += sign
        term = np.prod(row_sums)
        total += term if size % 2 == 0 else -term
    return complex((-1) ** n * total)


def _glynn(a: np.ndarray) -> complex:
    n = a.shape[0]
    # delta_0 fixed to +1; the remaining signs walk a Gray code
    col_sums = a.sum(axis=0)
    parity = 1
    total = np.prod(col_sums)
    for bit, sign in _gray_flips(n - 1):
        row = bit + 1
        # sign=+1 means delta flipped from +1 to -1
        col_sums = col_sums - 2 * sign * a[row, :]
        parity = -parity
        total += parity * np.prod(col_sums)
    return complex(total / 2 ** (n - 1))


def permanent_batch(a: np.ndarray) -> np.ndarray:
    """Permanents of a stack of small square matrices, shape (..., n, n).

    Vectorized Ryser formula over all column subsets; meant for n <= ~12.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[-1]
    if a.shape[-2] != n:
        raise DimensionError(f"expected square trailing dims, got {a.shape}")
    if n == 0:
        return np.ones(a.shape[:-2], dtype=complex)
    total = np.zeros(a.shape[:-2], dtype=complex)
    for size in range(1, n + 1):
        sign = (-1) ** (n - size)
        for cols in combinations(range(n), size):
            total += sign * np.prod(a[..., list(cols)].sum(axis=-1), axis=-1)
    return total


def gurvits_estimate(a, num_samples: int, seed: int) -> tuple[complex | float, float]:
    """Randomized permanent estimate from Glynn's random-sign identity.

    Each sample draws x uniformly from {-1, +1}^n and contributes
    ``prod(x) * prod(x @ A)``, whose expectation is Perm(A). The standard error
    is the sample standard deviation over sqrt(num_samples).
    """
    a = _square(a)
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    rng = np.random.default_rng(seed)
    n = a.shape[0]
    terms = np.empty(num_samples, dtype=complex)
    chunk = max(1, 2**20 // max(n, 1))
    for start in range(0, num_samples, chunk):
        stop = min(start + chunk, num_samples)
        x = rng.choice((-1.0, 1.0), size=(stop - start, n))
        terms[start:stop] = np.prod(x, axis=1) * np.prod(x @ a, axis=1)
    est = terms.mean()
    if num_samples > 1:
        var = terms.real.var(ddof=1) + terms.imag.var(ddof=1)
        stderr = float(np.sqrt(var / num_samples))
    else:
        stderr = 0.0
    if np.isrealobj(a) or np.all(a.imag == 0):
        return float(est.real), stderr
    return complex(est), stderr


def nearest_unitary(a) -> np.ndarray:
    """Unitary polar factor ``W V^dagger`` of ``A = W S V^dagger``.

    This is the unitary closest to ``A`` in Frobenius norm.
    """
    a = _square(a)
    w, s, vh = np.linalg.svd(a)
    if s.min() <= RANK_TOL:
        raise SingularityError(f"matrix is rank deficient (smallest singular value {s.min():.3e})")
    u = w @ vh
    if unitarity_defect(u) > UNITARY_TOL:
        # badly conditioned input; a second pass on the near-unitary result is exact to round-off
        w, _, vh = np.linalg.svd(u)
        u = w @ vh
    return u


def amplitude_fidelity(u_set, u_get) -> float:
    """(1/m) Tr(|U_set^dagger| |U_get|) with element-wise moduli.

    Not clamped: unnormalized columns can push the value slightly above 1.
    """
    u_set = _square(u_set)
    u_get = _square(u_get)
    if u_set.shape != u_get.shape:
        raise DimensionError(f"dimension mismatch: {u_set.shape} vs {u_get.shape}")
    m = u_set.shape[0]
    return float(np.trace(np.abs(u_set.conj().T) @ np.abs(u_get)) / m)


def random_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))

"""Boson-sampling output distributions.

Transfer-matrix convention: ``U[out, in]`` is the amplitude for a photon
entering input mode ``in`` to leave through output mode ``out``. The
submatrix for an event takes rows from the occupied output modes and columns
from the occupied input modes, each repeated by its occupancy.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations, combinations_with_replacement, permutations
from math import comb, factorial

import numpy as np

from .errors import DimensionError, ModelError, SizeError
from .linalg import amplitude_fidelity, check_unitary, nearest_unitary, permanent, permanent_batch

MAX_PARTIAL_PHOTONS = 6
GRAM_PSD_TOL = 1e-10


def as_pattern(counts, m: int | None = None) -> np.ndarray:
    p = np.asarray(counts)
    if p.ndim != 1 or not np.all(p == np.round(p)):
        raise ValueError("occupation pattern must be a 1-D vector of integers")
    p = p.astype(int)
    if np.any(p < 0):
        raise ValueError("occupation counts must be non-negative")
    if m is not None and p.size != m:
        raise DimensionError(f"pattern has {p.size} modes, expected {m}")
    return p


def modes_of(counts) -> np.ndarray:
    """Sorted list of occupied modes, repeated by occupancy."""
    counts = as_pattern(counts)
    return np.repeat(np.arange(counts.size), counts)


def counts_of(modes, m: int) -> np.ndarray:
    counts = np.zeros(m, dtype=int)
    np.add.at(counts, np.asarray(modes, dtype=int), 1)
    return counts


def bitstring(counts) -> str:
    return "".join(str(int(c)) for c in counts)


def input_pattern(m: int, n: int = 3) -> np.ndarray:
    """Default input (1, ..., 1, 0, ..., 0) with n photons in the first modes."""
    p = np.zeros(m, dtype=int)
    p[:n] = 1
    return p


# --- Gram matrices -----------------------------------------------------------


def validate_gram(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ModelError(f"Gram matrix must be square, got {s.shape}")
    if not np.allclose(s, s.T, atol=1e-12):
        raise ModelError("Gram matrix must be symmetric")
    if not np.allclose(np.diag(s), 1.0, atol=1e-12):
        raise ModelError("Gram matrix must have unit diagonal")
    if np.any(np.abs(s) > 1 + 1e-12):
        raise ModelError("overlaps must lie in [-1, 1]")
    if np.linalg.eigvalsh(s).min() < -GRAM_PSD_TOL:
        raise ModelError("Gram matrix is not positive semidefinite")
    return s


def gram_homogeneous(n: int, s: float) -> np.ndarray:
    """All pairs share overlap s."""
    if not 0.0 <= s <= 1.0:
        raise ModelError(f"overlap s={s} outside [0, 1]")
    g = np.full((n, n), float(s))
    np.fill_diagonal(g, 1.0)
    return validate_gram(g)


def gram_from_visibilities(visibilities) -> np.ndarray:
    """Gram matrix from pairwise HOM visibilities V_ij = s_ij^2 (s_ij >= 0).

    ``visibilities`` lists pairs in (0,1), (0,2), ..., (1,2), ... order.
    """
    vis = np.asarray(visibilities, dtype=float)
    n = int(round((1 + np.sqrt(1 + 8 * vis.size)) / 2))
    if n * (n - 1) // 2 != vis.size:
        raise ModelError(f"{vis.size} visibilities do not fill a Gram matrix")
    if np.any(vis < 0) or np.any(vis > 1):
        raise ModelError("visibilities must lie in [0, 1]")
    g = np.eye(n)
    iu = np.triu_indices(n, 1)
    g[iu] = np.sqrt(vis)
    g.T[iu] = np.sqrt(vis)
    return validate_gram(g)


def mean_overlap(s) -> float:
    s = np.asarray(s)
    iu = np.triu_indices(s.shape[0], 1)
    return float(s[iu].mean()) if iu[0].size else 1.0


# --- single-event probabilities ---------------------------------------------


def submatrix(u, mu_in, mu_out) -> np.ndarray:
    u = np.asarray(u)
    m = u.shape[0]
    mu_in = as_pattern(mu_in, m)
    mu_out = as_pattern(mu_out, m)
    if mu_in.sum() != mu_out.sum():
        raise DimensionError(f"photon numbers differ: {mu_in.sum()} in, {mu_out.sum()} out")
    return u[np.ix_(modes_of(mu_out), modes_of(mu_in))]


def _norm_factor(mu_in, mu_out) -> float:
    return float(np.prod([factorial(int(c)) for c in mu_in]) * np.prod([factorial(int(c)) for c in mu_out]))


def output_probability(u, mu_in, mu_out) -> float:
    """|Perm(M)|^2 / (prod mu_out! prod mu_in!) for indistinguishable photons."""
    mu_in = as_pattern(mu_in)
    mu_out = as_pattern(mu_out)
    mat = submatrix(u, mu_in, mu_out)
    return abs(permanent(mat)) ** 2 / _norm_factor(mu_in, mu_out)


def _perm_products(mats: np.ndarray, perms: list[tuple[int, ...]]) -> np.ndarray:
    """prod_k M[..., k, sigma(k)] for every sigma, shape (..., n!)."""
    n = mats.shape[-1]
    rows = np.arange(n)
    return np.stack([np.prod(mats[..., rows, list(p)], axis=-1) for p in perms], axis=-1)


def _overlap_weights(s: np.ndarray, perms: list[tuple[int, ...]]) -> np.ndarray:
    """W[sigma, rho] = prod_k S[rho(k), sigma(k)]."""
    idx = np.array(perms)
    return np.prod(s[idx[None, :, :], idx[:, None, :]], axis=-1)


def output_probability_partial(u, mu_in, mu_out, s) -> float:
    """Event probability for partially distinguishable photons.

    Double sum over sigma, rho in S_n of
    prod_k M[k, sigma(k)] conj(M[k, rho(k)]) S[rho(k), sigma(k)], divided by the
    occupancy factorials. S all-ones gives the indistinguishable law, S = I
    the distinguishable one (permanent of |M|^2).
    """
    mu_in = as_pattern(mu_in)
    mu_out = as_pattern(mu_out)
    s = validate_gram(s)
    n = int(mu_in.sum())
    if s.shape[0] != n:
        raise ModelError(f"Gram matrix is {s.shape[0]}x{s.shape[0]}, need {n}x{n}")
    if n > MAX_PARTIAL_PHOTONS:
        raise SizeError(f"partial-distinguishability sum limited to n <= {MAX_PARTIAL_PHOTONS}")
    mat = submatrix(u, mu_in, mu_out)
    perms = list(permutations(range(n)))
    a = _perm_products(mat, perms)
    w = _overlap_weights(s, perms)
    p = np.real(a @ w @ a.conj()) / _norm_factor(mu_in, mu_out)
    return float(p)


# --- full distributions -----------------------------------------------------


def unitary_fingerprint(u) -> str:
    u = np.ascontiguousarray(np.asarray(u, dtype=complex))
    return hashlib.sha256(u.tobytes()).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class OutputDistribution:
    """Probabilities over output patterns, stored as sorted occupied-mode lists.

    Patterns follow the lexicographic order of their mode lists, so
    111000000000 precedes 110100000000.
    """

    modes: np.ndarray
    probs: np.ndarray
    m: int
    meta: dict = field(default_factory=dict)
    stderr: np.ndarray | None = None
    unitary: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=int)
        probs = np.asarray(self.probs, dtype=float)
        if modes.ndim != 2 or modes.shape[0] != probs.shape[0]:
            raise DimensionError("modes must be (patterns, n) and match probs")
        if np.any(probs < -1e-15):
            raise ValueError("negative probability")
        if abs(probs.sum() - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {probs.sum():.12f}, not 1")
        for arr in (modes, probs):
            arr.setflags(write=False)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "probs", np.clip(probs, 0.0, None))

    def __len__(self) -> int:
        return self.probs.size

    @property
    def n(self) -> int:
        return self.modes.shape[1]

    @property
    def collision_free(self) -> bool:
        return bool(np.all(np.diff(self.modes, axis=1) > 0))

    @cached_property
    def patterns(self) -> np.ndarray:
        """Occupation counts, shape (patterns, m)."""
        counts = np.zeros((len(self), self.m), dtype=int)
        np.add.at(counts, (np.repeat(np.arange(len(self)), self.n), self.modes.ravel()), 1)
        return counts

    @cached_property
    def bitstrings(self) -> list[str]:
        return [bitstring(p) for p in self.patterns]

    @cached_property
    def _index(self) -> dict[tuple[int, ...], int]:
        return {tuple(r): i for i, r in enumerate(self.modes.tolist())}

    def index_of(self, counts) -> int:
        return self._index[tuple(modes_of(counts).tolist())]

    def index_of_modes(self, modes: np.ndarray) -> np.ndarray:
        """Row index of each sorted mode list in ``modes`` (k, n)."""
        return np.array([self._index[tuple(r)] for r in np.asarray(modes).tolist()], dtype=int)

    def with_probs(self, probs, **meta) -> "OutputDistribution":
        return OutputDistribution(self.modes, probs, self.m, {**self.meta, **meta}, None, self.unitary)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["pattern", "probability"] + (["stderr"] if self.stderr is not None else [])
        w.writerow(header)
        for i, b in enumerate(self.bitstrings):
            row = [b, repr(float(self.probs[i]))]
            if self.stderr is not None:
                row.append(repr(float(self.stderr[i])))
            w.writerow(row)
        return buf.getvalue()

    def to_dict(self) -> dict:
        d = {
            "meta": _jsonable(self.meta),
            "m": self.m,
            "n": self.n,
            "patterns": self.bitstrings,
            "probabilities": [float(p) for p in self.probs],
        }
        if self.stderr is not None:
            d["stderr"] = [float(e) for e in self.stderr]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "OutputDistribution":
        m = int(d["m"])
        modes = np.array([modes_of([int(c) for c in b]) for b in d["patterns"]], dtype=int)
        stderr = np.array(d["stderr"]) if "stderr" in d else None
        return cls(modes, np.array(d["probabilities"]), m, dict(d.get("meta", {})), stderr)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def pattern_modes(m: int, n: int, collision_free: bool = True) -> np.ndarray:
    """All sorted mode lists of n photons in m modes, lexicographic."""
    gen = combinations(range(m), n) if collision_free else combinations_with_replacement(range(m), n)
    count = comb(m, n) if collision_free else comb(m + n - 1, n)
    return np.fromiter((i for c in gen for i in c), dtype=int, count=count * n).reshape(count, n)


def _is_all_ones(s) -> bool:
    return s is None or np.all(np.asarray(s) == 1.0)


def _occupancy_factorials(modes: np.ndarray) -> np.ndarray:
    """prod_j (count_j)! for each sorted mode list."""
    out = np.ones(modes.shape[0])
    run = np.ones(modes.shape[0])
    for k in range(1, modes.shape[1]):
        same = modes[:, k] == modes[:, k - 1]
        run = np.where(same, run + 1, 1.0)
        out *= run
    return out


def event_probabilities(u, mu_in, modes: np.ndarray, s=None) -> np.ndarray:
    """Unnormalized-by-postselection probabilities for a batch of output mode lists."""
    u = np.asarray(u)
    mu_in = as_pattern(mu_in, u.shape[0])
    in_modes = modes_of(mu_in)
    n = in_modes.size
    norm = _occupancy_factorials(modes) * float(np.prod([factorial(int(c)) for c in mu_in]))
    chunk = 50_000
    out = np.empty(modes.shape[0])
    if _is_all_ones(s):
        for a in range(0, modes.shape[0], chunk):
            mats = u[modes[a:a + chunk, :, None], in_modes[None, None, :]]
            out[a:a + chunk] = np.abs(permanent_batch(mats)) ** 2
    else:
        s = validate_gram(s)
        if s.shape[0] != n:
            raise ModelError(f"Gram matrix is {s.shape[0]}x{s.shape[0]}, need {n}x{n}")
        if n > MAX_PARTIAL_PHOTONS:
            raise SizeError(f"partial-distinguishability sum limited to n <= {MAX_PARTIAL_PHOTONS}")
        perms = list(permutations(range(n)))
        w = _overlap_weights(s, perms)
        for a in range(0, modes.shape[0], chunk):
            mats = u[modes[a:a + chunk, :, None], in_modes[None, None, :]]
            amp = _perm_products(mats, perms)
            out[a:a + chunk] = np.real(np.einsum("ps,sr,pr->p", amp, w, amp.conj()))
    return out / norm


def enumerate_distribution(u, mu_in, s=None, collision_free: bool = True) -> OutputDistribution:
    """Full output distribution for input ``mu_in`` through ``U``.

    With ``collision_free`` the collision-free events are renormalized (click
    detector postselection) and the kept mass is recorded as
    ``meta["postselection_mass"]``.
    """
    u = check_unitary(u)
    m = u.shape[0]
    mu_in = as_pattern(mu_in, m)
    n = int(mu_in.sum())
    modes = pattern_modes(m, n, collision_free)
    probs = event_probabilities(u, mu_in, modes, s)
    mass = float(probs.sum())
    gram = np.ones((n, n)) if s is None else validate_gram(s)
    meta = {
        "unitary_fingerprint": unitary_fingerprint(u),
        "mu_in": bitstring(mu_in),
        "gram": gram.tolist(),
        "mean_overlap": mean_overlap(gram),
        "collision_free": collision_free,
        "postselection_mass": mass,
    }
    if collision_free:
        probs = probs / mass
    return OutputDistribution(modes, probs, m, meta, None, u)


def sample_patterns(dist: OutputDistribution, n_samples: int, seed: int) -> np.ndarray:
    """i.i.d. draws by inverse CDF over the stored pattern order.

    Returns occupation counts, shape (n_samples, m).
    """
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    idx = sample_indices(dist, n_samples, seed)
    return dist.patterns[idx]


def sample_indices(dist: OutputDistribution, n_samples: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(dist.probs)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(n_samples), side="right")
    return np.minimum(idx, len(dist) - 1)


def perturb_unitary(u, epsilon: float, seed: int) -> tuple[np.ndarray, float]:
    """Add complex Gaussian noise of scale epsilon to every element, then
    project back to the nearest unitary. Returns (noisy U, amplitude fidelity)."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    u = check_unitary(u)
    if epsilon == 0:
        return u.copy(), amplitude_fidelity(u, u)
    rng = np.random.default_rng(seed)
    m = u.shape[0]
    noise = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2)
    noisy = nearest_unitary(u + epsilon * noise)
    return noisy, amplitude_fidelity(u, noisy)

"""Validation and hardness diagnostics on output distributions."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations
from math import comb
from pathlib import Path

import numpy as np

from .errors import DataError, SupportError
from .sampler import OutputDistribution, pattern_modes


@dataclass(frozen=True)
class MarginalDistribution:
    """k-photon marginal table.

    ``table[i]`` is E[prod_j C(n_j, a_j)] for the event multiset
    ``events[i]`` (a_j photons in mode j). For collision-free distributions
    this is the probability that all modes of the event are occupied; for
    k = 1 it is the expected photon count per mode.
    """

    k: int
    n: int
    mode_subset: tuple[int, ...]
    events: np.ndarray
    table: np.ndarray

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {tuple(e): float(p) for e, p in zip(self.events.tolist(), self.table)}


def k_marginal(dist: OutputDistribution, modes=None, k: int = 1) -> MarginalDistribution:
    """Sum the full distribution over all patterns consistent with each
    k-photon event inside ``modes`` (default: all modes)."""
    n = dist.n
    if not 1 <= k <= n:
        raise ValueError(f"marginal order k={k} must satisfy 1 <= k <= n={n}")
    subset = tuple(range(dist.m)) if modes is None else tuple(sorted(set(int(j) for j in modes)))
    if any(j < 0 or j >= dist.m for j in subset):
        raise ValueError("mode subset outside 0..m-1")
    # each choice of k photon slots of a pattern yields one sub-multiset; the
    # number of slot choices giving multiset A is prod_j C(n_j, a_j)
    keys, weights = [], []
    for slots in combinations(range(n), k):
        keys.append(dist.modes[:, list(slots)])
        weights.append(dist.probs)
    keys = np.concatenate(keys)
    weights = np.concatenate(weights)
    inside = np.isin(keys, subset).all(axis=1)
    events, inverse = np.unique(keys[inside], axis=0, return_inverse=True)
    table = np.bincount(np.asarray(inverse).ravel(), weights=weights[inside], minlength=len(events))
    return MarginalDistribution(k, n, subset, events, table)


def reduce_marginal(marg: MarginalDistribution, m: int) -> MarginalDistribution:
    """(k-1)-marginal from a k-marginal over all m modes.

    Uses sum_j (a_j + 1) F(A + e_j) = (n - k + 1) F(A).
    """
    if marg.k < 2:
        raise ValueError("cannot reduce a 1-marginal")
    if marg.mode_subset != tuple(range(m)):
        raise ValueError("reduction needs a marginal over all modes")
    k, n = marg.k, marg.n
    acc: dict[tuple[int, ...], float] = {}
    for event, val in zip(marg.events.tolist(), marg.table):
        for drop in range(k):
            if drop > 0 and event[drop] == event[drop - 1]:
                continue
            sub = tuple(event[:drop] + event[drop + 1:])
            mult = event.count(event[drop])
            # (a_j + 1) with a_j the multiplicity of the dropped mode in sub
            acc[sub] = acc.get(sub, 0.0) + mult * val
    events = np.array(sorted(acc), dtype=int).reshape(len(acc), k - 1)
    table = np.array([acc[tuple(e)] for e in events.tolist()]) / (n - k + 1)
    return MarginalDistribution(k - 1, n, marg.mode_subset, events, table)


def _same_support(p: OutputDistribution, q: OutputDistribution) -> None:
    if p.m != q.m or p.modes.shape != q.modes.shape or not np.array_equal(p.modes, q.modes):
        raise SupportError("distributions are defined on different pattern supports")


def tvd(p: OutputDistribution, q: OutputDistribution) -> float:
    """Total variation distance on a common, identically ordered support."""
    _same_support(p, q)
    return float(0.5 * np.abs(p.probs - q.probs).sum())


@dataclass(frozen=True)
class BinPartition:
    """Assignment of every pattern of a distribution to one of K bins."""

    assignment: np.ndarray
    K: int

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=int)
        if a.ndim != 1:
            raise ValueError("assignment must be 1-D")
        if a.min() < 0 or a.max() >= self.K:
            raise ValueError("bin index outside 0..K-1")
        object.__setattr__(self, "assignment", a)

    @classmethod
    def random(cls, n_patterns: int, K: int, seed: int) -> "BinPartition":
        """Random partition with every bin non-empty."""
        if not 1 <= K <= n_patterns:
            raise ValueError("need 1 <= K <= number of patterns")
        rng = np.random.default_rng(seed)
        assignment = np.concatenate([np.arange(K), rng.integers(0, K, n_patterns - K)])
        return cls(rng.permutation(assignment), K)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.K)

    def masses(self, probs) -> np.ndarray:
        return np.bincount(self.assignment, weights=np.asarray(probs), minlength=self.K)

    def flatness(self, probs) -> float:
        """Largest within-bin probability spread."""
        probs = np.asarray(probs)
        hi = np.full(self.K, -np.inf)
        lo = np.full(self.K, np.inf)
        np.maximum.at(hi, self.assignment, probs)
        np.minimum.at(lo, self.assignment, probs)
        used = self.sizes() > 0
        return float(np.max(hi[used] - lo[used]))


@dataclass(frozen=True)
class CoarseGrainResult:
    approx: OutputDistribution
    tvd_bound: float
    tvd_actual: float
    flatness: float
    delta: float
    exact_masses: np.ndarray
    estimated_masses: np.ndarray


def gurvits_bin_masses(dist: OutputDistribution, partition: BinPartition, samples: int, seed: int) -> np.ndarray:
    """Bin masses from randomized permanent estimates of every pattern.

    Each |Perm M|^2 is estimated as Re(X conj(Y)) from two independent
    random-sign estimates X, Y of Perm M, which is unbiased. Needs an
    indistinguishable-photon distribution that carries its unitary.
    """
    u = dist.unitary
    gram = np.asarray(dist.meta.get("gram", 1.0))
    if u is None or not np.all(gram == 1.0):
        raise ValueError("randomized bin masses need an indistinguishable distribution with its unitary")
    mu_in = np.array([int(c) for c in dist.meta["mu_in"]])
    in_modes = np.repeat(np.arange(dist.m), mu_in)
    mats = u[dist.modes[:, :, None], in_modes[None, None, :]]
    rng = np.random.default_rng(seed)
    n = dist.n
    half = max(1, samples // 2)
    est = []
    for _ in range(2):
        x = rng.choice((-1.0, 1.0), size=(half, n))
        # (patterns, samples): prod(x) * prod_j (x @ M)_j
        proj = np.einsum("si,pij->psj", x, mats)
        est.append((np.prod(x, axis=1)[None, :] * np.prod(proj, axis=2)).mean(axis=1))
    p_hat = np.real(est[0] * np.conj(est[1]))
    mass = dist.meta.get("postselection_mass", 1.0) if dist.meta.get("collision_free", True) else 1.0
    return partition.masses(p_hat / mass)


def coarse_grain(dist: OutputDistribution, partition: BinPartition, gurvits_samples: int = 0, seed: int = 0) -> CoarseGrainResult:
    """Flatten ``dist`` inside each bin and check the TVD bound.

    Bin masses come from exact summation when ``gurvits_samples`` is 0 and
    from randomized permanent estimates otherwise (clipped at zero and
    renormalized). delta is the largest |exact - estimated| bin mass and the
    bound is sum_k (eps |B_k| + delta) with eps the largest within-bin spread.
    """
    if partition.assignment.size != len(dist):
        raise ValueError("partition does not cover the distribution's patterns")
    exact = partition.masses(dist.probs)
    if gurvits_samples > 0:
        est = np.clip(gurvits_bin_masses(dist, partition, gurvits_samples, seed), 0.0, None)
        est = est / est.sum()
    else:
        est = exact.copy()
    sizes = partition.sizes()
    approx_probs = est[partition.assignment] / sizes[partition.assignment]
    approx = dist.with_probs(approx_probs, coarse_grained_bins=partition.K)
    eps = partition.flatness(dist.probs)
    delta = float(np.max(np.abs(exact - est)))
    bound = float(np.sum(eps * sizes[sizes > 0] + delta))
    actual = tvd(dist, approx)
    if actual > bound * (1 + 1e-12) + 1e-15:
        raise AssertionError(f"coarse-graining bound violated: {actual} > {bound}")
    return CoarseGrainResult(approx, bound, actual, eps, delta, exact, est)


def ingest_counts(path, m: int = 12, n: int = 3) -> OutputDistribution:
    """Read a ``pattern,count[,efficiency_correction]`` CSV into a distribution
    over all C(m, n) collision-free patterns.

    Missing patterns get zero probability; the stderr column is the Poisson
    sqrt(count) error after efficiency correction, over the corrected total.
    """
    support = pattern_modes(m, n, collision_free=True)
    index = {tuple(r): i for i, r in enumerate(support.tolist())}
    counts = np.zeros(len(support))
    variances = np.zeros(len(support))
    seen: dict[int, int] = {}
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read counts file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError("counts file is empty")
        header = [h.strip() for h in header]
        if header[:2] != ["pattern", "count"] or len(header) > 3 or (len(header) == 3 and header[2] != "efficiency_correction"):
            raise DataError("line 1: header must be 'pattern,count[,efficiency_correction]'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"line {lineno}: expected {len(header)} columns, got {len(row)}")
            bits = row[0].strip()
            if len(bits) != m or not bits.isdigit():
                raise DataError(f"line {lineno}: pattern {bits!r} is not a {m}-character occupation string")
            occ = [int(c) for c in bits]
            if max(occ) > 1:
                raise DataError(f"line {lineno}: pattern {bits} has a collision")
            if sum(occ) != n:
                raise DataError(f"line {lineno}: pattern {bits} has {sum(occ)} photons, expected {n}")
            key = tuple(j for j, c in enumerate(occ) if c)
            if key not in index:
                raise DataError(f"line {lineno}: unknown pattern {bits}")
            try:
                count = float(row[1])
                corr = float(row[2]) if len(row) == 3 else 1.0
            except ValueError:
                raise DataError(f"line {lineno}: count and correction must be numbers") from None
            if not np.isfinite(count) or count < 0 or not np.isfinite(corr) or corr <= 0:
                raise DataError(f"line {lineno}: counts must be >= 0 and corrections > 0")
            i = index[key]
            if i in seen:
                raise DataError(f"line {lineno}: pattern {bits} repeats line {seen[i]}")
            seen[i] = lineno
            counts[i] = count * corr
            variances[i] = count * corr**2
    total = counts.sum()
    if total <= 0:
        raise DataError("counts file has no positive counts")
    meta = {"source": Path(path).name, "total_counts": float(total), "collision_free": True, "mu_in": "1" * n + "0" * (m - n)}
    return OutputDistribution(support, counts / total, m, meta, np.sqrt(variances) / total)


def write_counts(path, dist: OutputDistribution, counts) -> None:
    """Write integer counts over ``dist``'s patterns in the ingest format."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pattern", "count"])
        for b, c in zip(dist.bitstrings, counts):
            w.writerow([b, int(c)])


def multinomial_counts(dist: OutputDistribution, total: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).multinomial(total, dist.probs)


def expected_tvd_floor(dist: OutputDistribution, total: int) -> float:
    """Approximate E[TVD] between ``dist`` and an empirical distribution of
    ``total`` draws: 0.5 sum sqrt(2 p (1-p) / (pi N))."""
    p = dist.probs
    return float(0.5 * np.sum(np.sqrt(2 * p * (1 - p) / (np.pi * total))))


def n_collision_free(m: int, n: int) -> int:
    return comb(m, n)

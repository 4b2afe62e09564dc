"""Importance-sampling estimator of the first-order energy correction.

Patterns drawn from (or weighted by) the boson-sampling distribution are
mapped to particle positions and the Efimov potential is averaged under the
hard-shell constraint. Jittering draws positions uniformly inside the
occupied modes' bins; the acceptance under the hard shell gives the
normalization I0, and E1 is reported as the ratio of the two.

Each pattern's jitter draws come from a generator seeded by
``(jitter.seed, *occupied modes)``, so a pattern's jittered value does not
depend on which other patterns are evaluated alongside it. Exact and sampled
estimates with the same jitter seed therefore share the same per-pattern
values.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import JitterConfig
from .errors import DegenerateError, MappingError
from .physics import BOUNDARY_RTOL, EfimovParams, SpatialGrid, hyperradius_sq, min_pair_distance
from .sampler import OutputDistribution, modes_of

Potential = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PatternValues:
    """Per-pattern jitter statistics.

    ``mean_v`` is the sum of accepted potential values over the draws divided
    by the number of draws, ``acceptance`` the accepted fraction and
    ``mean_v_sq`` the mean of the squared accepted values (for error bars).
    ``n_draws`` is 0 for deterministic evaluation.
    """

    mean_v: np.ndarray
    acceptance: np.ndarray
    mean_v_sq: np.ndarray
    n_draws: int

    def take(self, idx) -> "PatternValues":
        return PatternValues(self.mean_v[idx], self.acceptance[idx], self.mean_v_sq[idx], self.n_draws)


@dataclass(frozen=True)
class EnergyEstimate:
    E1: float
    stderr: float
    I0: float
    n_samples: int
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"E1": self.E1, "stderr": self.stderr, "I0": self.I0, "n_samples": self.n_samples, **self.provenance}


def _efimov(params: EfimovParams) -> Potential:
    coupling = params.C + 0.25

    def v(x):
        return -coupling / hyperradius_sq(x)

    return v


def _accept(x: np.ndarray, d_hs: float, rule: str) -> np.ndarray:
    r = min_pair_distance(x)
    if rule == "include":
        return r >= d_hs * (1 - BOUNDARY_RTOL)
    if rule == "exclude":
        return r > d_hs * (1 + BOUNDARY_RTOL)
    raise ValueError(f"unknown boundary rule {rule!r}")


def evaluate_patterns(
    modes: np.ndarray,
    grid: SpatialGrid,
    params: EfimovParams,
    jitter: JitterConfig,
    boundary_rule: str = "include",
    potential: Potential | None = None,
    apply_hard_shell: bool = True,
) -> PatternValues:
    """Jittered (or bin-center) potential and acceptance for each mode list.

    ``modes`` is (patterns, n) of sorted, distinct occupied modes.
    """
    modes = np.atleast_2d(np.asarray(modes, dtype=int))
    if modes.shape[1] > 1 and np.any(np.diff(modes, axis=1) <= 0):
        raise MappingError("jittered evaluation needs collision-free patterns")
    v = potential if potential is not None else _efimov(params)
    centers = grid.positions[modes]

    def score(x):
        if apply_hard_shell:
            ok = _accept(x, params.d_hs, boundary_rule)
            # rejected configurations may sit at R = 0; never evaluate V there
            safe = np.where(ok[..., None], x, _spread(x.shape))
            return np.where(ok, v(safe), 0.0), ok.astype(float)
        return np.asarray(v(x), dtype=float) * np.ones(x.shape[:-1]), np.ones(x.shape[:-1])

    if not jitter.enabled:
        val, acc = score(centers)
        return PatternValues(val, acc, val**2, 0)

    n_draws = jitter.n_jitter
    half = 0.5 * grid.spacing
    n_pat, n = modes.shape
    mean_v = np.empty(n_pat)
    mean_v_sq = np.empty(n_pat)
    acceptance = np.empty(n_pat)
    chunk = max(1, 2_000_000 // (n_draws * n))
    for a in range(0, n_pat, chunk):
        b = min(a + chunk, n_pat)
        offsets = np.empty((b - a, n_draws, n))
        for i, row in enumerate(modes[a:b].tolist()):
            rng = np.random.default_rng([jitter.seed, *row])
            offsets[i] = rng.uniform(-half, half, size=(n_draws, n))
        val, acc = score(centers[a:b, None, :] + offsets)
        mean_v[a:b] = val.mean(axis=1)
        mean_v_sq[a:b] = (val**2).mean(axis=1)
        acceptance[a:b] = acc.mean(axis=1)
    return PatternValues(mean_v, acceptance, mean_v_sq, n_draws)


def _spread(shape) -> np.ndarray:
    return np.broadcast_to(np.arange(shape[-1], dtype=float), shape)


def jittered_evaluate(
    pattern,
    grid: SpatialGrid,
    params: EfimovParams,
    jitter: JitterConfig,
    boundary_rule: str = "include",
    potential: Potential | None = None,
    apply_hard_shell: bool = True,
) -> tuple[float, float]:
    """(sum of accepted V / N_jitter, accepted fraction) for one pattern."""
    counts = np.asarray(pattern)
    if counts.shape != (grid.m,):
        raise MappingError(f"pattern has {counts.size} modes, grid has {grid.m}")
    if np.any(counts > 1):
        raise MappingError("jittered evaluation needs a collision-free pattern")
    vals = evaluate_patterns(modes_of(counts)[None, :], grid, params, jitter, boundary_rule, potential, apply_hard_shell)
    return float(vals.mean_v[0]), float(vals.acceptance[0])


def _ratio_stderr(weights: np.ndarray, vals: PatternValues, e1: float, i0: float) -> float:
    """Delta-method error of sum(w a)/sum(w b) from per-pattern jitter noise."""
    if vals.n_draws == 0:
        return 0.0
    # z = v*acc - E1*acc per draw; acc in {0,1} so E[v*acc*acc] = mean_v
    ez = vals.mean_v - e1 * vals.acceptance
    ez2 = vals.mean_v_sq - 2 * e1 * vals.mean_v + e1**2 * vals.acceptance
    var_z = np.clip(ez2 - ez**2, 0.0, None) * vals.n_draws / max(vals.n_draws - 1, 1)
    return float(np.sqrt(np.sum(weights**2 * var_z) / vals.n_draws) / i0)


def exact_E1(
    dist: OutputDistribution,
    grid: SpatialGrid,
    params: EfimovParams,
    jitter: JitterConfig,
    boundary_rule: str = "include",
    values: PatternValues | None = None,
    provenance: dict | None = None,
) -> EnergyEstimate:
    """Expectation of the jittered potential under ``dist``, normalized by I0.

    No pattern sampling; the error bar covers jitter randomness only. Pass
    precomputed ``values`` (aligned with ``dist.modes``) to reuse jitter draws
    across distributions on the same grid.
    """
    if dist.m != grid.m:
        raise MappingError(f"distribution has m={dist.m}, grid has m={grid.m}")
    if values is None:
        values = evaluate_patterns(dist.modes, grid, params, jitter, boundary_rule)
    w = dist.probs
    i0 = float(w @ values.acceptance)
    if i0 <= 0:
        raise DegenerateError("no probability mass survives the hard-shell constraint (I0 = 0)")
    e1 = float(w @ values.mean_v) / i0
    stderr = _ratio_stderr(w, values, e1, i0)
    prov = _provenance(grid, params, jitter, boundary_rule, dist)
    prov.update(provenance or {})
    return EnergyEstimate(e1, stderr, i0, 0, prov)


def sampled_E1(
    samples,
    grid: SpatialGrid,
    params: EfimovParams,
    jitter: JitterConfig,
    boundary_rule: str = "include",
    provenance: dict | None = None,
) -> EnergyEstimate:
    """Monte Carlo estimate from sampled occupation patterns (rows of counts).

    E1 = mean(h) / mean(a) with h the per-sample jittered potential sum and a
    the per-sample acceptance; the error is the delta-method standard error
    over samples. With a single sample the error is reported as infinite.
    """
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise ValueError("need a non-empty (samples, m) array of patterns")
    if samples.shape[1] != grid.m:
        raise MappingError(f"samples have {samples.shape[1]} modes, grid has {grid.m}")
    if np.any(samples > 1):
        raise MappingError("samples must be collision-free patterns")
    uniq, inverse = np.unique(samples, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    n = int(samples[0].sum())
    modes = np.array([np.flatnonzero(r) for r in uniq]).reshape(len(uniq), n)
    vals = evaluate_patterns(modes, grid, params, jitter, boundary_rule)
    h = vals.mean_v[inverse]
    a = vals.acceptance[inverse]
    count = samples.shape[0]
    i0 = float(a.mean())
    if i0 <= 0:
        raise DegenerateError("every sample was rejected by the hard shell (I0 = 0)")
    e1 = float(h.mean()) / i0
    if count > 1:
        stderr = float(np.std(h - e1 * a, ddof=1) / np.sqrt(count) / i0)
    else:
        stderr = float("inf")
    prov = _provenance(grid, params, jitter, boundary_rule, None)
    prov.update(provenance or {})
    return EnergyEstimate(e1, stderr, i0, count, prov)


def _provenance(grid, params, jitter, rule, dist) -> dict:
    prov = {
        "m": grid.m,
        "half_range": grid.half_range,
        "C": params.C,
        "d_hs": params.d_hs,
        "boundary_rule": rule,
        "jitter_enabled": jitter.enabled,
        "n_jitter": jitter.n_jitter if jitter.enabled else 0,
        "jitter_seed": jitter.seed,
    }
    if dist is not None:
        prov["mean_overlap"] = dist.meta.get("mean_overlap")
        prov["unitary_fingerprint"] = dist.meta.get("unitary_fingerprint")
    return prov


# --- sweeps -----------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    x: float
    estimate: EnergyEstimate
    ensemble_std: float = 0.0
    curve: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self, axis: str) -> dict:
        return {axis: self.x, "curve": self.curve, "ensemble_std": self.ensemble_std, **self.extra, **self.estimate.to_dict()}


@dataclass(frozen=True)
class SweepResult:
    axis: str
    points: tuple[SweepPoint, ...]

    def __post_init__(self):
        if self.axis not in ("m", "n_jitter", "s", "fidelity"):
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        for name in self.curves:
            xs = np.array([p.x for p in self.curve(name)])
            d = np.diff(xs)
            if xs.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
                raise ValueError(f"abscissae of curve {name!r} are not strictly monotone")

    @property
    def curves(self) -> list[str]:
        return list(dict.fromkeys(p.curve for p in self.points))

    def curve(self, name: str) -> list[SweepPoint]:
        return [p for p in self.points if p.curve == name]

    def xs(self, name: str = "") -> np.ndarray:
        return np.array([p.x for p in self.curve(name)])

    def values(self, name: str = "") -> np.ndarray:
        return np.array([p.estimate.E1 for p in self.curve(name)])

    def to_rows(self) -> list[dict]:
        return [p.to_dict(self.axis) for p in self.points]


def refine_modes_sweep(m_list, jitter: JitterConfig, cfg) -> SweepResult:
    """E1 and I0 along nested grid refinements under the deterministic
    include/exclude conventions and under jittering."""
    from . import instance

    params = instance.efimov_params(cfg)
    points = []
    for m in m_list:
        grid = instance.grid(cfg, m)
        dist = instance.distribution(cfg, grid)
        mass = dist.meta["postselection_mass"]
        runs = [
            ("include", JitterConfig(enabled=False, seed=jitter.seed), "include"),
            ("exclude", JitterConfig(enabled=False, seed=jitter.seed), "exclude"),
            ("jitter", jitter, cfg.boundary_rule),
        ]
        for curve, jit, rule in runs:
            est = exact_E1(dist, grid, params, jit, rule)
            points.append(SweepPoint(m, est, 0.0, curve, {"I0_unconditioned": est.I0 * mass}))
    return SweepResult("m", tuple(points))


def jitter_convergence_sweep(m_list, n_jitter_list, repeats: int, cfg) -> SweepResult:
    """Ensemble mean and spread of jittered E1 over ``repeats`` seeds, for
    every (m, N_jitter)."""
    from . import instance

    if repeats < 2:
        raise ValueError("need at least two repeats for an ensemble spread")
    params = instance.efimov_params(cfg)
    by_n: dict[int, list[SweepPoint]] = {n: [] for n in n_jitter_list}
    for m in m_list:
        grid = instance.grid(cfg, m)
        dist = instance.distribution(cfg, grid)
        for n_jit in n_jitter_list:
            e1s = []
            for r in range(repeats):
                jit = JitterConfig(True, n_jit, cfg.jitter.seed + r)
                e1s.append(exact_E1(dist, grid, params, jit, cfg.boundary_rule).E1)
            e1s = np.array(e1s)
            std = float(e1s.std(ddof=1))
            est = EnergyEstimate(
                float(e1s.mean()),
                std / np.sqrt(repeats),
                float("nan"),
                0,
                {**_provenance(grid, params, JitterConfig(True, n_jit, cfg.jitter.seed), cfg.boundary_rule, dist), "repeats": repeats},
            )
            by_n[n_jit].append(SweepPoint(m, est, std, f"N={n_jit}", {"n_jitter": n_jit}))
    return SweepResult("m", tuple(p for n in n_jitter_list for p in by_n[n]))


def distinguishability_sweep(s_grid, cfg) -> SweepResult:
    """Exact E1 at m = cfg.m for homogeneous pairwise overlaps s."""
    from . import instance
    from .sampler import gram_homogeneous

    params = instance.efimov_params(cfg)
    grid = instance.grid(cfg)
    u = instance.transfer_matrix(cfg, grid)
    values = None
    points = []
    for s in s_grid:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"overlap s={s} outside [0, 1]")
        dist = instance.distribution(cfg, grid, gram_homogeneous(cfg.n, float(s)), u)
        if values is None:
            values = evaluate_patterns(dist.modes, grid, params, cfg.jitter, cfg.boundary_rule)
        est = exact_E1(dist, grid, params, cfg.jitter, cfg.boundary_rule, values, {"s": float(s)})
        points.append(SweepPoint(float(s), est))
    return SweepResult("s", tuple(points))


def noisy_ensemble_E1(cfg, epsilon: float, realizations: int, gram=None, grid=None, values=None):
    """Per-realization E1 and fidelity for noisy copies of the instance unitary."""
    from . import instance

    grid = grid if grid is not None else instance.grid(cfg)
    params = instance.efimov_params(cfg)
    u = instance.transfer_matrix(cfg, grid)
    gram = instance.gram(cfg) if gram is None else gram
    e1s, fids = [], []
    for noisy, fid in instance.noisy_unitaries(u, epsilon, realizations, cfg.seeds.noise):
        dist = instance.distribution(cfg, grid, gram, noisy)
        if values is None:
            values = evaluate_patterns(dist.modes, grid, params, cfg.jitter, cfg.boundary_rule)
        e1s.append(exact_E1(dist, grid, params, cfg.jitter, cfg.boundary_rule, values).E1)
        fids.append(fid)
    return np.array(e1s), np.array(fids), values


def fidelity_sweep(epsilon_grid, realizations: int, cfg) -> SweepResult:
    """Ensemble E1 against mean amplitude fidelity for noisy unitaries (s = 1)."""
    from . import instance
    from .sampler import gram_homogeneous

    grid = instance.grid(cfg)
    params = instance.efimov_params(cfg)
    ones = gram_homogeneous(cfg.n, 1.0)
    values = None
    points = []
    for eps in epsilon_grid:
        e1s, fids, values = noisy_ensemble_E1(cfg, float(eps), realizations, ones, grid, values)
        std = float(e1s.std(ddof=1)) if realizations > 1 else 0.0
        prov = _provenance(grid, params, cfg.jitter, cfg.boundary_rule, None)
        prov.update({"epsilon": float(eps), "realizations": realizations, "noise_seed": cfg.seeds.noise})
        est = EnergyEstimate(float(e1s.mean()), std / np.sqrt(realizations), float("nan"), 0, prov)
        extra = {"epsilon": float(eps), "fidelity_std": float(fids.std(ddof=1)) if realizations > 1 else 0.0}
        points.append(SweepPoint(float(fids.mean()), est, std, "", extra))
    return SweepResult("fidelity", tuple(points))

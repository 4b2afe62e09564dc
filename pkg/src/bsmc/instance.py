"""Turn an InstanceConfig into grids, unitaries and distributions."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .config import InstanceConfig
from .physics import EfimovParams, SpatialGrid, default_half_range, encode_unitary, refinement_grid
from .sampler import (
    OutputDistribution,
    enumerate_distribution,
    gram_from_visibilities,
    gram_homogeneous,
    input_pattern,
    perturb_unitary,
    validate_gram,
)


@lru_cache(maxsize=32)
def _default_half_range(m: int, orbitals: tuple[int, ...]) -> float:
    return default_half_range(m, orbitals)


def half_range(cfg: InstanceConfig) -> float:
    if cfg.half_range is not None:
        return float(cfg.half_range)
    return _default_half_range(cfg.m, tuple(cfg.orbitals))


def grid(cfg: InstanceConfig, m: int | None = None) -> SpatialGrid:
    """Base grid, or its nested refinement with ``m`` points."""
    if m is None or m == cfg.m:
        return SpatialGrid.uniform(cfg.m, half_range(cfg))
    return refinement_grid(m, half_range(cfg), base_m=cfg.m)


def efimov_params(cfg: InstanceConfig) -> EfimovParams:
    d_hs = cfg.d_hs if cfg.d_hs is not None else grid(cfg).spacing
    return EfimovParams(C=cfg.C, d_hs=d_hs)


def gram(cfg: InstanceConfig) -> np.ndarray:
    spec = cfg.gram
    if spec.kind == "homogeneous":
        return gram_homogeneous(cfg.n, spec.s)
    if spec.kind == "visibilities":
        return gram_from_visibilities(spec.visibilities)
    return validate_gram(np.array(spec.matrix, dtype=float))


def transfer_matrix(cfg: InstanceConfig, g: SpatialGrid | None = None) -> np.ndarray:
    """Interferometer in the sampler's U[out, in] convention.

    The encoding has orbitals as rows and positions as columns, so the
    transfer matrix is its transpose.
    """
    g = g if g is not None else grid(cfg)
    u, _ = _encode(tuple(cfg.orbitals), g.positions.tobytes(), g.base_spacing)
    return u.T


@lru_cache(maxsize=16)
def _encode(orbitals, positions_bytes, base_spacing):
    g = SpatialGrid(np.frombuffer(positions_bytes), base_spacing)
    return encode_unitary(orbitals, g)


def distribution(
    cfg: InstanceConfig,
    g: SpatialGrid | None = None,
    s: np.ndarray | None = None,
    u: np.ndarray | None = None,
) -> OutputDistribution:
    """Collision-free postselected distribution of the configured instance."""
    g = g if g is not None else grid(cfg)
    u = u if u is not None else transfer_matrix(cfg, g)
    s = gram(cfg) if s is None else s
    if np.all(s == 1.0):
        s = None
    return enumerate_distribution(u, input_pattern(g.m, cfg.n), s, collision_free=True)


def noise_seed(base: int, realization: int) -> int:
    return int(np.random.SeedSequence([base, realization]).generate_state(1)[0])


def noisy_unitaries(u: np.ndarray, epsilon: float, realizations: int, seed: int):
    """Yield (noisy U, fidelity) for each realization with derived seeds."""
    for r in range(realizations):
        yield perturb_unitary(u, epsilon, noise_seed(seed, r))

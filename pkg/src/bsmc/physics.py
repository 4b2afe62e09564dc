"""Problem instance: harmonic-oscillator orbitals on a 1-D grid, the encoding
unitary, the Efimov-like three-body potential and the hard-shell constraint.

Lengths are in oscillator units.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal, Sequence

import numpy as np
from scipy import integrate, optimize

from .errors import DivergenceError, MappingError, SingularityError
from .linalg import nearest_unitary

BoundaryRule = Literal["include", "exclude"]
BOUNDARY_RULES = ("include", "exclude")

# relative tolerance for "exactly on the hard-shell boundary" on commensurate grids
BOUNDARY_RTOL = 1e-9
R2_FLOOR = 1e-15


def orbital(i: int, x) -> np.ndarray:
    """Normalized Hermite function psi_i(x).

    Uses the three-term recurrence on the normalized functions, so there is
    no factorial or Hermite-coefficient overflow.
    """
    if i < 0:
        raise ValueError("orbital index must be >= 0")
    x = np.asarray(x, dtype=float)
    psi_prev = np.zeros_like(x)
    psi = np.pi**-0.25 * np.exp(-0.5 * x**2)
    for k in range(i):
        psi, psi_prev = np.sqrt(2.0 / (k + 1)) * x * psi - np.sqrt(k / (k + 1)) * psi_prev, psi
    return psi


def density_mass(orbitals: Sequence[int], edge: float) -> float:
    """Average over orbitals of the probability mass inside [-edge, edge]."""
    masses = [
        integrate.quad(lambda x, i=i: orbital(i, x) ** 2, -edge, edge, limit=200)[0]
        for i in orbitals
    ]
    return float(np.mean(masses))


def default_half_range(m: int, orbitals: Sequence[int], mass: float = 0.999) -> float:
    """Half-range L of an m-point uniform grid on [-L, L] whose outer bin edges
    (at +-L(1 + 1/(m-1))) enclose ``mass`` of the mean orbital density."""
    edge = optimize.brentq(lambda e: density_mass(orbitals, e) - mass, 0.1, 20.0, xtol=1e-12)
    return edge / (1.0 + 1.0 / (m - 1))


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid of mode positions symmetric about zero.

    ``base_spacing`` is the spacing of the unrefined grid this one was nested
    from; it sets the default hard-shell radius.
    """

    positions: np.ndarray
    base_spacing: float

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise ValueError("grid needs at least two positions")
        if np.any(np.diff(x) <= 0):
            raise ValueError("grid positions must be strictly increasing")
        if not np.allclose(x, -x[::-1], atol=1e-12):
            raise ValueError("grid must be symmetric about 0")
        x.setflags(write=False)
        object.__setattr__(self, "positions", x)

    @classmethod
    def uniform(cls, m: int, half_range: float) -> "SpatialGrid":
        x = np.linspace(-half_range, half_range, m)
        return cls(x, base_spacing=2 * half_range / (m - 1))

    def refine(self, insert: int) -> "SpatialGrid":
        """Insert ``insert`` equally spaced points in every gap, keeping the
        existing positions bit-for-bit."""
        if insert < 0:
            raise ValueError("insert must be >= 0")
        x = self.positions
        frac = np.arange(insert + 1) / (insert + 1)
        inner = (x[:-1, None] + frac[None, :] * np.diff(x)[:, None]).ravel()
        fine = np.concatenate([inner, x[-1:]])
        fine[:: insert + 1] = x
        return SpatialGrid(fine, base_spacing=self.base_spacing)

    @property
    def m(self) -> int:
        return self.positions.size

    @property
    def spacing(self) -> float:
        return float((self.positions[-1] - self.positions[0]) / (self.m - 1))

    @property
    def half_range(self) -> float:
        return float(self.positions[-1])

    @cached_property
    def bin_edges(self) -> np.ndarray:
        x = self.positions
        mids = 0.5 * (x[1:] + x[:-1])
        h = 0.5 * self.spacing
        return np.concatenate([[x[0] - h], mids, [x[-1] + h]])

    def snap(self, positions) -> np.ndarray:
        """Index of the nearest grid point for each position."""
        idx = np.searchsorted(self.bin_edges, np.asarray(positions), side="right") - 1
        return np.clip(idx, 0, self.m - 1)


def refinement_grid(m: int, half_range: float, base_m: int = 12) -> SpatialGrid:
    """Nested refinement of the ``base_m`` grid with ``m`` points.

    Only m = base_m + k (base_m - 1) are reachable while keeping the base points.
    """
    insert, rem = divmod(m - base_m, base_m - 1)
    if rem or insert < 0:
        raise ValueError(f"m={m} is not a nested refinement of the m={base_m} grid")
    return SpatialGrid.uniform(base_m, half_range).refine(insert)


def encode_unitary(orbitals: Sequence[int], grid: SpatialGrid) -> tuple[np.ndarray, float]:
    """Encoding unitary with rows sqrt(dx) psi_i(chi_j) for the orbitals.

    Orbital rows are normalized, the remaining rows come from Gram-Schmidt on
    canonical basis vectors, and the whole matrix is polar-projected. Returns
    ``(U, raw_deviation)`` where the deviation is the max element-wise change
    of the orbital rows caused by the projection.
    """
    m = grid.m
    k = len(orbitals)
    if m < k:
        raise SingularityError(f"grid with m={m} cannot hold {k} orbitals")
    raw = np.array([np.sqrt(grid.spacing) * orbital(i, grid.positions) for i in orbitals])
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    if np.linalg.matrix_rank(raw, tol=1e-8) < k:
        raise SingularityError("orbital rows are linearly dependent on this grid")

    rows = [r for r in raw]
    basis: list[np.ndarray] = []
    for r in raw:
        v = r - sum((b @ r) * b for b in basis)
        basis.append(v / np.linalg.norm(v))
    for e in np.eye(m):
        if len(rows) == m:
            break
        v = e.copy()
        for _ in range(2):
            v -= sum((b @ v) * b for b in basis)
        norm = np.linalg.norm(v)
        if norm < 1e-8:
            continue
        basis.append(v / norm)
        rows.append(v / norm)
    full = np.array(rows)
    u = nearest_unitary(full)
    deviation = float(np.max(np.abs(u[:k] - raw)))
    return u.real.copy() if np.allclose(u.imag, 0) else u, deviation


def pattern_to_configuration(pattern, grid: SpatialGrid) -> np.ndarray:
    """Positions of the occupied modes of a collision-free pattern, ascending."""
    counts = np.asarray(pattern)
    if counts.shape != (grid.m,):
        raise MappingError(f"pattern has {counts.size} modes, grid has {grid.m}")
    if np.any(counts > 1) or np.any(counts < 0):
        raise MappingError("collision patterns have no particle configuration")
    return grid.positions[np.flatnonzero(counts)]


def configuration_to_pattern(positions, grid: SpatialGrid) -> np.ndarray:
    counts = np.zeros(grid.m, dtype=int)
    np.add.at(counts, grid.snap(positions), 1)
    return counts


@dataclass(frozen=True)
class EfimovParams:
    C: float = 0.0
    d_hs: float = 1.0

    def __post_init__(self):
        if self.C < 0:
            raise ValueError("C must be >= 0")
        if not self.d_hs > 0:
            raise ValueError("hard-shell radius must be > 0")


def hyperradius_sq(x) -> np.ndarray:
    """R^2 = (2/3)(r12^2 + r13^2 + r23^2) over the last axis (3 particles)."""
    x = np.asarray(x, dtype=float)
    d12 = x[..., 0] - x[..., 1]
    d13 = x[..., 0] - x[..., 2]
    d23 = x[..., 1] - x[..., 2]
    return (2.0 / 3.0) * (d12**2 + d13**2 + d23**2)


def efimov_potential(x, params: EfimovParams):
    """-(C + 1/4) / R^2 for one configuration or a stack of them (..., 3)."""
    r2 = hyperradius_sq(x)
    if np.any(r2 <= R2_FLOOR):
        raise DivergenceError("Efimov potential diverges: all particles coincide")
    v = -(params.C + 0.25) / r2
    return float(v) if np.ndim(v) == 0 else v


def min_pair_distance(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    dists = [np.abs(x[..., i] - x[..., j]) for i in range(n) for j in range(i + 1, n)]
    return np.min(dists, axis=0)


def hard_shell(x, d_hs: float, boundary_rule: BoundaryRule = "include"):
    """Accept configurations whose pairwise distances all clear ``d_hs``.

    ``include`` accepts r >= d_hs, ``exclude`` requires r > d_hs. Distances
    within a relative 1e-9 of d_hs count as on the boundary.
    """
    if not d_hs > 0:
        raise ValueError("hard-shell radius must be > 0")
    r = min_pair_distance(x)
    if boundary_rule == "include":
        ok = r >= d_hs * (1 - BOUNDARY_RTOL)
    elif boundary_rule == "exclude":
        ok = r > d_hs * (1 + BOUNDARY_RTOL)
    else:
        raise ValueError(f"unknown boundary rule {boundary_rule!r}")
    return bool(ok) if np.ndim(ok) == 0 else ok

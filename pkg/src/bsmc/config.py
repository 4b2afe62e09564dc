"""Instance configuration: nested dataclasses with a YAML round trip."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError


@dataclass(frozen=True)
class JitterConfig:
    enabled: bool = True
    n_jitter: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.enabled and self.n_jitter < 1:
            raise ConfigError("jitter.n_jitter must be >= 1 when jitter is enabled")

    def with_seed(self, seed: int) -> "JitterConfig":
        return dataclasses.replace(self, seed=seed)


@dataclass(frozen=True)
class GramSpec:
    """How photon overlaps are specified: ``homogeneous`` (one s for all
    pairs), ``matrix`` (explicit), or ``visibilities`` (HOM V_ij = s_ij^2)."""

    kind: str = "homogeneous"
    s: float = 1.0
    matrix: tuple[tuple[float, ...], ...] | None = None
    visibilities: tuple[float, ...] = (0.98, 0.95, 0.90)

    def __post_init__(self):
        if self.kind not in ("homogeneous", "matrix", "visibilities"):
            raise ConfigError(f"gram.kind must be homogeneous, matrix or visibilities, not {self.kind!r}")
        if self.kind == "matrix" and self.matrix is None:
            raise ConfigError("gram.kind=matrix needs gram.matrix")
        if not 0.0 <= self.s <= 1.0:
            raise ConfigError(f"gram.s={self.s} outside [0, 1]")


@dataclass(frozen=True)
class Seeds:
    jitter: int = 0
    noise: int = 0
    sampling: int = 0
    gurvits: int = 0


@dataclass(frozen=True)
class BudgetSpec:
    reference_m: int = 100
    reference_n_jitter: int = 200
    s_bar: float = 0.973
    gram_from_visibilities: bool = True
    fidelity_targets: tuple[float, ...] = (0.985, 0.904)
    realizations: int = 100


@dataclass(frozen=True)
class SweepSpec:
    m_list: tuple[int, ...] = (12, 23, 34, 45, 56)
    n_jitter_list: tuple[int, ...] = (10, 100, 1000)
    repeats: int = 20
    s_grid: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    epsilon_grid: tuple[float, ...] = (0.0, 0.02, 0.05, 0.1, 0.2)
    realizations: int = 100


@dataclass(frozen=True)
class InstanceConfig:
    n: int = 3
    m: int = 12
    orbitals: tuple[int, ...] = (0, 1, 2)
    half_range: float | None = None
    C: float = 0.0
    d_hs: float | None = None
    boundary_rule: str = "include"
    gram: GramSpec = field(default_factory=GramSpec)
    epsilon: float = 0.0
    realizations: int = 100
    jitter: JitterConfig = field(default_factory=JitterConfig)
    seeds: Seeds = field(default_factory=Seeds)
    budget: BudgetSpec = field(default_factory=BudgetSpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    output_dir: str = "out"

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if len(self.orbitals) != self.n:
            raise ConfigError(f"{len(self.orbitals)} orbitals given for n={self.n} photons")
        if any(i < 0 for i in self.orbitals):
            raise ConfigError("orbital indices must be >= 0")
        if self.m < self.n:
            raise ConfigError(f"m={self.m} modes cannot hold n={self.n} photons collision-free")
        if self.half_range is not None and not self.half_range > 0:
            raise ConfigError("half_range must be > 0")
        if self.C < 0:
            raise ConfigError("C must be >= 0")
        if self.d_hs is not None and not self.d_hs > 0:
            raise ConfigError("d_hs must be > 0")
        if self.boundary_rule not in ("include", "exclude"):
            raise ConfigError(f"boundary_rule must be include or exclude, not {self.boundary_rule!r}")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")

    def replace(self, **changes) -> "InstanceConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))

    @classmethod
    def from_dict(cls, data: dict | None) -> "InstanceConfig":
        return _build(cls, data or {}, "")

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_yaml(cls, text: str) -> "InstanceConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from exc
        if data is not None and not isinstance(data, dict):
            raise ConfigError("config must be a mapping at top level")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "InstanceConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_yaml(text)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _tupled(value):
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


def _build(cls, data: dict, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(f"section {prefix or 'root'} must be a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(prefix + k for k in sorted(unknown))}")
    kwargs = {}
    for name, value in data.items():
        sub = _SECTIONS.get((cls, name))
        if sub is not None:
            kwargs[name] = _build(sub, value or {}, f"{prefix}{name}.")
        else:
            kwargs[name] = _tupled(value)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


_SECTIONS = {
    (InstanceConfig, "gram"): GramSpec,
    (InstanceConfig, "jitter"): JitterConfig,
    (InstanceConfig, "seeds"): Seeds,
    (InstanceConfig, "budget"): BudgetSpec,
    (InstanceConfig, "sweep"): SweepSpec,
}

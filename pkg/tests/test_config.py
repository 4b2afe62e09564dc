import pytest

from bsmc.config import InstanceConfig
from bsmc.errors import ConfigError


def test_defaults():
    c = InstanceConfig()
    assert (c.n, c.m, c.orbitals, c.C) == (3, 12, (0, 1, 2), 0.0)
    assert c.jitter.enabled and c.jitter.n_jitter == 1000


def test_yaml_roundtrip():
    c = InstanceConfig(half_range=3.2, C=0.5, boundary_rule="exclude")
    assert InstanceConfig.from_yaml(c.to_yaml()) == c


def test_shipped_configs_load():
    for name in ("default", "calibrated"):
        InstanceConfig.load(f"configs/{name}.yaml")


@pytest.mark.parametrize(
    "text",
    ["m: 2\n", "C: -1\n", "boundary_rule: maybe\n", "orbitals: [0, 1]\n", "bogus: 1\n", "jitter: {n_jitter: 0}\n", "[1, 2]\n", "m: [\n"],
)
def test_invalid_configs_raise(text):
    with pytest.raises(ConfigError):
        InstanceConfig.from_yaml(text)


def test_missing_file():
    with pytest.raises(ConfigError):
        InstanceConfig.load("/nonexistent/cfg.yaml")

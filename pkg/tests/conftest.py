import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bsmc.config import InstanceConfig

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# calibrated (half_range, C) pair; regenerate with scripts/calibrate.py
CALIBRATED_HALF_RANGE = 3.429262996174702
CALIBRATED_C = 0.9855129313144024


def perm_oracle(a) -> complex:
    """Permanent as the literal sum over permutations."""
    a = np.asarray(a)
    n = a.shape[0]
    return sum(np.prod([a[k, s[k]] for k in range(n)]) for s in itertools.permutations(range(n)))


def random_complex(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


@pytest.fixture(scope="session")
def default_cfg():
    return InstanceConfig()


@pytest.fixture(scope="session")
def calibrated_cfg():
    return InstanceConfig(half_range=CALIBRATED_HALF_RANGE, C=CALIBRATED_C)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

"""Boson-sampling accelerated Monte Carlo integration, simulated end to end."""
from .config import InstanceConfig, JitterConfig
from .integrator import EnergyEstimate, exact_E1, jittered_evaluate, sampled_E1
from .linalg import amplitude_fidelity, gurvits_estimate, nearest_unitary, permanent
from .physics import EfimovParams, SpatialGrid, efimov_potential, encode_unitary, hard_shell, orbital
from .sampler import (
    OutputDistribution,
    enumerate_distribution,
    output_probability,
    output_probability_partial,
    perturb_unitary,
    sample_patterns,
)

__version__ = "0.1.0"

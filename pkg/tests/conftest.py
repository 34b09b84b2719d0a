import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ensemblefuse import kernels

# Deterministic, CI-friendly hypothesis runs; deadlines off because the numba
# backend pays a one-time JIT cost on first call.
settings.register_profile(
    "suite",
    derandomize=True,
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("suite")


@pytest.fixture
def numpy_backend():
    """Force the reference backend for tests pinning exact float trajectories."""
    previous = kernels.active_backend()
    kernels.set_backend("numpy")
    yield
    kernels.set_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

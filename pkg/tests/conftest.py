import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci",
    derandomize=True,
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")

from torusavg.model import ModelParams, default_couplings
from torusavg.spectral import make_grid


@pytest.fixture(scope="session")
def grid():
    return make_grid(64)


@pytest.fixture(scope="session")
def grid32():
    return make_grid(32)


@pytest.fixture()
def params():
    return ModelParams()


@pytest.fixture()
def norm_based():
    return default_couplings("norm_based")


@pytest.fixture()
def constant():
    return default_couplings("constant")


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)

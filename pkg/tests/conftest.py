import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dualburgers import _accel

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    prev = _accel.backend()
    _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

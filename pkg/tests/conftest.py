import numpy as np
import pytest

from mpcdrop import Protocol, RingParams


@pytest.fixture
def params():
    return RingParams()


@pytest.fixture
def proto(params):
    return Protocol(params, seed=1234)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

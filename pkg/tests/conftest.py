import numpy as np
import pytest

from herglotz import WaveSpeed


@pytest.fixture
def euclid():
    return WaveSpeed.constant(0.2)


@pytest.fixture
def linear():
    # c(r) = 2 - r
    return WaveSpeed(0.2, [(0.2, 1.0, (2.0, -1.0))])


@pytest.fixture
def jump05():
    return WaveSpeed(0.2, [(0.2, 0.5, (1.2,)), (0.5, 1.0, (1.0,))])


@pytest.fixture
def jump06():
    return WaveSpeed(0.2, [(0.2, 0.6, (1.1,)), (0.6, 1.0, (1.0,))])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

import numpy as np
import pytest

from rbns.geometry import FourierSeries


@pytest.fixture
def flat_profile():
    return FourierSeries(gamma=1.0)


@pytest.fixture
def sine_profile():
    # h = 0.1 sin(2 pi y1), the standard rough fixture
    return FourierSeries(gamma=1.0, modes=((1, 0.0, 0.1),))


@pytest.fixture
def alpha_one():
    return FourierSeries(gamma=1.0, offset=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

import numpy as np
import pytest

from pmeblow.geometry import make_domain


@pytest.fixture
def interval200():
    return make_domain("interval", (1.0,), 1, resolution=200)


@pytest.fixture
def square():
    return make_domain("box", (1.0, 1.0), 2, resolution=65)


@pytest.fixture
def cube():
    return make_domain("box", (1.0, 1.0, 1.0), 3, resolution=17)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

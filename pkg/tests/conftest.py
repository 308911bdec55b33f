import numpy as np
import pytest

from qpot.constants import PhysicalConstants


@pytest.fixture
def c():
    return PhysicalConstants()


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)

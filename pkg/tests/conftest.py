import numpy as np
import pytest

from sublab.models import make_model
from sublab.semigroup import GridSpec, QuadratureEngine


@pytest.fixture(scope="session")
def heis():
    return make_model("heisenberg")


@pytest.fixture(scope="session")
def engine():
    return QuadratureEngine()


@pytest.fixture(scope="session")
def engine48():
    return QuadratureEngine(GridSpec(n=48))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)

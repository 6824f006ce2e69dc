import numpy as np
import pytest

from vibsim.forcefield import load_bundled


@pytest.fixture(scope="session")
def h2o():
    return load_bundled("h2o")


@pytest.fixture(scope="session")
def so2():
    return load_bundled("so2")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

import numpy as np
import pytest

from torsion_wigner.params import reference_params
from torsion_wigner.phase_space import default_axes


@pytest.fixture(scope="session")
def ref_params():
    return reference_params()


@pytest.fixture(scope="session")
def axes():
    return default_axes()


@pytest.fixture(scope="session")
def small_axes():
    return default_axes(8.0, 161)


def rel(a, b):
    return abs(a - b) / abs(b)


def pytest_configure(config):
    np.seterr(over="raise", invalid="ignore")

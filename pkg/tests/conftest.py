import numpy as np
import pytest

from ddlpb import fixture_path


@pytest.fixture(scope="session")
def born_pqr():
    return str(fixture_path("born_ion"))


@pytest.fixture(scope="session")
def dimer_pqr():
    return str(fixture_path("dimer"))


@pytest.fixture(scope="session")
def benzene_pqr():
    return str(fixture_path("benzene12"))


@pytest.fixture(scope="session")
def offcenter_pqr():
    return str(fixture_path("offcenter_ion"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_unit_vectors(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)

import numpy as np
import pytest

from circle_potential import CircleGrid, SolverConfig


@pytest.fixture(scope="session")
def grid64():
    return CircleGrid(64)


@pytest.fixture(scope="session")
def grid256():
    return CircleGrid(256)


@pytest.fixture(scope="session")
def grid1024():
    return CircleGrid(1024)


@pytest.fixture(scope="session")
def solver():
    return SolverConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(2023)

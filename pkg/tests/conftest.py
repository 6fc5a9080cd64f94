import pytest

from delaymac.design_space import default_grids
from delaymac.params import CellDesign, JitterFit, MultiplierSpec, TechnologyProfile


@pytest.fixture(scope="session")
def tech():
    return TechnologyProfile()


@pytest.fixture(scope="session")
def cell():
    return CellDesign()


@pytest.fixture(scope="session")
def fit():
    return JitterFit()


@pytest.fixture(scope="session")
def spec31():
    """5-bit multiplier with every weight bit set (W = 31)."""
    return MultiplierSpec()


@pytest.fixture(scope="session")
def grids():
    return default_grids()

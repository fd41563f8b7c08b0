from fractions import Fraction as F

import numpy as np
import pytest

from lsztr.model import comb_limit_spec, make_spec
from lsztr.spectral_curve import solve_curve
from lsztr.tr_engine import TREngine


@pytest.fixture(scope="session")
def spec22():
    """Generic rational d = dt = 2 model with nontrivial multiplicities."""
    return make_spec([(F(1, 2), 1), (F(3, 2), 2)], [(F(1), 2), (F(2), 1)], F(1, 10))


@pytest.fixture(scope="session")
def curve22(spec22):
    return solve_curve(spec22)


@pytest.fixture(scope="session")
def engine22(curve22):
    return TREngine(curve22)


@pytest.fixture(scope="session")
def comb_curve():
    return solve_curve(comb_limit_spec())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

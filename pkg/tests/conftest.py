import math

import pytest

from fracwell.ivp_solver import SolverConfig
from fracwell.problem import FractionalIVP, RhsSpec


def example_ivp(alpha, a=0.0, T=1.0):
    """D^alpha y = y, y(a) = 1 (higher initial derivatives zero)."""
    init = (1.0,) + (0.0,) * (math.ceil(alpha) - 1)
    return FractionalIVP(alpha, a, T, init, RhsSpec("linear", {"lambda": 1.0}))


def manufactured_ivp(alpha, a=0.0, T=1.0):
    rhs = RhsSpec("manufactured_quadratic", {"alpha": alpha, "a": a})
    return FractionalIVP(alpha, a, T, (0.0,) * math.ceil(alpha), rhs)


@pytest.fixture
def cfg1024():
    return SolverConfig(n_steps=1024)

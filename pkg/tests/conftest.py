import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gamehedge.friction import FrictionParams
from gamehedge.model import MarketParams, build_lattice
from gamehedge.payoff import GamePut, evaluate_on_lattice
from gamehedge.solver import SolverGrid

settings.register_profile("ci", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

MARKET = MarketParams(s=100.0, kappa=0.2, vartheta=0.02, T=1.0)
FRICTION = FrictionParams(delta=0.5, mu=0.01)


@pytest.fixture
def market():
    return MARKET


@pytest.fixture
def friction():
    return FRICTION


@pytest.fixture
def put2():
    return GamePut(strike=100.0, penalty=2.0)


@pytest.fixture
def put10():
    return GamePut(strike=100.0, penalty=10.0)


def oracle_grid(z_max=30.0, z_steps=21, y_max=2.0, y_steps=5) -> SolverGrid:
    return SolverGrid(np.linspace(0.0, z_max, z_steps), np.linspace(-y_max, y_max, y_steps))


def tables_for(payoff, n, market=MARKET):
    lattice = build_lattice(market, n)
    return lattice, evaluate_on_lattice(payoff, lattice)

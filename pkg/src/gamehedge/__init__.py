"""Shortfall risk and hedging of game options under minimal transaction costs.

Binomial dynamic programming over (liquidation value, shares), a brute-force
oracle for tiny trees, and a Monte Carlo lift of binomial hedges to the
Black-Scholes model.
"""

from .friction import FrictionParams, mark_to_market, post_trade_value, trade_cost, trade_set
from .lift import SimReport, buyer_threshold_strategy, lift_and_simulate
from .model import MarketParams, binomial_up_prob, build_lattice, extract_embedding, sample_path
from .oracle import TinyInstance, brute_force_risk, no_trade_dynkin
from .payoff import GameCall, GamePut, LookbackGamePut, evaluate, evaluate_on_lattice, make_payoff
from .solver import Policy, RiskSurface, SolverGrid, default_grid, query_risk, solve

__version__ = "0.1.0"

__all__ = [
    "FrictionParams",
    "GameCall",
    "GamePut",
    "LookbackGamePut",
    "MarketParams",
    "Policy",
    "RiskSurface",
    "SimReport",
    "SolverGrid",
    "TinyInstance",
    "binomial_up_prob",
    "brute_force_risk",
    "buyer_threshold_strategy",
    "build_lattice",
    "default_grid",
    "evaluate",
    "evaluate_on_lattice",
    "extract_embedding",
    "lift_and_simulate",
    "make_payoff",
    "mark_to_market",
    "no_trade_dynkin",
    "post_trade_value",
    "query_risk",
    "sample_path",
    "solve",
    "trade_cost",
    "trade_set",
]

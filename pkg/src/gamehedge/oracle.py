"""Brute-force min-max shortfall on tiny binomial trees.

The game is expanded along explicit path prefixes: the seller commits to an
action (cancel, wait, or one trade onto the share grid), the buyer answers
with stop or continue, and nature draws the price move followed by the
grid lottery that stands in for linear interpolation in z. Payoffs are
evaluated on the explicit price history of each prefix, so neither the
recombining layout nor the payoff tables of the solver are reused.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .friction import FrictionParams, mark_to_market, post_trade_value
from .model import BinomialLattice
from .payoff import PayoffPair, evaluate
from .solver import SolverGrid, bracket

log = logging.getLogger(__name__)

MAX_ORACLE_N = 3
LEAF_CAP = 10**8


class OracleSizeError(RuntimeError):
    pass


@dataclass
class TinyInstance:
    lattice: BinomialLattice
    friction: FrictionParams
    payoff: PayoffPair
    grid: SolverGrid
    buyer_may_stop_early: bool = True  # False: the buyer only exercises at maturity
    seller_may_cancel: bool = True
    leaves: int = field(default=0, init=False)
    _payoffs: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.lattice.n > MAX_ORACLE_N:
            raise OracleSizeError(f"oracle supports n <= {MAX_ORACLE_N}, got n={self.lattice.n}")

    def leaf_bound(self) -> int:
        """Upper bound on terminal evaluations per initial state."""
        per_step = 2 * 2 * len(self.grid.y_grid)
        return per_step**self.lattice.n

    def payoffs(self, moves: tuple[int, ...]) -> tuple[float, float, float]:
        """(price, Y, X) at the end of the prefix ``moves`` (1 = up)."""
        hit = self._payoffs.get(moves)
        if hit is None:
            lat = self.lattice
            ups = np.concatenate([[0], np.cumsum(moves)]).astype(int)
            prices = [lat.price(i, int(j)) for i, j in enumerate(ups)]
            times = [i * lat.h for i in range(len(moves) + 1)]
            if len(moves) == lat.n:
                times[-1] = lat.params.T
            y, x = evaluate(self.payoff, prices, times, lat.params.T)
            hit = (prices[-1], y, x)
            self._payoffs[moves] = hit
        return hit


def _value(inst: TinyInstance, moves: tuple[int, ...], z: float, y: float) -> float:
    lat = inst.lattice
    k = len(moves)
    S, Y, X = inst.payoffs(moves)
    stop = max(Y - z, 0.0)
    if k < lat.n and not inst.buyer_may_stop_early:
        stop = 0.0
    if k == lat.n:
        inst.leaves += 1
        if inst.leaves > LEAF_CAP:
            raise OracleSizeError(f"oracle exceeded {LEAF_CAP} leaves")
        return stop

    p = lat.up_prob
    z_grid = inst.grid.z_grid
    # buyer's best reply when the seller cancels now: stop (Y) or take X
    best = max(stop, max(X - z, 0.0)) if inst.seller_may_cancel else math.inf
    for y_t in inst.grid.y_grid:
        y_t = float(y_t)
        if y_t == y:
            zh = z
        else:
            zh = post_trade_value(S, z, y, y_t - y, inst.friction)
            if zh < 0.0:
                continue
        branch = []
        for move in (1, 0):
            S_next = inst.payoffs(moves + (move,))[0]
            z_next = mark_to_market(S, S_next, zh, y_t, inst.friction)
            if z_next < 0.0:
                break
            branch.append((move, z_next))
        else:
            vals = []
            for move, z_next in branch:
                i, w = bracket(z_grid, z_next)
                i, w = int(i), float(w)
                lo = _value(inst, moves + (move,), float(z_grid[i]), y_t) if w != 0.0 else 0.0
                hi = _value(inst, moves + (move,), float(z_grid[i + 1]), y_t) if w != 1.0 else 0.0
                vals.append(w * lo + (1.0 - w) * hi)
            cont = p * vals[0] + (1.0 - p) * vals[1]
            best = min(best, max(stop, cont))
    if best == math.inf:  # no admissible continuation left and no cancellation
        best = max(stop, max(X - z, 0.0))
    return best


def brute_force_risk(instance: TinyInstance, z0: float, y0: float) -> float:
    """Exact min over seller strategies of max over buyer stopping rules."""
    if z0 < 0.0:
        raise ValueError("initial liquidation value must be non-negative")
    instance.grid.y_index(y0)
    bound = instance.leaf_bound()
    log.debug("oracle n=%d: at most %d leaves per state", instance.lattice.n, bound)
    return _value(instance, (), float(z0), float(y0))


def oracle_table(instance: TinyInstance) -> np.ndarray:
    """Oracle value at every (z, y) grid state at the root."""
    g = instance.grid
    out = np.empty((len(g.z_grid), len(g.y_grid)))
    for i, z in enumerate(g.z_grid):
        for j, y in enumerate(g.y_grid):
            out[i, j] = brute_force_risk(instance, float(z), float(y))
    return out


def no_trade_dynkin(lattice: BinomialLattice, payoff: PayoffPair, z: float) -> list[np.ndarray]:
    """Dynkin-game values with cash z held constant and no trading.

    Plain scalar recursion over the recombining lattice; used to check the
    solver where no trade is affordable.
    """
    if payoff.path_dependent:
        raise TypeError("no_trade_dynkin needs a Markovian payoff")
    n, p, T = lattice.n, lattice.up_prob, lattice.params.T
    vals: list[np.ndarray] = [np.empty(0)] * (n + 1)
    for k in range(n, -1, -1):
        t = T if k == n else k * lattice.h
        layer = np.empty(k + 1)
        for j in range(k + 1):
            Y, X = evaluate(payoff, [lattice.price(k, j)], [t], T)
            stop = max(Y - z, 0.0)
            if k == n:
                layer[j] = stop
            else:
                cont = p * vals[k + 1][j + 1] + (1.0 - p) * vals[k + 1][j]
                layer[j] = max(stop, min(max(X - z, 0.0), cont))
        vals[k] = layer
    return vals


def enumerate_no_trade(lattice: BinomialLattice, payoff: PayoffPair, z: float) -> float:
    """Root value of the trade-free game by listing every pair of stopping rules.

    Stopping rules are stop/continue decisions per path prefix; the seller's
    rule minimises the buyer's best expected shortfall. Feasible for n <= 3.
    """
    n, p, T = lattice.n, lattice.up_prob, lattice.params.T
    if n > MAX_ORACLE_N:
        raise OracleSizeError("enumeration limited to n <= 3")
    prefixes = [tuple(m) for k in range(n) for m in np.ndindex(*(2,) * k)]
    paths = list(np.ndindex(*(2,) * n))
    weights = [math.prod(p if m else 1.0 - p for m in path) for path in paths]

    def node(prefix):
        k = len(prefix)
        j = sum(prefix)
        t = T if k == n else k * lattice.h
        return evaluate(payoff, [lattice.price(k, j)], [t], T)

    cache = {pre: node(pre) for pre in prefixes}
    cache.update({tuple(path): node(tuple(path)) for path in paths})

    def first_stop(rule, path):
        for k in range(n):
            if rule[path[:k]]:
                return k
        return n

    rules = [dict(zip(prefixes, bits)) for bits in np.ndindex(*(2,) * len(prefixes))]
    best = math.inf
    for seller in rules:
        worst = 0.0
        for buyer in rules:
            total = 0.0
            for path, wgt in zip(paths, weights):
                path = tuple(path)
                sig, tau = first_stop(seller, path), first_stop(buyer, path)
                if sig < tau:
                    pay = cache[path[:sig]][1]
                else:
                    pay = cache[path[:tau]][0]
                total += wgt * max(pay - z, 0.0)
            worst = max(worst, total)
        best = min(best, worst)
    return best

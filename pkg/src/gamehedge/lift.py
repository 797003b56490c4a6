"""Carry a binomial hedge into the continuous model along embedded walks and
measure it by Monte Carlo.

For each simulated Brownian path the first-passage signs define a binomial
path; the binomial policy is replayed along it (liquidation value tracked
exactly, grid lookups at the largest grid value not above it), and the
resulting share targets are applied at the passage times of the continuous
path. Portfolio values in the continuous model follow the self-financing
cash account, so they are independent of the binomial bookkeeping.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .friction import FrictionParams, mark_to_market, post_trade_value, trade_cost
from .model import MarketParams, build_lattice, extract_embedding, path_seed, sample_path
from .payoff import PayoffPair
from .solver import CANCEL, FORCED, TRADE, Policy, RiskSurface, query_risk

log = logging.getLogger(__name__)

MAX_INCOMPLETE_FRACTION = 0.01
ADMISSIBILITY_TOL = 1e-9


class EmbeddingCoverageError(RuntimeError):
    pass


@dataclass(frozen=True)
class ThresholdBuyer:
    """Stop at the first passage time in (0, T] where the shortfall Y - V is
    positive and at least ``c``; otherwise at T."""

    c: float

    def __post_init__(self) -> None:
        if not self.c >= 0.0:
            raise ValueError("threshold must be >= 0")

    @property
    def name(self) -> str:
        return "threshold=inf" if math.isinf(self.c) else f"threshold={self.c:g}"


def buyer_threshold_strategy(c: float) -> ThresholdBuyer:
    return ThresholdBuyer(float(c))


DEFAULT_THRESHOLDS = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, math.inf)


@dataclass
class StrategyResult:
    name: str
    mean_shortfall: float
    stderr: float


@dataclass
class SimReport:
    paths: int
    admissibility_violations: int
    worst_violation: float
    strategies: list[StrategyResult]
    value_match_error: float
    growth_stat: float
    incomplete_embeddings: int
    risk: float
    mean_value_T: float
    mean_value_last_passage: float
    trace: list[dict] = field(default_factory=list, repr=False)

    def by_name(self, name: str) -> StrategyResult:
        for s in self.strategies:
            if s.name == name:
                return s
        raise KeyError(name)


@dataclass
class _Replay:
    sigma: int  # binomial cancellation step (n if never)
    shares: list[float]  # holding after the trade at step k
    betas: list[float]
    values: list[float]  # binomial liquidation value at step k, before trading


def replay_binomial(policy: Policy, lattice, friction: FrictionParams, signs, z0: float, y0: float) -> _Replay:
    """Run the binomial policy along a sign sequence with exact bookkeeping."""
    grid = policy.grid
    n = lattice.n
    z, y = float(z0), float(grid.y_grid[grid.y_index(y0)])
    node, j = 0, 0
    shares, betas, values = [], [], [z]
    sigma = n
    for k in range(n):
        S = lattice.price(k, j)
        action, beta = policy.lookup(k, node, z, y)
        if action in (CANCEL, FORCED):
            sigma = k
            break
        if action == TRADE:
            z = float(post_trade_value(S, z, y, beta, friction))
            y = float(grid.y_grid[grid.y_index(y + beta)])
        else:
            beta = 0.0
        shares.append(y)
        betas.append(beta)
        up = int(signs[k] > 0)
        S_next = lattice.price(k + 1, j + up)
        z = float(mark_to_market(S, S_next, z, y, friction))
        j += up
        node = j if policy.recombining else 2 * node + up
        values.append(z)
    return _Replay(sigma=sigma, shares=shares, betas=betas, values=values)


def lift_and_simulate(
    policy: Policy,
    surface: RiskSurface,
    params: MarketParams,
    friction: FrictionParams,
    payoff: PayoffPair,
    n: int,
    num_paths: int,
    buyer_strategies,
    seed: int,
    z0: float = 0.0,
    y0: float = 0.0,
    fine_steps: int = 4096,
    horizon_factor: float = 4.0,
    trace: bool = False,
) -> SimReport:
    if policy.n != n or surface.n != n:
        raise ValueError(f"policy solved at n={policy.n}, simulation asked for n={n}")
    strategies = list(buyer_strategies)
    if not strategies:
        raise ValueError("need at least one buyer strategy")
    lattice = build_lattice(params, n)
    thresholds = np.array([b.c for b in strategies])

    shortfalls = []
    violations = 0
    worst = 0.0
    match_err = 0.0
    growth = []
    v_T, v_last = [], []
    incomplete = 0
    rows: list[dict] = []

    for i in range(num_paths):
        path = sample_path(params, fine_steps, horizon_factor, path_seed(seed, i))
        emb = extract_embedding(path, n)
        if not emb.complete:
            incomplete += 1
            continue
        rep = replay_binomial(policy, lattice, friction, emb.signs, z0, y0)
        hits = emb.hit_indices
        prices = path.prices
        iT = path.index_T

        # trades at passage times, then liquidation at cancellation / last passage
        ev_idx, ev_beta = [], []
        held = float(y0)
        for k, beta in enumerate(rep.betas):
            if beta != 0.0:
                ev_idx.append(hits[k])
                ev_beta.append(beta)
            held = rep.shares[k]
        if held != 0.0:
            ev_idx.append(hits[rep.sigma])
            ev_beta.append(-held)
        ev_idx = np.asarray(ev_idx, dtype=np.int64)
        ev_beta = np.asarray(ev_beta, dtype=float)
        ev_price = prices[ev_idx]
        hold_after = y0 + np.cumsum(ev_beta)
        cash_after = (z0 + trade_cost(y0, params.s, friction) - y0 * params.s) - np.cumsum(
            ev_beta * ev_price + trade_cost(ev_beta, ev_price, friction)
        )
        cash0 = z0 + trade_cost(y0, params.s, friction) - y0 * params.s
        count = np.searchsorted(ev_idx, np.arange(len(prices)), side="left")
        gamma = np.concatenate([[float(y0)], hold_after])[count]
        cash = np.concatenate([[cash0], cash_after])[count]
        V = cash + gamma * prices - trade_cost(gamma, prices, friction)

        low = float(V.min())
        if low < -ADMISSIBILITY_TOL:
            violations += 1
            worst = min(worst, low)
        ks = np.arange(rep.sigma + 1)
        err = float(np.max(np.abs(V[hits[ks]] - np.asarray(rep.values[: rep.sigma + 1]))))
        match_err = max(match_err, err)

        Y, X = payoff.evaluate_path(prices[: iT + 1], path.times[: iT + 1], params.T)
        sig = min(int(hits[rep.sigma]), iT) if rep.sigma < n else iT
        cand = hits[1:][hits[1:] <= iT]
        gap = Y[cand] - V[cand]
        taus = np.full(len(strategies), iT, dtype=np.int64)
        for s_ix, c in enumerate(thresholds):
            ok = np.flatnonzero((gap > 0.0) & (gap >= c))
            if ok.size:
                taus[s_ix] = cand[ok[0]]
        cancel_first = sig < taus
        loss = np.where(cancel_first, X[sig] - V[sig], Y[taus] - V[taus])
        shortfalls.append(np.maximum(loss, 0.0))

        in_T = ev_idx <= iT
        exposure = float(np.max(np.abs(gamma[: iT + 1]) * prices[: iT + 1]))
        turnover = float(np.sum(ev_price[in_T] * np.abs(ev_beta[in_T])))
        growth.append((exposure + turnover) ** 2)
        v_T.append(V[iT])
        v_last.append(V[hits[n]])

        if trace:
            for k in range(n + 1):
                rows.append(
                    {
                        "path": i,
                        "k": k,
                        "hit_index": int(hits[k]),
                        "time": float(path.times[hits[k]]),
                        "sign": int(emb.signs[k - 1]) if k else 0,
                        "lattice_price": lattice.price(k, int(np.sum(emb.signs[:k] > 0))),
                        "path_price": float(prices[hits[k]]),
                        "shares": rep.shares[k] if k < len(rep.shares) else 0.0,
                        "value_binomial": rep.values[k] if k < len(rep.values) else math.nan,
                        "value_lifted": float(V[hits[k]]),
                        "cancelled": int(k == rep.sigma and rep.sigma < n),
                    }
                )

    used = num_paths - incomplete
    if num_paths and incomplete > MAX_INCOMPLETE_FRACTION * num_paths:
        raise EmbeddingCoverageError(
            f"{incomplete} of {num_paths} embeddings did not complete within horizon_factor={horizon_factor}"
        )
    if used == 0:
        raise EmbeddingCoverageError("no complete embeddings")
    losses = np.vstack(shortfalls)
    results = []
    for s_ix, b in enumerate(strategies):
        col = losses[:, s_ix]
        se = float(col.std(ddof=1) / math.sqrt(used)) if used > 1 else math.nan
        results.append(StrategyResult(b.name, float(col.mean()), se))
    return SimReport(
        paths=used,
        admissibility_violations=violations,
        worst_violation=worst,
        strategies=results,
        value_match_error=match_err,
        growth_stat=float(np.mean(growth)),
        incomplete_embeddings=incomplete,
        risk=query_risk(surface, z0, y0),
        mean_value_T=float(np.mean(v_T)),
        mean_value_last_passage=float(np.mean(v_last)),
        trace=rows,
    )

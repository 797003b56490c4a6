import math

import numpy as np
import pytest
from conftest import FRICTION, MARKET, tables_for

from gamehedge.lift import (
    DEFAULT_THRESHOLDS,
    EmbeddingCoverageError,
    buyer_threshold_strategy,
    lift_and_simulate,
    replay_binomial,
)
from gamehedge.model import extract_embedding, path_seed, sample_path
from gamehedge.payoff import GamePut
from gamehedge.solver import WAIT, Policy, SolverGrid, default_grid, solve

ALL_BUYERS = [buyer_threshold_strategy(c) for c in DEFAULT_THRESHOLDS]


def _hold_policy(n, z_max=250.0):
    """Solve for the shapes, then replace every action by 'wait'."""
    pair = GamePut(100.0, 2.0)
    lat, tab = tables_for(pair, n)
    g = SolverGrid(np.linspace(0.0, z_max, 11), np.array([-1.0, 0.0, 1.0]))
    surface, pol = solve(lat, tab, FRICTION, g)
    hold = Policy(
        [np.full_like(a, WAIT) for a in pol.action],
        [np.zeros_like(b) for b in pol.beta],
        pol.buyer_exercise,
        g,
        True,
    )
    return pair, surface, hold


@pytest.fixture(scope="module")
def companion():
    pair = GamePut(100.0, 10.0)
    lat, tab = tables_for(pair, 16)
    g = default_grid(tab, FRICTION, y_steps=21)
    surface, policy = solve(lat, tab, FRICTION, g)
    return pair, surface, policy


def test_threshold_names():
    assert buyer_threshold_strategy(math.inf).name == "threshold=inf"
    assert buyer_threshold_strategy(0.25).name == "threshold=0.25"
    with pytest.raises(ValueError):
        buyer_threshold_strategy(-1.0)


def test_superhedged_cash_has_no_shortfall():
    pair, surface, hold = _hold_policy(4)
    rep = lift_and_simulate(hold, surface, MARKET, FRICTION, pair, 4, 300, ALL_BUYERS, seed=1, z0=200.0, fine_steps=512)
    assert all(s.mean_shortfall == 0.0 for s in rep.strategies)
    assert rep.admissibility_violations == 0
    assert rep.value_match_error == 0.0


def test_buyer_rules_against_direct_computation():
    n, paths, fine = 4, 200, 512
    pair, surface, hold = _hold_policy(n)
    buyers = [buyer_threshold_strategy(0.0), buyer_threshold_strategy(math.inf)]
    rep = lift_and_simulate(hold, surface, MARKET, FRICTION, pair, n, paths, buyers, seed=9, fine_steps=fine)
    first, last = [], []
    for i in range(paths):
        path = sample_path(MARKET, fine, 4.0, path_seed(9, i))
        emb = extract_embedding(path, n)
        assert emb.complete
        iT = path.index_T
        y = np.maximum(100.0 - path.prices, 0.0)
        # no cash and no shares: shortfall is the put payoff itself
        last.append(y[iT])
        stops = [h for h in emb.hit_indices[1:] if h <= iT and y[h] > 0.0]
        first.append(y[stops[0]] if stops else y[iT])
    assert rep.by_name("threshold=inf").mean_shortfall == pytest.approx(np.mean(last), rel=1e-12)
    assert rep.by_name("threshold=0").mean_shortfall == pytest.approx(np.mean(first), rel=1e-12)


def test_replay_wait_keeps_shares():
    pair, surface, hold = _hold_policy(4)
    from gamehedge.model import build_lattice

    rep = replay_binomial(hold, build_lattice(MARKET, 4), FRICTION, [1, -1, -1, 1], 50.0, 1.0)
    assert rep.shares == [1.0] * 4
    assert rep.sigma == 4
    assert len(rep.values) == 5


def test_per_path_results_independent_of_batch(companion):
    pair, surface, policy = companion
    a = lift_and_simulate(policy, surface, MARKET, FRICTION, pair, 16, 12, ALL_BUYERS, seed=3, z0=5.0, fine_steps=1024, trace=True)
    b = lift_and_simulate(policy, surface, MARKET, FRICTION, pair, 16, 30, ALL_BUYERS, seed=3, z0=5.0, fine_steps=1024, trace=True)
    assert a.trace == [r for r in b.trace if r["path"] < 12]
    c = lift_and_simulate(policy, surface, MARKET, FRICTION, pair, 16, 12, ALL_BUYERS, seed=3, z0=5.0, fine_steps=1024)
    assert [s.mean_shortfall for s in a.strategies] == [s.mean_shortfall for s in c.strategies]


def test_trace_consistency(companion):
    pair, surface, policy = companion
    rep = lift_and_simulate(policy, surface, MARKET, FRICTION, pair, 16, 20, ALL_BUYERS, seed=4, z0=5.0, fine_steps=2048, trace=True)
    by_path = {}
    for r in rep.trace:
        by_path.setdefault(r["path"], []).append(r)
    for rows in by_path.values():
        assert [r["k"] for r in rows] == list(range(17))
        assert rows[0]["value_lifted"] == pytest.approx(5.0, abs=1e-12)
        hits = [r["hit_index"] for r in rows]
        assert all(b > a for a, b in zip(hits, hits[1:]))
        for r in rows:
            assert r["time"] == pytest.approx(r["hit_index"] / 2048 * MARKET.T, abs=1e-12)


def test_shortfall_bounded_by_risk(companion):
    pair, surface, policy = companion
    rep = lift_and_simulate(policy, surface, MARKET, FRICTION, pair, 16, 1500, ALL_BUYERS, seed=11, z0=5.0, fine_steps=2048)
    for s in rep.strategies:
        assert s.mean_shortfall <= rep.risk + 3 * s.stderr + 0.05, s
    assert rep.incomplete_embeddings <= 15


def test_value_match_error_shrinks(companion):
    pair, surface, policy = companion
    errs = []
    for fine in (512, 4096):
        rep = lift_and_simulate(policy, surface, MARKET, FRICTION, pair, 16, 400, ALL_BUYERS[-1:], seed=2, z0=5.0, fine_steps=fine)
        errs.append(rep.value_match_error)
    assert errs[1] < errs[0]


def test_growth_statistic_stable_across_n():
    pair = GamePut(100.0, 10.0)
    stats = []
    for n in (8, 16, 32):
        lat, tab = tables_for(pair, n)
        g = default_grid(tab, FRICTION, y_steps=11)
        surface, policy = solve(lat, tab, FRICTION, g)
        rep = lift_and_simulate(policy, surface, MARKET, FRICTION, pair, n, 600, ALL_BUYERS[-1:], seed=6, z0=5.0, fine_steps=2048)
        stats.append(rep.growth_stat / (1.0 + 5.0**2))
    assert max(stats) <= 2.0 * min(stats)


def test_n_mismatch_rejected(companion):
    pair, surface, policy = companion
    with pytest.raises(ValueError):
        lift_and_simulate(policy, surface, MARKET, FRICTION, pair, 8, 10, ALL_BUYERS, seed=0)
    with pytest.raises(ValueError):
        lift_and_simulate(policy, surface, MARKET, FRICTION, pair, 16, 10, [], seed=0)


def test_short_horizon_raises_coverage_error(companion):
    pair, surface, policy = companion
    with pytest.raises(EmbeddingCoverageError):
        lift_and_simulate(policy, surface, MARKET, FRICTION, pair, 16, 50, ALL_BUYERS, seed=0, z0=5.0, fine_steps=512, horizon_factor=1.0)

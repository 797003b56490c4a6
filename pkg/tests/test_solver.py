import math

import numpy as np
import pytest
from conftest import FRICTION, MARKET, oracle_grid, tables_for

from gamehedge.friction import mark_to_market, trade_set
from gamehedge.model import build_lattice
from gamehedge.oracle import TinyInstance, no_trade_dynkin, oracle_table
from gamehedge.payoff import GameCall, GamePut, LookbackGamePut, evaluate_on_lattice
from gamehedge.solver import (
    CANCEL,
    FORCED,
    TRADE,
    GridError,
    SolverGrid,
    continuation_value,
    default_grid,
    query_risk,
    solve,
    step_value,
    terminal_layer,
)


def test_grid_validation():
    with pytest.raises(GridError):
        SolverGrid(np.array([0.0]), np.array([0.0]))
    with pytest.raises(GridError):
        SolverGrid(np.array([0.1, 1.0]), np.array([0.0]))
    with pytest.raises(GridError):
        SolverGrid(np.array([0.0, 1.0]), np.array([-1.0, 1.0]))
    g = SolverGrid(np.array([0.0, 1.0]), np.array([-1.0, 0.0, 1.0]))
    with pytest.raises(GridError):
        g.y_index(0.5)


def test_default_grid_shape(put2):
    lat, tab = tables_for(put2, 8)
    g = default_grid(tab, FRICTION)
    assert g.z_grid[0] == 0.0 and len(g.z_grid) == 201
    assert g.z_max == pytest.approx(1.05 * tab.max_x)
    assert len(g.y_grid) == 41 and g.y_grid[20] == 0.0
    assert g.y_grid[-1] == 2.0


def test_grid_must_cover_payoff(put2):
    lat, tab = tables_for(put2, 8)
    with pytest.raises(GridError):
        solve(lat, tab, FRICTION, oracle_grid(z_max=30.0))


def test_terminal_layer(put2):
    lat, tab = tables_for(put2, 2)
    g = SolverGrid(np.array([0.0, 10.0, 30.0]), np.array([-1.0, 0.0, 1.0]))
    term = terminal_layer(tab, g)
    low = 100.0 * math.exp(-0.2 * math.sqrt(2.0))
    assert low == pytest.approx(75.364, abs=1e-3)
    assert term[0, 1, 1] == pytest.approx(100.0 - low - 10.0, abs=1e-12)
    assert term[0, 1, 1] == pytest.approx(14.636, abs=1e-3)
    assert np.all(term[:, 2, :] == 0.0)
    assert np.all(term == term[:, :, :1])


def test_continuation_cash_only_and_constant_layer(put2):
    lat, tab = tables_for(put2, 2)
    g = oracle_grid()
    nxt = np.full((3, 21, 5), 3.25)
    assert continuation_value(tab, FRICTION, g, 1, 0, 7.0, 0.0, nxt) == pytest.approx(3.25, abs=1e-15)


def test_continuation_inadmissible(put2):
    lat, tab = tables_for(put2, 2)
    g = oracle_grid()
    nxt = np.zeros((3, 21, 5))
    assert mark_to_market(100.0, lat.price(1, 0), 0.1, 1.0, FRICTION) < 0.0
    assert continuation_value(tab, FRICTION, g, 0, 0, 0.1, 1.0, nxt) is None


def test_rich_seller_gets_zero(put2):
    lat, tab = tables_for(put2, 3)
    g = oracle_grid()
    surface, policy = solve(lat, tab, FRICTION, g)
    top = g.y_index(0.0)
    assert surface.values[0][0, -1, top] == 0.0
    # cancel and wait both cost nothing here; the tie goes to cancelling
    assert policy.action[0][0, -1, top] == CANCEL


def test_no_trades_below_fee(put2):
    lat, tab = tables_for(put2, 2)
    g = SolverGrid(np.array([0.0, 0.3, 30.0]), np.array([-1.0, 0.0, 1.0]))
    surface, policy = solve(lat, tab, FRICTION, g)
    ref = no_trade_dynkin(lat, put2, 0.3)
    for k in range(3):
        assert np.array_equal(surface.values[k][:, 1, 1], ref[k])
        assert not np.any(policy.action[k][:, 1, 1] == TRADE)


def test_one_step_hand_expansion(put2):
    lat = build_lattice(MARKET, 1)
    tab = evaluate_on_lattice(put2, lat)
    g = SolverGrid(np.array([0.0, 0.3, 30.0]), np.array([0.0]))
    surface, _ = solve(lat, tab, FRICTION, g)
    p, z = lat.up_prob, 0.3
    y0, x0 = 0.0, 2.0
    y_up = max(100.0 - lat.price(1, 1), 0.0)
    y_dn = max(100.0 - lat.price(1, 0), 0.0)
    cont = p * max(y_up - z, 0.0) + (1 - p) * max(y_dn - z, 0.0)
    expected = max(max(y0 - z, 0.0), min(max(x0 - z, 0.0), cont))
    assert surface.values[0][0, 1, 0] == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("penalty,z_max", [(2.0, 30.0), (10.0, 36.0)])
def test_matches_oracle_small(n, penalty, z_max):
    pair = GamePut(100.0, penalty)
    lat, tab = tables_for(pair, n)
    g = oracle_grid(z_max=z_max)
    surface, _ = solve(lat, tab, FRICTION, g)
    ref = oracle_table(TinyInstance(lat, FRICTION, pair, g))
    assert np.max(np.abs(surface.values[0][0] - ref)) <= 1e-12


@pytest.mark.parametrize("pair", [GameCall(100.0, 3.0), LookbackGamePut(100.0, 3.0)], ids=lambda p: p.kind)
def test_other_payoffs_match_oracle(pair):
    lat, tab = tables_for(pair, 2)
    g = oracle_grid(z_max=40.0, z_steps=11)
    surface, _ = solve(lat, tab, FRICTION, g)
    ref = oracle_table(TinyInstance(lat, FRICTION, pair, g))
    assert np.max(np.abs(surface.values[0][0] - ref)) <= 1e-12


def test_vectorised_matches_scalar_step(put10):
    lat, tab = tables_for(put10, 3)
    g = oracle_grid(z_max=40.0, z_steps=17)
    surface, policy = solve(lat, tab, FRICTION, g)
    for k in range(3):
        for node in range(k + 1):
            for iz, z in enumerate(g.z_grid):
                for iy, y in enumerate(g.y_grid):
                    v, a, b, f = step_value(tab, FRICTION, g, k, node, float(z), float(y), surface.values[k + 1])
                    assert v == surface.values[k][node, iz, iy]
                    assert a == policy.action[k][node, iz, iy]
                    assert b == policy.beta[k][node, iz, iy]
                    assert f == policy.buyer_exercise[k][node, iz, iy]


def test_policy_invariants(put10):
    lat, tab = tables_for(put10, 6)
    g = default_grid(tab, FRICTION, z_steps=61, y_steps=11)
    surface, policy = solve(lat, tab, FRICTION, g)
    layers = lat.layers(True)
    for k in range(6):
        S = layers[k].prices
        for node, iz, iy in zip(*np.nonzero(policy.action[k] == TRADE)):
            ts = trade_set(float(S[node]), float(g.z_grid[iz]), float(g.y_grid[iy]), FRICTION)
            assert ts.contains(float(policy.beta[k][node, iz, iy]))
        canc = policy.action[k] == CANCEL
        stop = np.maximum(tab.Y[k][:, None] - g.z_grid[None, :], 0.0)[:, :, None]
        cancel = np.maximum(tab.X[k][:, None] - g.z_grid[None, :], 0.0)[:, :, None]
        v = surface.values[k]
        assert np.all(v[canc] == np.broadcast_to(np.maximum(stop, cancel), v.shape)[canc])
        for node, iz, iy in zip(*np.nonzero(policy.action[k] == FORCED)):
            z, y = float(g.z_grid[iz]), float(g.y_grid[iy])
            assert continuation_value(tab, FRICTION, g, k, int(node), z, y, surface.values[k + 1]) is None


def test_query_risk(put10):
    lat, tab = tables_for(put10, 4)
    g = default_grid(tab, FRICTION, z_steps=41, y_steps=5)
    surface, _ = solve(lat, tab, FRICTION, g)
    i0 = g.y_index(0.0)
    root = surface.values[0][0, :, i0]
    assert query_risk(surface, float(g.z_grid[7]), 0.0) == root[7]
    mid = 0.5 * (g.z_grid[7] + g.z_grid[8])
    q = query_risk(surface, float(mid), 0.0)
    assert min(root[7], root[8]) <= q <= max(root[7], root[8])
    zs = np.linspace(0.0, g.z_max, 300)
    qs = [query_risk(surface, float(z), 0.0) for z in zs]
    assert np.all(np.diff(qs) <= 1e-12)
    with pytest.raises(GridError):
        query_risk(surface, -1.0, 0.0)
    assert query_risk(surface, 2.0 * g.z_max, 0.0) == 0.0


def test_higher_penalty_never_lowers_risk():
    lat = build_lattice(MARKET, 4)
    g = SolverGrid(np.linspace(0.0, 60.0, 41), np.linspace(-1.0, 1.0, 5))
    vals = []
    for pen in (0.0, 2.0, 10.0):
        s, _ = solve(lat, GamePut(100.0, pen), FRICTION, g)
        vals.append(s.values[0])
    assert np.all(vals[0] <= vals[1] + 1e-12) and np.all(vals[1] <= vals[2] + 1e-12)


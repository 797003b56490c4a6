import types

import numpy as np
import pytest
from conftest import FRICTION, MARKET, oracle_grid

from gamehedge.model import MarketParams, build_lattice
from gamehedge.oracle import (
    OracleSizeError,
    TinyInstance,
    brute_force_risk,
    enumerate_no_trade,
    no_trade_dynkin,
    oracle_table,
)
from gamehedge.payoff import GamePut, LookbackGamePut
from gamehedge.solver import solve


def _inst(pair, n, **kw):
    lat = build_lattice(MARKET, n)
    return TinyInstance(lat, FRICTION, pair, oracle_grid(z_max=kw.pop("z_max", 40.0), **kw))


def test_size_guard(put2):
    with pytest.raises(OracleSizeError):
        _inst(put2, 4)


def test_negative_cash_rejected(put2):
    with pytest.raises(ValueError):
        brute_force_risk(_inst(put2, 1), -1.0, 0.0)


def test_rich_seller_zero(put2):
    assert brute_force_risk(_inst(put2, 2), 30.0, 0.0) == 0.0


def test_one_step_by_hand(put2):
    inst = _inst(put2, 1)
    lat = inst.lattice
    p, z = lat.up_prob, 0.3
    cont = p * max(100.0 - lat.price(1, 1) - z, 0.0) + (1 - p) * max(100.0 - lat.price(1, 0) - z, 0.0)
    # z < delta: no trade is affordable, so the one-step game has a closed form
    assert brute_force_risk(inst, z, 0.0) == pytest.approx(max(0.0, min(2.0 - z, cont)), abs=1e-15)


@pytest.mark.parametrize("penalty", [0.0, 2.0, 10.0])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_dynkin_recursion_matches_enumeration(penalty, n):
    lat = build_lattice(MARKET, n)
    pair = GamePut(100.0, penalty)
    for z in (0.0, 0.3, 4.0):
        assert no_trade_dynkin(lat, pair, z)[0][0] == pytest.approx(enumerate_no_trade(lat, pair, z), abs=1e-12)


def test_dynkin_requires_markov():
    with pytest.raises(TypeError):
        no_trade_dynkin(build_lattice(MARKET, 2), LookbackGamePut(100.0, 1.0), 0.3)


@pytest.mark.parametrize("n", [1, 2])
def test_restricting_players(put10, n):
    full = _inst(put10, n)
    lazy_buyer = TinyInstance(full.lattice, FRICTION, put10, full.grid, buyer_may_stop_early=False)
    no_cancel = TinyInstance(full.lattice, FRICTION, put10, full.grid, seller_may_cancel=False)
    few_shares = TinyInstance(full.lattice, FRICTION, put10, oracle_grid(z_max=40.0, y_max=1.0, y_steps=3))
    for z in (0.0, 2.0, 6.0, 14.0):
        for y in (-1.0, 0.0, 1.0):
            v = brute_force_risk(full, z, y)
            assert brute_force_risk(lazy_buyer, z, y) <= v + 1e-15
            assert brute_force_risk(no_cancel, z, y) >= v - 1e-15
            assert brute_force_risk(few_shares, z, y) >= v - 1e-15


def test_relabelling_trades_keeps_value(put10):
    inst = _inst(put10, 2)
    ref = [brute_force_risk(inst, z, 0.0) for z in (1.0, 5.0, 9.0)]
    g = inst.grid
    flipped = types.SimpleNamespace(z_grid=g.z_grid, y_grid=g.y_grid[::-1].copy(), y_index=g.y_index)
    inst2 = TinyInstance(inst.lattice, FRICTION, put10, g)
    object.__setattr__(inst2, "grid", flipped)
    assert [brute_force_risk(inst2, z, 0.0) for z in (1.0, 5.0, 9.0)] == ref


def test_leaf_count_within_bound(put2):
    inst = _inst(put2, 3, z_max=30.0)
    brute_force_risk(inst, 5.0, 0.0)
    assert 0 < inst.leaves <= inst.leaf_bound()


def test_payoffs_use_explicit_paths():
    inst = _inst(LookbackGamePut(100.0, 1.0), 2)
    _, y, _ = inst.payoffs((0, 1))
    assert y == pytest.approx(100.0 - inst.lattice.price(1, 0), abs=1e-12)
    _, y_ud, _ = inst.payoffs((1, 0))
    assert y_ud == 0.0


def test_exact_game_can_jump_in_cash(put10):
    # A short position that cannot survive an up-move must trade and pay the
    # fee; a little more cash lets it wait instead. The value drops by more
    # than the extra cash, so risk is monotone but not 1-Lipschitz in z.
    lat3 = build_lattice(MARKET, 3)
    g = oracle_grid(z_max=45.0)
    sub = MarketParams(lat3.price(1, 0), MARKET.kappa, MARKET.vartheta, 2.0 / 3.0)
    ref = oracle_table(TinyInstance(build_lattice(sub, 2), FRICTION, put10, g))
    surface, _ = solve(lat3, put10, FRICTION, g)
    assert np.max(np.abs(surface.values[1][0] - ref)) <= 1e-12
    iy = g.y_index(-2.0)
    drop = ref[4, iy] - ref[5, iy]
    assert drop > (g.z_grid[5] - g.z_grid[4]) + 1.0
    assert np.all(np.diff(ref, axis=0) <= 0.0)

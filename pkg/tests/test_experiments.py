import math
from dataclasses import replace

import pytest

from gamehedge.config import parse_config
from gamehedge.experiments import (
    ConvergenceError,
    ConvergenceRow,
    diffs_non_increasing,
    fit_rate,
    run_convergence,
    z_steps_for,
)

CFG = parse_config(
    """
[market]
s = 100
kappa = 0.2
vartheta = 0.02
T = 1
[friction]
delta = 0.5
mu = 0.01
[payoff]
kind = game_put
strike = 100
penalty = 10
[solver]
z_steps = 41
y_steps = 5
y_max_cap = 1
z0 = 5
[experiment]
n_list = 2, 4
z_steps_cap = 101
"""
)


def _rows(diffs):
    return [ConvergenceRow(8 * 2**i, 1.0, d, 0.0, 10, 5, 1.0) for i, d in enumerate(diffs)]


def test_fit_exact_power_law():
    rows = _rows([None] + [n ** -0.5 for n in (16, 32, 64, 128)])
    fit = fit_rate(rows)
    assert fit.slope == pytest.approx(-0.5, abs=1e-6)
    assert not fit.exact


def test_fit_constant_diff():
    assert fit_rate(_rows([None, 0.3, 0.3, 0.3])).slope == pytest.approx(0.0, abs=1e-12)


def test_fit_exact_convergence():
    fit = fit_rate(_rows([None, 0.0, 0.0, 0.0]))
    assert fit.exact and fit.slope == -math.inf


def test_fit_needs_three_points():
    with pytest.raises(ValueError):
        fit_rate(_rows([None, 0.1, 0.05]))
    with pytest.raises(ValueError):
        fit_rate(_rows([None, 0.1, 0.0, 0.05]))


def test_non_increasing_with_slack():
    assert diffs_non_increasing(_rows([None, 0.1, 0.105, 0.05]))
    assert not diffs_non_increasing(_rows([None, 0.1, 0.12]))


def test_z_points_scale_with_root_n():
    assert z_steps_for(CFG, 2, 2) == 41
    assert z_steps_for(CFG, 8, 2) == 81
    assert z_steps_for(CFG, 64, 2) == 101  # capped


def test_repeated_n_gives_identical_risks():
    rows = run_convergence(CFG, [4, 4])
    assert rows[0].risk == rows[1].risk
    assert rows[1].diff_prev == 0.0
    assert rows[0].diff_prev is None


def test_rows_in_order_and_bounded():
    rows = run_convergence(CFG, [2, 4, 8])
    assert [r.n for r in rows] == [2, 4, 8]
    assert all(r.diff_prev is None or r.diff_prev >= 0.0 for r in rows)
    assert all(0.0 <= r.risk <= r.z_max for r in rows)


def test_parallel_matches_serial():
    a = run_convergence(CFG, [2, 4, 8], workers=1)
    b = run_convergence(CFG, [2, 4, 8], workers=2)
    assert [r.risk for r in a] == [r.risk for r in b]


def test_error_names_n():
    bad = replace(CFG, solver=replace(CFG.solver, z_max=5.0))
    with pytest.raises(ConvergenceError, match="n=2"):
        run_convergence(bad, [2, 4])


def test_list_must_be_sorted():
    with pytest.raises(ValueError):
        run_convergence(CFG, [4, 2])

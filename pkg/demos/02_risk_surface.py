"""
Shortfall risk of a game put
============================

Solve the binomial game on the (cash, shares) grid and read off the risk
curve at the root. With a penalty of 2 the seller simply cancels at once
when it has 2 in cash; with a penalty of 10 hedging matters.
"""

import numpy as np

from gamehedge import FrictionParams, GamePut, MarketParams, build_lattice, default_grid, evaluate_on_lattice, query_risk, solve
from gamehedge.solver import ACTION_NAMES

market = MarketParams(s=100.0, kappa=0.2, vartheta=0.02, T=1.0)
fp = FrictionParams(delta=0.5, mu=0.01)
n = 16
lattice = build_lattice(market, n)
print(f"n={n}, real-world up probability {lattice.up_prob}")

for penalty in (2.0, 10.0):
    put = GamePut(strike=100.0, penalty=penalty)
    tables = evaluate_on_lattice(put, lattice)
    grid = default_grid(tables, fp, y_steps=21)
    surface, policy = solve(lattice, tables, fp, grid)

    print(f"\npenalty {penalty}: max X on the tree {tables.max_x:.3f}")
    for z in (0.0, 1.0, 2.0, 5.0, 10.0, 20.0):
        print(f"  R(z={z:>4}, y=0) = {query_risk(surface, z, 0.0):.6f}")

    # first move of the seller from (z, 0)
    i0 = grid.y_index(0.0)
    for z in (1.0, 5.0, 10.0):
        a, b = policy.lookup(0, 0, z, 0.0)
        print(f"  at z={z}: {ACTION_NAMES[a]}" + (f" {b:+.2f} shares" if b else ""))

    # holding shares never helps compared to holding their liquidation value in cash
    root = surface.values[0][0]
    print("  max over z of R(z, y) - R(z, 0):", float(np.max(root - root[:, i0 : i0 + 1])))

"""
Brute force on tiny trees
=========================

For n <= 3 the whole game can be expanded: every seller action at every
path prefix, the buyer's stop/continue answer and each price move. The
backward induction has to reproduce it exactly.
"""

import time

import numpy as np

from gamehedge import FrictionParams, GamePut, LookbackGamePut, MarketParams, TinyInstance, build_lattice, solve
from gamehedge.oracle import enumerate_no_trade, no_trade_dynkin, oracle_table
from gamehedge.solver import SolverGrid

market = MarketParams(s=100.0, kappa=0.2, vartheta=0.02, T=1.0)
fp = FrictionParams(delta=0.5, mu=0.01)
grid = SolverGrid(np.linspace(0.0, 45.0, 21), np.array([-2.0, -1.0, 0.0, 1.0, 2.0]))

for pair in (GamePut(100.0, 2.0), GamePut(100.0, 10.0), LookbackGamePut(100.0, 5.0)):
    for n in (1, 2, 3):
        lattice = build_lattice(market, n)
        t0 = time.perf_counter()
        inst = TinyInstance(lattice, fp, pair, grid)
        ref = oracle_table(inst)
        surface, _ = solve(lattice, pair, fp, grid)
        diff = np.max(np.abs(surface.values[0][0] - ref))
        print(f"{pair.kind:>18} n={n}: max diff {diff:.1e}, {inst.leaves:>7} leaves, {time.perf_counter() - t0:.2f} s")

# without affordable trades the game is a plain Dynkin game
lattice = build_lattice(market, 3)
put = GamePut(100.0, 10.0)
print("\ntrade-free game at z=0.3:", no_trade_dynkin(lattice, put, 0.3)[0][0], enumerate_no_trade(lattice, put, 0.3))

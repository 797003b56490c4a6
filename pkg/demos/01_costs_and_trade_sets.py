"""
Trade costs with a fee floor
============================

A trade of beta shares at price S costs max(delta, mu |beta| S). We look at
how that cost changes the liquidation value and which trades stay affordable.
"""

import numpy as np

from gamehedge import FrictionParams, mark_to_market, post_trade_value, trade_cost, trade_set

fp = FrictionParams(delta=0.5, mu=0.01)

# small trades pay the floor, large ones pay the proportional rate
for beta in (0.1, 0.5, 1.0, 5.0):
    print(f"cost of {beta:>4} shares at 100: {trade_cost(beta, 100.0, fp):.2f}")

# buying one share with 10 in cash: pay 1 now, and 1 more to close later
print("liquidation value after buying 1 share:", post_trade_value(100.0, 10.0, 0.0, 1.0, fp))

# closing a position never loses liquidation value, it is already netted
print("closing 3 shares:", post_trade_value(100.0, 7.0, 3.0, -3.0, fp))

# holding one share while the price moves from 100 to 110
print("mark to market:", mark_to_market(100.0, 110.0, 10.0, 1.0, fp))

# affordable trades from (z, y) as closed intervals
for z, y in [(0.3, 0.0), (1.0, 0.0), (5.0, 0.0), (0.0, 1.0), (2.0, -1.5)]:
    ts = trade_set(100.0, z, y, fp)
    shown = ", ".join(f"[{lo:.3f}, {hi:.3f}]" for lo, hi in ts) or "none"
    print(f"z={z:<4} y={y:<5} feasible trades: {shown}")

# two trades at one price never beat the single combined trade
rng = np.random.default_rng(0)
worst = -np.inf
for _ in range(10_000):
    z, y, b1, b2 = rng.uniform(0, 20), rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)
    two = post_trade_value(100.0, post_trade_value(100.0, z, y, b1, fp), y + b1, b2, fp)
    worst = max(worst, two - post_trade_value(100.0, z, y, b1 + b2, fp))
print(f"largest gain from splitting a trade: {worst:.2e}")

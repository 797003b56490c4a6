"""
Binomial hedge in the Black-Scholes model
=========================================

Each simulated Brownian path is cut at its first passages of +-sqrt(T/n);
the signs of those passages form a binomial path along which the binomial
policy is replayed. Trades happen at the passage times in continuous time,
and a family of threshold buyers probes the resulting shortfall.
"""

from gamehedge import FrictionParams, GamePut, MarketParams, build_lattice, buyer_threshold_strategy, default_grid
from gamehedge import evaluate_on_lattice, lift_and_simulate, solve
from gamehedge.lift import DEFAULT_THRESHOLDS

market = MarketParams(s=100.0, kappa=0.2, vartheta=0.02, T=1.0)
fp = FrictionParams(delta=0.5, mu=0.01)
put = GamePut(strike=100.0, penalty=10.0)
n, z0 = 16, 5.0

lattice = build_lattice(market, n)
tables = evaluate_on_lattice(put, lattice)
surface, policy = solve(lattice, tables, fp, default_grid(tables, fp, y_steps=21))
buyers = [buyer_threshold_strategy(c) for c in DEFAULT_THRESHOLDS]

for fine in (2**10, 2**11, 2**12):
    rep = lift_and_simulate(policy, surface, market, fp, put, n, 2000, buyers, seed=42, z0=z0, fine_steps=fine)
    print(f"\nfine grid 2^{fine.bit_length() - 1}: risk R_{n}({z0}, 0) = {rep.risk:.4f}")
    print(f"  admissibility violations {rep.admissibility_violations} (lowest value {rep.worst_violation:.3f})")
    print(f"  value match error {rep.value_match_error:.4f}, incomplete embeddings {rep.incomplete_embeddings}")
    for s in rep.strategies:
        print(f"  {s.name:>16}: shortfall {s.mean_shortfall:.4f} +- {s.stderr:.4f}")

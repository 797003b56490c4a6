"""
Risk as the tree is refined
===========================

Successive differences |R_2n - R_n| stand in for the unknown continuous
limit. The cash grid grows like sqrt(n) so grid error shrinks with the
lattice. Pass --full to include n = 64 (a few minutes).
"""

import sys
from pathlib import Path

from gamehedge.config import load_config
from gamehedge.experiments import diffs_non_increasing, fit_rate, run_convergence

here = Path(__file__).parent / "configs"
n_list = [8, 16, 32, 64] if "--full" in sys.argv else [8, 16, 32]

for name in ("canonical.ini", "penalty10.ini"):
    cfg = load_config(here / name)
    rows = run_convergence(cfg, n_list)
    print(f"\n{name}: penalty {cfg.payoff.penalty}, query (z={cfg.solver.z0}, y={cfg.solver.y0})")
    for r in rows:
        diff = "" if r.diff_prev is None else f"{r.diff_prev:.3e}"
        print(f"  n={r.n:3d} z points={r.z_steps:4d} R={r.risk:.8f} diff={diff:>10} {r.wall_ms / 1e3:6.1f} s")
    print("  differences non-increasing (10% slack):", diffs_non_increasing(rows))
    try:
        fit = fit_rate(rows)
        print("  exact convergence" if fit.exact else f"  fitted slope {fit.slope:.3f}")
    except ValueError as exc:
        print("  no fit:", exc)

"""Convergence of the binomial risk as the number of steps doubles."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .model import build_lattice
from .payoff import evaluate_on_lattice
from .solver import default_grid, query_risk, solve

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    def __init__(self, n: int, cause: Exception):
        super().__init__(f"solve failed at n={n}: {cause}")
        self.n = n


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    risk: float
    diff_prev: float | None  # |R_n - R_prev|, None on the first row
    wall_ms: float
    z_steps: int
    y_steps: int
    z_max: float


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    exact: bool = False  # every difference was zero; nothing to fit
    points: int = 0


def z_steps_for(cfg: RunConfig, n: int, n_base: int) -> int:
    """Grid size coupled to n: intervals grow like (n / n_base) ** coupling."""
    e = cfg.experiment
    intervals = (cfg.solver.z_steps - 1) * (n / n_base) ** e.z_coupling
    return int(min(e.z_steps_cap, 1 + round(intervals)))


def _solve_one(cfg: RunConfig, n: int, z_steps: int) -> tuple[float, float, int, float]:
    t0 = time.perf_counter()
    lattice = build_lattice(cfg.market_params(), n)
    tables = evaluate_on_lattice(cfg.payoff_pair(), lattice)
    sv = cfg.solver
    grid = default_grid(
        tables,
        cfg.friction_params(),
        z0=sv.z0,
        y0=sv.y0,
        z_steps=z_steps,
        y_steps=sv.y_steps,
        y_max_cap=sv.y_max_cap,
        z_max_factor=sv.z_max_factor,
        z_max=sv.z_max,
    )
    surface, _ = solve(lattice, tables, cfg.friction_params(), grid)
    risk = query_risk(surface, sv.z0, sv.y0)
    return risk, 1e3 * (time.perf_counter() - t0), len(grid.y_grid), grid.z_max


def run_convergence(cfg: RunConfig, n_list=None, workers: int | None = None) -> list[ConvergenceRow]:
    ns = list(cfg.experiment.n_list if n_list is None else n_list)
    if not ns or any(b < a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_list must be nonempty and non-decreasing")
    workers = cfg.experiment.workers if workers is None else workers
    sizes = [z_steps_for(cfg, n, ns[0]) for n in ns]

    results = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_solve_one, cfg, n, m) for n, m in zip(ns, sizes)]
            for n, fut in zip(ns, futs):
                try:
                    results.append(fut.result())
                except Exception as exc:
                    raise ConvergenceError(n, exc) from exc
    else:
        for n, m in zip(ns, sizes):
            try:
                results.append(_solve_one(cfg, n, m))
            except Exception as exc:
                raise ConvergenceError(n, exc) from exc
            log.info("n=%d risk=%.10g (%.0f ms)", n, results[-1][0], results[-1][1])

    rows = []
    prev = None
    for n, m, (risk, ms, ny, zmax) in zip(ns, sizes, results):
        diff = None if prev is None else abs(risk - prev)
        rows.append(ConvergenceRow(n, risk, diff, ms, m, ny, zmax))
        prev = risk
    return rows


def fit_rate(rows) -> RateFit:
    """Least-squares slope of log diff_prev against log n."""
    diffs = [(r.n, r.diff_prev) for r in rows if r.diff_prev is not None]
    if diffs and all(d == 0.0 for _, d in diffs):
        return RateFit(slope=-math.inf, intercept=-math.inf, exact=True, points=len(diffs))
    pos = [(n, d) for n, d in diffs if d > 0.0]
    if len(pos) < 3:
        raise ValueError(f"need at least 3 rows with positive differences, got {len(pos)}")
    x = np.log([n for n, _ in pos])
    y = np.log([d for _, d in pos])
    slope, intercept = np.polyfit(x, y, 1)
    return RateFit(float(slope), float(intercept), False, len(pos))


def diffs_non_increasing(rows, slack: float = 0.10) -> bool:
    d = [r.diff_prev for r in rows if r.diff_prev is not None]
    return all(b <= (1.0 + slack) * a for a, b in zip(d, d[1:]))

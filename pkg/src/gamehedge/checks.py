"""Structural checks on a solved risk surface.

Each check returns a ``CheckResult``; ``run_invariants`` bundles the ones
that need only a single solve, ``cost_monotonicity`` re-solves with
different fees on a fixed grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .friction import FrictionParams
from .model import BinomialLattice
from .payoff import PayoffTables
from .solver import RiskSurface, SolverGrid, solve

LIPSCHITZ_TOL = 1e-9
SHARES_TOL = 1e-6


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float  # largest violation found (<= 0 when passed)
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: worst={self.worst:.3g} {self.detail}".rstrip()


def _result(name: str, excess: float, tol: float, detail: str = "") -> CheckResult:
    return CheckResult(name, bool(excess <= tol), float(excess), detail)


def check_bounds(surface: RiskSurface) -> CheckResult:
    top = surface.tables.max_x
    excess = max(max(float(-v.min()), float(v.max() - top)) for v in surface.values)
    return _result("bounds", excess, 0.0, f"max X={top:.6g}")


def check_lower_envelope(surface: RiskSurface) -> CheckResult:
    z = surface.grid.z_grid
    excess = -np.inf
    for k, v in enumerate(surface.values):
        floor = np.maximum(surface.tables.Y[k][:, None] - z[None, :], 0.0)
        excess = max(excess, float(np.max(floor[:, :, None] - v)))
    return _result("lower_envelope", excess, 0.0)


def check_monotone_z(surface: RiskSurface, tol: float = LIPSCHITZ_TOL) -> CheckResult:
    excess = max(float(np.max(np.diff(v, axis=1))) for v in surface.values)
    return _result("monotone_z", excess, tol)


def check_lipschitz_z(surface: RiskSurface, tol: float = LIPSCHITZ_TOL) -> CheckResult:
    dz = np.diff(surface.grid.z_grid)[None, :, None]
    excess = max(float(np.max(np.abs(np.diff(v, axis=1)) - dz)) for v in surface.values)
    return _result("lipschitz_z", excess, tol)


def check_shares_help_not(surface: RiskSurface, tol: float = SHARES_TOL) -> CheckResult:
    """Holding shares never raises the risk: liquidating them costs nothing extra."""
    i0 = surface.grid.y_index(0.0)
    excess = max(float(np.max(v - v[:, :, i0 : i0 + 1])) for v in surface.values)
    return _result("shares_vs_cash", excess, tol)


def run_invariants(surface: RiskSurface) -> list[CheckResult]:
    return [
        check_bounds(surface),
        check_lower_envelope(surface),
        check_monotone_z(surface),
        check_lipschitz_z(surface),
        check_shares_help_not(surface),
    ]


def cost_monotonicity(
    lattice: BinomialLattice,
    tables: PayoffTables,
    grid: SolverGrid,
    base: FrictionParams,
    deltas=(0.25, 0.5, 1.0),
    mus=(0.005, 0.01, 0.02),
    tol: float = LIPSCHITZ_TOL,
) -> list[CheckResult]:
    """Root risk with no shares held must not fall when a fee rises."""
    i0 = grid.y_index(0.0)
    out = []
    for name, family in (
        ("delta_monotone", [FrictionParams(d, base.mu) for d in sorted(deltas)]),
        ("mu_monotone", [FrictionParams(base.delta, m) for m in sorted(mus)]),
    ):
        roots = [solve(lattice, tables, fp, grid)[0].values[0][:, :, i0] for fp in family]
        excess = max(float(np.max(a - b)) for a, b in zip(roots[:-1], roots[1:]))
        out.append(_result(name, excess, tol, f"{len(family)} fee levels"))
    return out

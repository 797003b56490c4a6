"""Command-line driver: ``python -m gamehedge <command> --config run.ini``.

Exit codes: 0 success, 2 configuration error, 3 numerical contract
violation (failed invariant under --check, oracle mismatch, incomplete
embeddings).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import csvio
from .checks import cost_monotonicity, run_invariants
from .config import ConfigError, RunConfig, load_config
from .experiments import ConvergenceError, fit_rate, run_convergence
from .lift import EmbeddingCoverageError, buyer_threshold_strategy, lift_and_simulate
from .model import build_lattice
from .oracle import OracleSizeError, TinyInstance, oracle_table
from .payoff import LatticeSizeError, evaluate_on_lattice
from .solver import GridError, SolverGrid, default_grid, query_risk, solve

log = logging.getLogger("gamehedge")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
ORACLE_TOL = 1e-12


class ContractViolation(RuntimeError):
    pass


def build_grid(cfg: RunConfig, tables) -> SolverGrid:
    sv = cfg.solver
    return default_grid(
        tables,
        cfg.friction_params(),
        z0=sv.z0,
        y0=sv.y0,
        z_steps=sv.z_steps,
        y_steps=sv.y_steps,
        y_max_cap=sv.y_max_cap,
        z_max_factor=sv.z_max_factor,
        z_max=sv.z_max,
    )


def _solve(cfg: RunConfig):
    lattice = build_lattice(cfg.market_params(), cfg.solver.n)
    tables = evaluate_on_lattice(cfg.payoff_pair(), lattice)
    grid = build_grid(cfg, tables)
    surface, policy = solve(lattice, tables, cfg.friction_params(), grid)
    return lattice, tables, grid, surface, policy


def _run_checks(cfg: RunConfig, lattice, tables, grid, surface) -> None:
    results = run_invariants(surface) + cost_monotonicity(lattice, tables, grid, cfg.friction_params())
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise ContractViolation(f"invariant checks failed: {', '.join(failed)}")


def cmd_risk(cfg: RunConfig, out: Path, args) -> None:
    lattice, tables, grid, surface, policy = _solve(cfg)
    risk = query_risk(surface, cfg.solver.z0, cfg.solver.y0)
    print(f"R_{cfg.solver.n}(z={cfg.solver.z0:g}, y={cfg.solver.y0:g}) = {csvio.fmt(risk)}")
    csvio.write_surface(out / "surface.csv", surface, policy, cfg.output.surface_layers)
    if args.check:
        _run_checks(cfg, lattice, tables, grid, surface)


def cmd_policy(cfg: RunConfig, out: Path, args) -> None:
    lattice, tables, grid, surface, policy = _solve(cfg)
    csvio.write_policy(out / "policy.csv", surface, policy)
    if args.check:
        _run_checks(cfg, lattice, tables, grid, surface)


def cmd_simulate(cfg: RunConfig, out: Path, args) -> None:
    _, _, _, surface, policy = _solve(cfg)
    sim = cfg.sim
    report = lift_and_simulate(
        policy,
        surface,
        cfg.market_params(),
        cfg.friction_params(),
        cfg.payoff_pair(),
        cfg.solver.n,
        sim.paths,
        [buyer_threshold_strategy(c) for c in sim.thresholds],
        seed=sim.seed,
        z0=cfg.solver.z0,
        y0=cfg.solver.y0,
        fine_steps=sim.fine_steps,
        horizon_factor=sim.horizon_factor,
        trace=args.trace,
    )
    csvio.write_sim(out / "sim.csv", report)
    if args.trace:
        csvio.write_trace(out / "trace.csv", report)
    print(f"risk {csvio.fmt(report.risk)}; {report.paths} paths; violations {report.admissibility_violations}")
    for s in report.strategies:
        print(f"  {s.name:>16}: {s.mean_shortfall:.6f} +- {s.stderr:.6f}")
    if args.check and report.admissibility_violations:
        raise ContractViolation(f"{report.admissibility_violations} paths broke admissibility")


def cmd_converge(cfg: RunConfig, out: Path, args) -> None:
    rows = run_convergence(cfg)
    csvio.write_convergence(out / "convergence.csv", rows, timing=args.timing)
    for r in rows:
        print(f"n={r.n:4d} risk={csvio.fmt(r.risk)} diff={csvio.fmt(r.diff_prev)}")
    try:
        fit = fit_rate(rows)
    except ValueError as exc:
        print(f"no rate fit: {exc}")
        csvio.write_rows(out / "convergence_fit.csv", ("slope", "intercept", "exact", "points"), [])
        return
    csvio.write_rows(
        out / "convergence_fit.csv",
        ("slope", "intercept", "exact", "points"),
        [[fit.slope, fit.intercept, fit.exact, fit.points]],
    )
    print("exact convergence (all differences zero)" if fit.exact else f"fitted slope {fit.slope:.4f}")


def cmd_oracle_check(cfg: RunConfig, out: Path, args) -> None:
    lattice = build_lattice(cfg.market_params(), cfg.solver.n)
    tables = evaluate_on_lattice(cfg.payoff_pair(), lattice)
    grid = build_grid(cfg, tables)
    inst = TinyInstance(lattice, cfg.friction_params(), cfg.payoff_pair(), grid)
    surface, _ = solve(lattice, tables, cfg.friction_params(), grid)
    oracle = oracle_table(inst)
    mine = surface.values[0][0]
    diff = np.abs(mine - oracle)
    rows = []
    for iz, z in enumerate(grid.z_grid):
        for iy, y in enumerate(grid.y_grid):
            rows.append([z, y, mine[iz, iy], oracle[iz, iy], diff[iz, iy]])
    csvio.write_rows(out / "oracle.csv", ("z", "y", "solver", "oracle", "abs_diff"), rows)
    worst = float(diff.max())
    print(f"n={cfg.solver.n}: {diff.size} states, max abs diff {worst:.3g}, {inst.leaves} leaves")
    if not worst <= ORACLE_TOL:
        raise ContractViolation(f"solver and oracle differ by {worst:.3g} > {ORACLE_TOL:g}")


COMMANDS = {
    "risk": cmd_risk,
    "policy": cmd_policy,
    "simulate": cmd_simulate,
    "converge": cmd_converge,
    "oracle-check": cmd_oracle_check,
}


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gamehedge", description="Shortfall risk of game options under minimal trade costs.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="INI run configuration")
    ap.add_argument("--out", default=".", help="output directory for CSV files")
    ap.add_argument("--check", action="store_true", help="run invariant checks after the solve")
    ap.add_argument("--trace", action="store_true", help="dump per-path traces (simulate)")
    ap.add_argument("--seed", type=_seed, help="override sim.seed")
    ap.add_argument("--timing", action="store_true", help="fill wall_ms in convergence.csv")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    try:
        COMMANDS[args.command](cfg, out, args)
    except (GridError, OracleSizeError, LatticeSizeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        code = EXIT_CONFIG if isinstance(exc.__cause__, (GridError, LatticeSizeError)) else EXIT_NUMERIC
        print(f"error: {exc}", file=sys.stderr)
        return code
    except (ContractViolation, EmbeddingCoverageError) as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""CSV output with fixed headers, LF line endings and 17-significant-digit
floats, so equal inputs give byte-identical files."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .solver import ACTION_NAMES, Policy, RiskSurface

SURFACE_HEADER = ("k", "node", "z", "y", "value", "action", "beta")
POLICY_HEADER = SURFACE_HEADER + ("buyer_flag",)
CONVERGENCE_HEADER = ("n", "risk", "diff_prev", "wall_ms")
SIM_HEADER = ("strategy", "paths", "mean_shortfall", "stderr", "violations", "value_match_error", "incomplete")


def fmt(x) -> str:
    """Round-trip float text; integers pass through, None becomes empty."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def write_rows(path: str | Path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return path


def _layer_rows(surface: RiskSurface, policy: Policy, k: int, with_flag: bool):
    g = surface.grid
    v, a, b = surface.values[k], policy.action[k], policy.beta[k]
    flag = policy.buyer_exercise[k]
    z_txt = [fmt(z) for z in g.z_grid]
    y_txt = [fmt(y) for y in g.y_grid]
    k_txt = str(k)
    for node in range(v.shape[0]):
        node_txt = str(node)
        for iz in range(v.shape[1]):
            for iy in range(v.shape[2]):
                row = [
                    k_txt,
                    node_txt,
                    z_txt[iz],
                    y_txt[iy],
                    fmt(v[node, iz, iy]),
                    ACTION_NAMES[a[node, iz, iy]],
                    fmt(b[node, iz, iy]),
                ]
                if with_flag:
                    row.append(fmt(bool(flag[node, iz, iy])))
                yield row


def write_surface(path, surface: RiskSurface, policy: Policy, layers: str = "all") -> Path:
    ks = range(surface.n + 1) if layers == "all" else [0]
    rows = (r for k in ks for r in _layer_rows(surface, policy, k, False))
    return write_rows(path, SURFACE_HEADER, rows)


def write_policy(path, surface: RiskSurface, policy: Policy) -> Path:
    return write_rows(path, POLICY_HEADER, _layer_rows(surface, policy, 0, True))


def write_convergence(path, rows, timing: bool = False) -> Path:
    out = []
    for r in rows:
        out.append([r.n, r.risk, r.diff_prev, r.wall_ms if timing else None])
    return write_rows(path, CONVERGENCE_HEADER, out)


def write_sim(path, report) -> Path:
    out = []
    for s in report.strategies:
        out.append(
            [
                s.name,
                report.paths,
                s.mean_shortfall,
                s.stderr,
                report.admissibility_violations,
                report.value_match_error,
                report.incomplete_embeddings,
            ]
        )
    return write_rows(path, SIM_HEADER, out)


def write_trace(path, report) -> Path:
    rows = report.trace
    header = tuple(rows[0]) if rows else ("path",)
    return write_rows(path, header, ([r[h] for h in header] for r in rows))


def read_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        data = list(csv.reader(fh))
    return data[0], data[1:]

"""Backward induction for the binomial shortfall risk of a game option.

State per node is (z, y): liquidation value and share count. At each step
the buyer may stop, the seller may cancel, wait, or make one trade onto
the share grid, after which the price moves. Off-grid liquidation values
after a move are handled by linear interpolation in z, which is the same
as replacing the value by a fair lottery on the two bracketing grid points.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .friction import FrictionParams, mark_to_market, post_trade_value
from .model import BinomialLattice, TreeLayer
from .payoff import PayoffPair, PayoffTables, evaluate_on_lattice

log = logging.getLogger(__name__)

CANCEL, WAIT, TRADE, FORCED = 0, 1, 2, 3
ACTION_NAMES = ("cancel", "wait", "trade", "forced")

# elements per vectorised block (nodes x z x y x y_target)
_BLOCK = 1 << 21


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class SolverGrid:
    z_grid: np.ndarray
    y_grid: np.ndarray

    def __post_init__(self) -> None:
        z = np.asarray(self.z_grid, dtype=float)
        y = np.asarray(self.y_grid, dtype=float)
        if z.ndim != 1 or len(z) < 2 or np.any(np.diff(z) <= 0.0):
            raise GridError("z_grid must be strictly increasing with at least two points")
        if z[0] != 0.0:
            raise GridError("z_grid must start at 0")
        if y.ndim != 1 or len(y) < 1 or np.any(np.diff(y) <= 0.0):
            raise GridError("y_grid must be strictly increasing")
        if not np.any(y == 0.0):
            raise GridError("y_grid must contain 0")
        object.__setattr__(self, "z_grid", z)
        object.__setattr__(self, "y_grid", y)

    @property
    def z_max(self) -> float:
        return float(self.z_grid[-1])

    def y_index(self, y: float) -> int:
        hits = np.flatnonzero(np.abs(self.y_grid - y) <= 1e-12 * max(1.0, abs(y)))
        if hits.size == 0:
            raise GridError(f"y={y} is not on the share grid")
        return int(hits[0])


def default_grid(
    tables: PayoffTables,
    friction: FrictionParams,
    z0: float = 0.0,
    y0: float = 0.0,
    z_steps: int = 201,
    y_steps: int = 41,
    y_max_cap: float = 2.0,
    z_max_factor: float = 1.05,
    z_max: float | None = None,
) -> SolverGrid:
    """Uniform z and symmetric uniform y grids sized from the tree.

    The share bound follows the growth bound on admissible portfolios,
    ceil((z0 + (1 + mu)|y0| s + 1) / (mu * s_min)), capped at ``y_max_cap``.
    """
    lattice = tables.lattice
    if z_max is None:
        z_max = z_max_factor * tables.max_x
    if z_steps < 2:
        raise GridError("z_steps must be >= 2")
    if y_steps < 1 or y_steps % 2 == 0:
        raise GridError("y_steps must be odd so that 0 is on the grid")
    s_min = float(lattice.prices(lattice.n)[0])
    bound = math.ceil((z0 + (1.0 + friction.mu) * abs(y0) * lattice.params.s + 1.0) / (friction.mu * s_min))
    y_max = min(float(bound), y_max_cap)
    z_grid = np.linspace(0.0, z_max, z_steps)
    y_grid = np.linspace(-y_max, y_max, y_steps) if y_steps > 1 else np.zeros(1)
    if y_steps > 1:
        y_grid[y_steps // 2] = 0.0
    return SolverGrid(z_grid, y_grid)


def bracket(z_grid: np.ndarray, zq):
    """Lower bracket index and weight on it for linear interpolation in z.

    Values above the grid are clamped to the last point.
    """
    zq = np.asarray(zq, dtype=float)
    last = len(z_grid) - 1
    i = np.clip(np.searchsorted(z_grid, zq, side="right") - 1, 0, last - 1)
    lo = z_grid[i]
    hi = z_grid[i + 1]
    w = np.clip((hi - zq) / (hi - lo), 0.0, 1.0)
    return i, w


@dataclass
class RiskSurface:
    values: list[np.ndarray]  # values[k][node, iz, iy]
    grid: SolverGrid
    tables: PayoffTables

    @property
    def n(self) -> int:
        return len(self.values) - 1


@dataclass
class Policy:
    action: list[np.ndarray]  # int8 codes, same shape as the surface layers
    beta: list[np.ndarray]
    buyer_exercise: list[np.ndarray]
    grid: SolverGrid
    recombining: bool

    @property
    def n(self) -> int:
        return len(self.action) - 1

    def lookup(self, k: int, node: int, z: float, y: float) -> tuple[int, float]:
        """Action at the largest grid z not above ``z`` (so it stays feasible)."""
        iz = int(np.searchsorted(self.grid.z_grid, z, side="right") - 1)
        if iz < 0:
            raise ValueError(f"negative liquidation value {z}")
        iy = self.grid.y_index(y)
        return int(self.action[k][node, iz, iy]), float(self.beta[k][node, iz, iy])


def _check_grid(tables: PayoffTables, grid: SolverGrid) -> None:
    if grid.z_max < tables.max_x:
        raise GridError(f"z_max={grid.z_max:.6g} does not bracket the largest payoff max X={tables.max_x:.6g}")


def terminal_layer(tables: PayoffTables, grid: SolverGrid) -> np.ndarray:
    yn = tables.Y[-1]
    layer = np.maximum(yn[:, None] - grid.z_grid[None, :], 0.0)
    return np.repeat(layer[:, :, None], len(grid.y_grid), axis=2)


def _interp(G: np.ndarray, z_grid: np.ndarray, zq, *index):
    i, w = bracket(z_grid, zq)
    return w * G[(index[0], i) + tuple(index[1:])] + (1.0 - w) * G[(index[0], i + 1) + tuple(index[1:])]


def continuation_value(
    tables: PayoffTables,
    friction: FrictionParams,
    grid: SolverGrid,
    k: int,
    node: int,
    z: float,
    y: float,
    next_layer: np.ndarray,
) -> float | None:
    """Expected next-step risk holding ``y`` shares, or None when a move would
    push the liquidation value below zero."""
    layers = tables.lattice.layers(tables.recombining)
    layer = layers[k]
    s = float(layer.prices[node])
    up, down = int(layer.up[node]), int(layer.down[node])
    nxt = layers[k + 1].prices
    z_up = mark_to_market(s, float(nxt[up]), z, y, friction)
    z_dn = mark_to_market(s, float(nxt[down]), z, y, friction)
    if min(z_up, z_dn) < 0.0:
        return None
    iy = grid.y_index(y)
    p = tables.lattice.up_prob
    g_up = _interp(next_layer, grid.z_grid, z_up, up, iy)
    g_dn = _interp(next_layer, grid.z_grid, z_dn, down, iy)
    return float(p * g_up + (1.0 - p) * g_dn)


def step_value(
    tables: PayoffTables,
    friction: FrictionParams,
    grid: SolverGrid,
    k: int,
    node: int,
    z: float,
    y: float,
    next_layer: np.ndarray,
) -> tuple[float, int, float, bool]:
    """Scalar Bellman step: (value, action, beta, buyer_flag)."""
    assert z >= 0.0, "negative liquidation value"
    s = float(tables.lattice.layers(tables.recombining)[k].prices[node])
    stop = max(float(tables.Y[k][node]) - z, 0.0)
    cancel = max(float(tables.X[k][node]) - z, 0.0)
    wait = continuation_value(tables, friction, grid, k, node, z, y, next_layer)
    best_trade, best_beta = math.inf, 0.0
    for y_t in sorted(grid.y_grid, key=lambda v: (abs(v - y), v - y)):
        if y_t == y:
            continue
        beta = y_t - y
        zh = float(post_trade_value(s, z, y, beta, friction))
        if zh < 0.0:
            continue
        c = continuation_value(tables, friction, grid, k, node, zh, y_t, next_layer)
        if c is not None and c < best_trade:
            best_trade, best_beta = c, beta
    wait_v = math.inf if wait is None else wait
    if wait is None and best_trade == math.inf:
        inner, action, beta = cancel, FORCED, 0.0
    elif cancel <= wait_v and cancel <= best_trade:
        inner, action, beta = cancel, CANCEL, 0.0
    elif wait_v <= best_trade:
        inner, action, beta = wait_v, WAIT, 0.0
    else:
        inner, action, beta = best_trade, TRADE, best_beta
    return max(stop, inner), action, beta, stop >= inner


def _solve_block(
    layer: TreeLayer,
    nxt: TreeLayer,
    nodes: np.ndarray,
    Yk: np.ndarray,
    Xk: np.ndarray,
    G_next: np.ndarray,
    p: float,
    grid: SolverGrid,
    friction: FrictionParams,
):
    z = grid.z_grid
    yg = grid.y_grid
    ny = len(yg)
    m = len(nodes)
    S = layer.prices[nodes][:, None, None, None]
    up = layer.up[nodes]
    down = layer.down[nodes]
    S_up = nxt.prices[up][:, None, None, None]
    S_dn = nxt.prices[down][:, None, None, None]

    zz = z[None, :, None, None]
    y_src = yg[None, None, :, None]
    y_tgt = yg[None, None, None, :]
    beta = y_tgt - y_src
    diag = np.eye(ny, dtype=bool)[None, None, :, :]

    zh = post_trade_value(S, zz, y_src, beta, friction)
    zh = np.where(diag, np.broadcast_to(zz, zh.shape), zh)
    feasible = zh >= 0.0
    z_up = mark_to_market(S, S_up, zh, y_tgt, friction)
    z_dn = mark_to_market(S, S_dn, zh, y_tgt, friction)
    ok = feasible & (z_up >= 0.0) & (z_dn >= 0.0)

    node_ix = np.arange(m)[:, None, None, None]
    tgt_ix = np.arange(ny)[None, None, None, :]
    Gu = G_next[up]
    Gd = G_next[down]
    g_up = _interp(Gu, z, z_up, node_ix, tgt_ix)
    g_dn = _interp(Gd, z, z_dn, node_ix, tgt_ix)
    C = np.where(ok, p * g_up + (1.0 - p) * g_dn, np.inf)

    wait = np.diagonal(C, axis1=2, axis2=3)  # (m, nz, ny)
    trades = np.where(diag, np.inf, C)
    best = trades.min(axis=3)
    abs_beta = np.broadcast_to(np.abs(beta), trades.shape)
    pick = np.argmin(np.where(trades == best[..., None], abs_beta, np.inf), axis=3)
    best_beta = np.take_along_axis(np.broadcast_to(beta, trades.shape), pick[..., None], axis=3)[..., 0]

    stop = np.maximum(Yk[nodes][:, None] - z[None, :], 0.0)[:, :, None]
    cancel = np.maximum(Xk[nodes][:, None] - z[None, :], 0.0)[:, :, None]
    stop = np.broadcast_to(stop, wait.shape)
    cancel = np.broadcast_to(cancel, wait.shape)

    forced = np.isinf(wait) & np.isinf(best)
    take_cancel = (cancel <= wait) & (cancel <= best)
    take_wait = ~take_cancel & (wait <= best)
    action = np.full(wait.shape, TRADE, dtype=np.int8)
    action[take_wait] = WAIT
    action[take_cancel] = CANCEL
    action[forced] = FORCED
    inner = np.where(action == TRADE, best, np.where(action == WAIT, wait, cancel))
    value = np.maximum(stop, inner)
    beta_out = np.where(action == TRADE, best_beta, 0.0)
    return value, action, beta_out, stop >= inner


def solve(
    lattice: BinomialLattice,
    payoff: PayoffPair | PayoffTables,
    friction: FrictionParams,
    grid: SolverGrid,
) -> tuple[RiskSurface, Policy]:
    tables = payoff if isinstance(payoff, PayoffTables) else evaluate_on_lattice(payoff, lattice)
    if tables.lattice is not lattice and tables.lattice != lattice:
        raise ValueError("payoff tables were built on a different lattice")
    _check_grid(tables, grid)
    layers = lattice.layers(tables.recombining)
    n = lattice.n
    nz, ny = len(grid.z_grid), len(grid.y_grid)
    p = lattice.up_prob

    values: list[np.ndarray] = [None] * (n + 1)  # type: ignore[list-item]
    actions: list[np.ndarray] = [None] * (n + 1)  # type: ignore[list-item]
    betas: list[np.ndarray] = [None] * (n + 1)  # type: ignore[list-item]
    buyer: list[np.ndarray] = [None] * (n + 1)  # type: ignore[list-item]

    values[n] = terminal_layer(tables, grid)
    actions[n] = np.full(values[n].shape, WAIT, dtype=np.int8)
    betas[n] = np.zeros(values[n].shape)
    buyer[n] = np.ones(values[n].shape, dtype=bool)

    chunk = max(1, _BLOCK // (nz * ny * ny))
    for k in range(n - 1, -1, -1):
        layer, nxt = layers[k], layers[k + 1]
        size = layer.size
        v = np.empty((size, nz, ny))
        a = np.empty((size, nz, ny), dtype=np.int8)
        b = np.empty((size, nz, ny))
        f = np.empty((size, nz, ny), dtype=bool)
        for start in range(0, size, chunk):
            nodes = np.arange(start, min(size, start + chunk))
            out = _solve_block(layer, nxt, nodes, tables.Y[k], tables.X[k], values[k + 1], p, grid, friction)
            v[nodes], a[nodes], b[nodes], f[nodes] = out
        values[k], actions[k], betas[k], buyer[k] = v, a, b, f
        log.debug("solved step %d (%d nodes)", k, size)

    surface = RiskSurface(values, grid, tables)
    policy = Policy(actions, betas, buyer, grid, tables.recombining)
    return surface, policy


def query_risk(surface: RiskSurface, z: float, y: float) -> float:
    """Risk at the root for initial liquidation value z and y shares.

    Above the grid the risk is 0: z_max covers every payoff, so cancelling
    at once costs nothing.
    """
    grid = surface.grid
    if not z >= 0.0:
        raise GridError(f"z={z} is negative")
    iy = grid.y_index(y)
    if z > grid.z_max:
        return 0.0
    return float(_interp(surface.values[0], grid.z_grid, z, 0, iy))

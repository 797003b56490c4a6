"""Trade costs max(delta, mu*|beta|*S) and the liquidation-value algebra.

All functions accept numpy arrays as well as scalars and evaluate with the
same operation order in both cases, so vectorised callers reproduce scalar
results bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FrictionParams:
    delta: float  # fixed fee floor
    mu: float  # proportional rate

    def __post_init__(self) -> None:
        if not self.delta > 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu must lie in (0, 1), got {self.mu}")


def _scalar(*xs) -> bool:
    return all(isinstance(x, (int, float)) for x in xs)


def trade_cost(beta, S, fp: FrictionParams):
    if _scalar(beta, S):
        return max(fp.delta, fp.mu * abs(beta) * S) if beta != 0.0 else 0.0
    beta = np.asarray(beta, dtype=float)
    cost = np.where(beta != 0.0, np.maximum(fp.delta, fp.mu * np.abs(beta) * S), 0.0)
    return cost[()] if cost.ndim == 0 else cost


def post_trade_value(S, z, y, beta, fp: FrictionParams):
    """Liquidation value right after buying ``beta`` shares.

    A null trade is mapped to ``z - delta`` so the function is continuous
    at beta = 0.
    """
    if _scalar(S, z, y, beta):
        if beta == 0.0:
            return z - fp.delta
        return z + ((trade_cost(y, S, fp) - trade_cost(y + beta, S, fp)) - trade_cost(beta, S, fp))
    beta = np.asarray(beta, dtype=float)
    moved = z + ((trade_cost(y, S, fp) - trade_cost(y + beta, S, fp)) - trade_cost(beta, S, fp))
    out = np.where(beta != 0.0, moved, z - fp.delta)
    return out[()] if out.ndim == 0 else out


def mark_to_market(s_old, s_new, z, y, fp: FrictionParams):
    """Liquidation value after a price move with no trade."""
    return ((z + trade_cost(y, s_old, fp)) + y * (s_new - s_old)) - trade_cost(y, s_new, fp)


@dataclass(frozen=True)
class TradeSet:
    """Closed intervals of feasible trade sizes; beta = 0 is never a member."""

    intervals: tuple[tuple[float, float], ...]

    @property
    def empty(self) -> bool:
        return not self.intervals

    def contains(self, beta: float) -> bool:
        if beta == 0.0:
            return False
        return any(lo <= beta <= hi for lo, hi in self.intervals)

    def __iter__(self):
        return iter(self.intervals)


def _affine_piece(S: float, z: float, y: float, beta: float, fp: FrictionParams) -> tuple[float, float]:
    """Intercept and slope of h(., beta') on the open piece containing ``beta``."""
    mS = fp.mu * S
    c = fp.delta / mS
    gy = float(trade_cost(y, S, fp))
    a, b = z + gy, 0.0
    x = y + beta
    if abs(x) > c:
        sx = 1.0 if x > 0 else -1.0
        a -= mS * sx * y
        b -= mS * sx
    else:
        a -= fp.delta
    if abs(beta) > c:
        sb = 1.0 if beta > 0 else -1.0
        b -= mS * sb
    else:
        a -= fp.delta
    return a, b


def trade_set(S: float, z: float, y: float, fp: FrictionParams) -> TradeSet:
    """Exact interval form of {beta != 0 : h(S, z, y, beta) >= 0}.

    h is affine between the breakpoints 0, -y, +-delta/(mu S) and
    -y +- delta/(mu S); each piece is solved in closed form and the
    isolated point beta = -y (full liquidation, value z) is added.
    """
    if not S > 0.0 or z < 0.0:
        raise ValueError("trade_set needs S > 0 and z >= 0")
    c = fp.delta / (fp.mu * S)
    cuts = sorted({0.0, -y, c, -c, -y + c, -y - c})
    # pieces: (-inf, cuts[0]), (cuts[i], cuts[i+1]), (cuts[-1], inf)
    bounds = [-np.inf, *cuts, np.inf]
    pieces: list[tuple[float, float]] = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if lo == -np.inf:
            probe = hi - 1.0
        elif hi == np.inf:
            probe = lo + 1.0
        else:
            probe = 0.5 * (lo + hi)
        a, b = _affine_piece(S, z, y, probe, fp)
        if b == 0.0:
            if a >= 0.0:
                pieces.append((lo, hi))
            continue
        root = -a / b
        if b < 0.0:  # feasible for beta <= root
            left, right = lo, min(hi, root)
        else:
            left, right = max(lo, root), hi
        if left <= right:
            pieces.append((left, right))
    if y != 0.0:
        pieces.append((-y, -y))

    merged: list[list[float]] = []
    for lo, hi in sorted(pieces):
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    # a piece touching 0 only through its closure contributes nothing at beta = 0
    out = tuple((float(lo), float(hi)) for lo, hi in merged if not (lo == hi == 0.0))
    return TradeSet(out)

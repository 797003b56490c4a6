"""Game-option payoff pairs (buyer payoff Y <= seller payoff X) and their
tabulation on binomial trees."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import BinomialLattice

MAX_PATH_DEPENDENT_N = 20


class LatticeSizeError(ValueError):
    pass


@dataclass(frozen=True)
class PayoffPair:
    """Base class. Subclasses define the running buyer payoff ``_buyer``."""

    strike: float
    penalty: float

    kind = "abstract"
    path_dependent = False
    lipschitz = 1.0  # constant L in |F(x) - F(x')| <= L ||x - x'||

    def __post_init__(self) -> None:
        if not self.strike > 0.0:
            raise ValueError("strike must be positive")
        if self.penalty < 0.0:
            raise ValueError("penalty must be non-negative")

    @property
    def growth(self) -> tuple[float, float]:
        """(C, p) with |F| + |G| <= C (1 + ||x||^p)."""
        return 2.0 * (self.strike + self.penalty) + 2.0, 1.0

    def _buyer(self, prices: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate_path(self, prices, times, T: float) -> tuple[np.ndarray, np.ndarray]:
        """Running (Y_t, X_t) along a path; the last axis is time."""
        prices = np.asarray(prices, dtype=float)
        times = np.asarray(times, dtype=float)
        y = self._buyer(prices)
        x = y + np.where(times < _maturity_cut(T), self.penalty, 0.0)
        return y, x

    def node_values(self, prices, at_maturity: bool) -> tuple[np.ndarray, np.ndarray]:
        """(Y, X) from the current price only; Markovian kinds only."""
        if self.path_dependent:
            raise TypeError(f"{self.kind} is path dependent")
        y = self._buyer(np.asarray(prices, dtype=float)[..., None])
        y = y[..., 0]
        x = y if at_maturity else y + self.penalty
        return y, x


def _maturity_cut(T: float) -> float:
    return T * (1.0 - 1e-12)


@dataclass(frozen=True)
class GamePut(PayoffPair):
    kind = "game_put"

    def _buyer(self, prices):
        return np.maximum(self.strike - prices, 0.0)


@dataclass(frozen=True)
class GameCall(PayoffPair):
    kind = "game_call"

    def _buyer(self, prices):
        return np.maximum(prices - self.strike, 0.0)


@dataclass(frozen=True)
class LookbackGamePut(PayoffPair):
    kind = "lookback_game_put"
    path_dependent = True

    def _buyer(self, prices):
        return np.maximum(self.strike - np.minimum.accumulate(prices, axis=-1), 0.0)


PAYOFF_KINDS = {cls.kind: cls for cls in (GamePut, GameCall, LookbackGamePut)}


def make_payoff(kind: str, strike: float, penalty: float) -> PayoffPair:
    try:
        cls = PAYOFF_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown payoff kind {kind!r}; expected one of {sorted(PAYOFF_KINDS)}") from None
    return cls(strike=strike, penalty=penalty)


def evaluate(pair: PayoffPair, prices, times, T: float) -> tuple[float, float]:
    """(Y, X) at the last time of a path prefix."""
    prices = np.asarray(prices, dtype=float)
    if prices.ndim != 1 or prices.size == 0 or np.any(prices <= 0.0):
        raise ValueError("need a nonempty 1-D prefix of positive prices")
    y, x = pair.evaluate_path(prices, times, T)
    return float(y[-1]), float(x[-1])


@dataclass(frozen=True)
class PayoffTables:
    """Per-step (Y, X) arrays aligned with ``lattice.layers(recombining)``."""

    pair: PayoffPair
    lattice: BinomialLattice
    recombining: bool
    Y: list[np.ndarray]
    X: list[np.ndarray]

    @property
    def max_x(self) -> float:
        return max(float(x.max()) for x in self.X)


def evaluate_on_lattice(pair: PayoffPair, lattice: BinomialLattice) -> PayoffTables:
    n = lattice.n
    Y, X = [], []
    if not pair.path_dependent:
        for k in range(n + 1):
            y, x = pair.node_values(lattice.prices(k), at_maturity=k == n)
            Y.append(y)
            X.append(x)
        return PayoffTables(pair, lattice, True, Y, X)

    if n > MAX_PATH_DEPENDENT_N:
        raise LatticeSizeError(
            f"path-dependent payoff {pair.kind} needs a non-recombining tree; n={n} exceeds {MAX_PATH_DEPENDENT_N}"
        )
    for k in range(n + 1):
        paths = lattice.path_prices(k)
        times = np.arange(k + 1) * lattice.h
        if k == n:
            times[-1] = lattice.params.T
        y, x = pair.evaluate_path(paths, times, lattice.params.T)
        Y.append(np.ascontiguousarray(y[:, -1]))
        X.append(np.ascontiguousarray(x[:, -1]))
    return PayoffTables(pair, lattice, False, Y, X)

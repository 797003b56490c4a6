"""Black-Scholes and binomial market models, path sampling and the
first-passage embedding of the binomial walk into a Brownian path."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class MarketParams:
    s: float  # initial stock price
    kappa: float  # volatility
    vartheta: float  # drift parameter of log-price (plus kappa^2/2)
    T: float  # maturity

    def __post_init__(self) -> None:
        if not self.s > 0.0:
            raise ValueError(f"s must be positive, got {self.s}")
        if not self.kappa > 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not self.T > 0.0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not math.isfinite(self.vartheta):
            raise ValueError("vartheta must be finite")

    @property
    def w_drift(self) -> float:
        """Drift per unit time of W* = (ln S - ln s) / kappa."""
        return (self.vartheta - 0.5 * self.kappa**2) / self.kappa


def binomial_up_prob(params: MarketParams, n: int) -> float:
    """Real-world probability of an up-move in the n-step binomial market."""
    if n < 1:
        raise ValueError("n must be >= 1")
    a = math.sqrt(params.T / n)
    return 1.0 / (math.exp((params.kappa - 2.0 * params.vartheta / params.kappa) * a) + 1.0)


def martingale_prob(params: MarketParams, n: int) -> float:
    """Up-probability making the lattice price a martingale (not used for shortfall)."""
    step = params.kappa * math.sqrt(params.T / n)
    return 1.0 / (math.exp(step) + 1.0)


@dataclass(frozen=True)
class TreeLayer:
    """Nodes at one time step. ``up``/``down`` index into the next layer."""

    prices: np.ndarray
    ups: np.ndarray  # number of up-moves leading to each node
    up: np.ndarray | None
    down: np.ndarray | None

    @property
    def size(self) -> int:
        return len(self.prices)


@dataclass(frozen=True)
class BinomialLattice:
    params: MarketParams
    n: int
    h: float = field(init=False)
    up_prob: float = field(init=False)
    log_step: float = field(init=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        h = self.params.T / self.n
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "up_prob", binomial_up_prob(self.params, self.n))
        object.__setattr__(self, "log_step", self.params.kappa * math.sqrt(h))

    def price(self, k: int, j: int) -> float:
        if not 0 <= j <= k <= self.n:
            raise IndexError(f"node ({k}, {j}) outside lattice with n={self.n}")
        return self.params.s * math.exp(self.log_step * (2 * j - k))

    def prices(self, k: int) -> np.ndarray:
        """Prices at step k indexed by the number of up-moves j = 0..k."""
        j = np.arange(k + 1)
        return self.params.s * np.exp(self.log_step * (2 * j - k))

    def path_prices(self, k: int) -> np.ndarray:
        """Price histories of all 2**k paths of length k, shape (2**k, k+1).

        Path ids encode the moves as bits, first move most significant
        (1 = up), so the up-child of path b is 2*b + 1.
        """
        ids = np.arange(2**k, dtype=np.int64)
        shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
        moves = (ids[:, None] >> shifts[None, :]) & 1
        ups = np.concatenate([np.zeros((2**k, 1), dtype=np.int64), np.cumsum(moves, axis=1)], axis=1)
        steps = np.arange(k + 1)
        return self.params.s * np.exp(self.log_step * (2 * ups - steps[None, :]))

    def layers(self, recombining: bool = True) -> list[TreeLayer]:
        out = []
        for k in range(self.n + 1):
            last = k == self.n
            if recombining:
                ups = np.arange(k + 1)
                up = None if last else ups + 1
                down = None if last else ups.copy()
                prices = self.prices(k)
            else:
                ids = np.arange(2**k, dtype=np.int64)
                ups = np.bitwise_count(ids).astype(np.int64)
                up = None if last else 2 * ids + 1
                down = None if last else 2 * ids
                j = ups
                prices = self.params.s * np.exp(self.log_step * (2 * j - k))
            out.append(TreeLayer(prices=prices, ups=ups, up=up, down=down))
        return out


def build_lattice(params: MarketParams, n: int) -> BinomialLattice:
    return BinomialLattice(params, n)


def rn_density(params: MarketParams, w_t, t):
    """Density dQ/dP restricted to F_t, given the driving Brownian value W_t."""
    r = params.vartheta / params.kappa
    return np.exp(-r * np.asarray(w_t, dtype=float) - 0.5 * r * r * np.asarray(t, dtype=float))


# ---------------------------------------------------------------------------
# Path simulation
# ---------------------------------------------------------------------------


def path_seed(seed: int, index: int) -> int:
    """64-bit seed of path ``index`` in the family ``seed``.

    Independent of batch size and ordering, so any path can be regenerated
    on its own.
    """
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class PathSample:
    times: np.ndarray
    w_star: np.ndarray
    prices: np.ndarray
    steps_per_T: int
    T: float

    @property
    def dt(self) -> float:
        return self.T / self.steps_per_T

    @property
    def index_T(self) -> int:
        return self.steps_per_T

    def coarsen(self, factor: int) -> PathSample:
        """Subsample every ``factor``-th point (same Brownian path, coarser monitoring)."""
        if factor < 1 or self.steps_per_T % factor:
            raise ValueError("factor must divide steps_per_T")
        return PathSample(
            times=self.times[::factor],
            w_star=self.w_star[::factor],
            prices=self.prices[::factor],
            steps_per_T=self.steps_per_T // factor,
            T=self.T,
        )


def _levels(steps_m: int) -> int:
    if steps_m < 1 or steps_m & (steps_m - 1):
        raise ValueError(f"steps_m must be a power of two, got {steps_m}")
    return steps_m.bit_length() - 1


def sample_path(params: MarketParams, steps_m: int, horizon_factor: float, rng_seed: int) -> PathSample:
    """Simulate W* on a uniform grid of ``steps_m`` steps per [0, T].

    The driftless part is built by dyadic Brownian-bridge refinement with
    levels drawn in order from one stream, so the path at ``steps_m`` is
    exactly the subsample of the path at ``2 * steps_m`` for the same seed.
    """
    if horizon_factor < 1.0:
        raise ValueError("horizon_factor must be >= 1")
    levels = _levels(steps_m)
    blocks = int(math.ceil(horizon_factor))
    total = blocks * steps_m
    dt = params.T / steps_m
    rng = np.random.default_rng(np.random.SeedSequence(int(rng_seed) & (2**64 - 1)))

    w = np.zeros(total + 1)
    w[steps_m::steps_m] = np.cumsum(math.sqrt(params.T) * rng.standard_normal(blocks))
    for level in range(1, levels + 1):
        half = steps_m >> level
        mid = np.arange(half, total, 2 * half)
        noise = rng.standard_normal(len(mid))
        w[mid] = 0.5 * (w[mid - half] + w[mid + half]) + math.sqrt(0.5 * half * dt) * noise

    times = np.arange(total + 1) * dt
    w_star = w + params.w_drift * times
    w_star[0] = 0.0
    prices = params.s * np.exp(params.kappa * w_star)
    return PathSample(times=times, w_star=w_star, prices=prices, steps_per_T=steps_m, T=params.T)


@dataclass(frozen=True)
class EmbeddedWalk:
    n: int
    hit_indices: np.ndarray  # length n+1, saturated at the path end when incomplete
    signs: np.ndarray  # length n; 0 for passages that did not occur
    complete: bool

    @property
    def passages(self) -> int:
        return int(np.count_nonzero(self.signs))


def extract_embedding(path: PathSample, n: int) -> EmbeddedWalk:
    """First-passage times of |W* - W*(previous passage)| >= sqrt(T/n) on the grid."""
    if n < 1:
        raise ValueError("n must be >= 1")
    a = math.sqrt(path.T / n)
    w = path.w_star
    last = len(w) - 1
    hits = np.full(n + 1, last, dtype=np.int64)
    hits[0] = 0
    signs = np.zeros(n, dtype=np.int8)
    window = max(16, int(4 * a * a / path.dt))
    cur = 0
    complete = True
    for k in range(n):
        base = w[cur]
        start = cur + 1
        found = -1
        span = window
        while start <= last:
            stop = min(last + 1, start + span)
            crossed = np.flatnonzero(np.abs(w[start:stop] - base) >= a)
            if crossed.size:
                found = start + int(crossed[0])
                break
            start = stop
            span *= 2
        if found < 0:
            complete = False
            break
        hits[k + 1] = found
        signs[k] = 1 if w[found] > base else -1
        cur = found
    return EmbeddedWalk(n=n, hit_indices=hits, signs=signs, complete=complete)

"""Run configuration: a sectioned INI file read with configparser.

Every key is validated at parse time and errors name the offending field
as ``section.key``. ``RunConfig.to_ini`` writes a file that parses back to
an equal config.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import MISSING, dataclass, field, fields, replace
from pathlib import Path

from .friction import FrictionParams
from .lift import DEFAULT_THRESHOLDS
from .model import MarketParams
from .payoff import PAYOFF_KINDS, PayoffPair, make_payoff


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MarketSection:
    s: float
    kappa: float
    vartheta: float
    T: float


@dataclass(frozen=True)
class FrictionSection:
    delta: float
    mu: float


@dataclass(frozen=True)
class PayoffSection:
    kind: str
    strike: float
    penalty: float


@dataclass(frozen=True)
class SolverSection:
    n: int = 16
    z_steps: int = 201
    y_steps: int = 41
    y_max_cap: float = 2.0
    z_max_factor: float = 1.05
    z_max: float | None = None  # overrides z_max_factor when set
    z0: float = 0.0  # query point
    y0: float = 0.0


@dataclass(frozen=True)
class SimSection:
    paths: int = 10_000
    seed: int = 0
    fine_steps: int = 4096
    horizon_factor: float = 4.0
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS


@dataclass(frozen=True)
class ExperimentSection:
    n_list: tuple[int, ...] = (8, 16, 32, 64)
    z_coupling: float = 0.5  # z points grow like (n / n_list[0]) ** z_coupling
    z_steps_cap: int = 801
    workers: int = 1


@dataclass(frozen=True)
class OutputSection:
    surface_layers: str = "all"  # "all" or "root"


@dataclass(frozen=True)
class RunConfig:
    market: MarketSection
    friction: FrictionSection
    payoff: PayoffSection
    solver: SolverSection = field(default_factory=SolverSection)
    sim: SimSection = field(default_factory=SimSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    output: OutputSection = field(default_factory=OutputSection)

    def market_params(self) -> MarketParams:
        m = self.market
        return MarketParams(m.s, m.kappa, m.vartheta, m.T)

    def friction_params(self) -> FrictionParams:
        return FrictionParams(self.friction.delta, self.friction.mu)

    def payoff_pair(self) -> PayoffPair:
        p = self.payoff
        return make_payoff(p.kind, p.strike, p.penalty)

    def with_seed(self, seed: int) -> RunConfig:
        return replace(self, sim=replace(self.sim, seed=seed))

    def to_ini(self) -> str:
        lines = []
        for sec in fields(self):
            lines.append(f"[{sec.name}]")
            obj = getattr(self, sec.name)
            for f in fields(obj):
                val = getattr(obj, f.name)
                if val is None:
                    continue
                lines.append(f"{f.name} = {_format(val)}")
            lines.append("")
        return "\n".join(lines)


_SECTIONS = {
    "market": MarketSection,
    "friction": FrictionSection,
    "payoff": PayoffSection,
    "solver": SolverSection,
    "sim": SimSection,
    "experiment": ExperimentSection,
    "output": OutputSection,
}
_REQUIRED = ("market", "friction", "payoff")


def _format(val) -> str:
    if isinstance(val, tuple):
        return ", ".join(_format(v) for v in val)
    if isinstance(val, float):
        return "inf" if math.isinf(val) else repr(val)
    return str(val)


def _as_float(text: str) -> float:
    x = float(text)
    if math.isnan(x):
        raise ValueError("nan is not allowed")
    return x


def _as_int(text: str) -> int:
    return int(text.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(_as_float(t) for t in text.split(",") if t.strip())


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(_as_int(t) for t in text.split(",") if t.strip())


_PARSERS = {
    "float": _as_float,
    "int": _as_int,
    "str": lambda t: t.strip(),
    "float | None": _as_float,
    "tuple[float, ...]": _float_list,
    "tuple[int, ...]": _int_list,
}


def _positive(x) -> bool:
    return x > 0


def _pow2(x: int) -> bool:
    return x >= 1 and x & (x - 1) == 0


# (predicate, message) per field path
_RULES = {
    "market.s": (_positive, "must be positive"),
    "market.kappa": (_positive, "must be positive"),
    "market.T": (_positive, "must be positive"),
    "market.vartheta": (math.isfinite, "must be finite"),
    "friction.delta": (_positive, "must be positive"),
    "friction.mu": (lambda x: 0.0 < x < 1.0, "must lie in (0, 1)"),
    "payoff.kind": (lambda k: k in PAYOFF_KINDS, f"must be one of {sorted(PAYOFF_KINDS)}"),
    "payoff.strike": (_positive, "must be positive"),
    "payoff.penalty": (lambda x: x >= 0.0, "must be non-negative"),
    "solver.n": (_positive, "must be >= 1"),
    "solver.z_steps": (lambda x: x >= 2, "must be >= 2"),
    "solver.y_steps": (lambda x: x >= 1 and x % 2 == 1, "must be odd and >= 1"),
    "solver.y_max_cap": (lambda x: x >= 0.0, "must be non-negative"),
    "solver.z_max_factor": (lambda x: x >= 1.0, "must be >= 1"),
    "solver.z_max": (_positive, "must be positive"),
    "solver.z0": (lambda x: 0.0 <= x < math.inf, "must be finite and >= 0"),
    "solver.y0": (math.isfinite, "must be finite"),
    "sim.paths": (lambda x: x >= 2, "must be >= 2"),
    "sim.seed": (lambda x: 0 <= x < 2**64, "must be an unsigned 64-bit integer"),
    "sim.fine_steps": (_pow2, "must be a power of two"),
    "sim.horizon_factor": (lambda x: 1.0 <= x < math.inf, "must be finite and >= 1"),
    "sim.thresholds": (lambda t: len(t) > 0 and all(c >= 0.0 for c in t), "must be a nonempty list of values >= 0"),
    "experiment.n_list": (
        lambda ns: len(ns) > 0 and all(a > 0 for a in ns) and all(b >= a for a, b in zip(ns, ns[1:])),
        "must be a nonempty non-decreasing list of positive integers",
    ),
    "experiment.z_coupling": (lambda x: 0.0 <= x <= 1.0, "must lie in [0, 1]"),
    "experiment.z_steps_cap": (lambda x: x >= 2, "must be >= 2"),
    "experiment.workers": (_positive, "must be >= 1"),
    "output.surface_layers": (lambda x: x in ("all", "root"), "must be 'all' or 'root'"),
}


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keep key case (market.T)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    unknown = [s for s in cp.sections() if s not in _SECTIONS]
    if unknown:
        raise ConfigError(f"unknown section [{unknown[0]}]")
    for name in _REQUIRED:
        if not cp.has_section(name):
            raise ConfigError(f"missing section [{name}]")

    built = {}
    for name, cls in _SECTIONS.items():
        raw = dict(cp[name]) if cp.has_section(name) else {}
        known = {f.name: f for f in fields(cls)}
        for key in raw:
            if key not in known:
                raise ConfigError(f"{name}.{key}: unknown key")
        kwargs = {}
        for key, f in known.items():
            path = f"{name}.{key}"
            if key not in raw:
                if f.default is MISSING and f.default_factory is MISSING:
                    raise ConfigError(f"{path}: missing required field")
                continue
            try:
                value = _PARSERS[f.type](raw[key])
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"{path}: cannot parse {raw[key]!r} ({exc})") from None
            rule = _RULES.get(path)
            if rule is not None and not rule[0](value):
                raise ConfigError(f"{path}: {rule[1]}, got {raw[key].strip()!r}")
            kwargs[key] = value
        built[name] = cls(**kwargs)
    cfg = RunConfig(**built)
    # cross-field checks go through the domain constructors
    for path, make in (
        ("market", cfg.market_params),
        ("friction", cfg.friction_params),
        ("payoff", cfg.payoff_pair),
    ):
        try:
            make()
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)

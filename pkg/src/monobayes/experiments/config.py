"""Experiment configuration: one JSON document, unknown fields rejected."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from monobayes.densities import MonotoneDensity, make_truth
from monobayes.posterior import McmcConfig
from monobayes.priors import DP, FINITE, BaseMeasure, PriorSpec

DEFAULT_N_GRID = (250, 500, 1000, 2000, 4000, 8000)
LOSSES = ("l1", "hellinger", "pointwise", "sup")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class PriorConfig:
    kind: str = DP
    A: float = 1.0
    t: float = 2.0
    L: float | None = 1.0
    tail_rate: float = 1.0
    K_max: int = 200
    dirichlet_weight: float = 1.0

    def build(self) -> PriorSpec:
        base = BaseMeasure(self.t, self.L, self.tail_rate)
        return PriorSpec(self.kind, self.A, base, self.K_max, 1.0, self.dirichlet_weight)


@dataclass(frozen=True)
class TruthConfig:
    family: str = "triangular"
    params: dict = field(default_factory=dict)
    beta: float | None = None
    tau: float | None = None

    def build(self) -> MonotoneDensity:
        return make_truth(self.family, self.params, self.beta, self.tau)


@dataclass(frozen=True)
class MCMCSection:
    iterations: int = 5000
    burn_in: int = 1000
    thinning: int = 2

    def build(self, seed) -> McmcConfig:
        return McmcConfig(self.iterations, self.burn_in, self.thinning, seed)


@dataclass(frozen=True)
class ExperimentSection:
    n_grid: tuple = DEFAULT_N_GRID
    replications: int = 20
    loss: str = "l1"
    interval: tuple | None = None
    mass: float = 0.9
    x: float | None = None
    slope_interval: tuple = (-0.45, -0.20)
    mode: str = "rate"
    eps: float = 10.0
    save_draws: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    prior: PriorConfig = field(default_factory=PriorConfig)
    truth: TruthConfig = field(default_factory=TruthConfig)
    mcmc: MCMCSection = field(default_factory=MCMCSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    seed: int = 0
    output_dir: str = "runs"

    @property
    def support_bound(self) -> float:
        L = self.prior.L
        return math.inf if L is None else float(L)

    def loss_location(self):
        """Interval (sup), point (pointwise) or None."""
        exp = self.experiment
        L = self.support_bound
        if exp.loss == "sup":
            if exp.interval is not None:
                return tuple(exp.interval)
            return (0.1 * L, 0.9 * L)
        if exp.loss == "pointwise":
            return L / 2.0 if exp.x is None else exp.x
        return None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["experiment"]["n_grid"] = list(self.experiment.n_grid)
        for key in ("interval", "slope_interval"):
            if d["experiment"][key] is not None:
                d["experiment"][key] = list(d["experiment"][key])
        return d


_SECTIONS = {
    "prior": PriorConfig,
    "truth": TruthConfig,
    "mcmc": MCMCSection,
    "experiment": ExperimentSection,
}


def _section(name, cls, raw):
    if not isinstance(raw, dict):
        raise ConfigError(f"section {name!r} must be an object")
    known = set(cls.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown field(s) in {name!r}: {sorted(unknown)}")
    values = dict(raw)
    for key in ("n_grid", "interval", "slope_interval"):
        if isinstance(values.get(key), list):
            values[key] = tuple(values[key])
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {name!r} section: {exc}") from exc


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown top-level field(s): {sorted(unknown)}")
    if "scenario" not in raw:
        raise ConfigError("missing 'scenario'")
    kwargs = {k: v for k, v in raw.items() if k not in _SECTIONS}
    for name, cls in _SECTIONS.items():
        if name in raw:
            kwargs[name] = _section(name, cls, raw[name])
    cfg = ExperimentConfig(**kwargs)
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(raw)


def validate(cfg: ExperimentConfig) -> None:
    exp = cfg.experiment
    if not exp.n_grid:
        raise ConfigError("n_grid is empty")
    if any(int(n) != n or n < 2 for n in exp.n_grid):
        raise ConfigError("n_grid entries must be integers >= 2")
    if exp.replications < 1:
        raise ConfigError("replications must be at least 1")
    if exp.loss not in LOSSES:
        raise ConfigError(f"loss must be one of {LOSSES}")
    if not 0.0 < exp.mass <= 1.0:
        raise ConfigError("mass must lie in (0, 1]")
    if exp.mode not in ("rate", "consistency"):
        raise ConfigError("mode must be 'rate' or 'consistency'")
    if cfg.prior.kind not in (DP, FINITE):
        raise ConfigError(f"prior kind must be {DP!r} or {FINITE!r}")
    try:
        cfg.prior.build()
        truth = cfg.truth.build()
        cfg.mcmc.build(0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if truth.support_bound > cfg.support_bound:
        raise ConfigError("truth support exceeds the prior support")
    if math.isinf(truth.support_bound):
        if cfg.truth.tau is None or cfg.truth.beta is None:
            raise ConfigError("half-line truths need tail parameters beta and tau")
        if not truth.tail_condition_holds():
            raise ConfigError("truth violates f0(x) <= exp(-beta x^tau) for large x")
    if exp.loss == "sup":
        a, b = cfg.loss_location()
        if not 0.0 <= a < b <= cfg.support_bound:
            raise ConfigError("sup interval must satisfy 0 <= a < b <= L")

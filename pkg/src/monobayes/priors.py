"""Dirichlet-process and finite-mixture priors on monotone densities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from monobayes.mixture import AtomicMixture

DP = "dp"
FINITE = "finite"


@dataclass(frozen=True)
class BaseMeasure:
    """Base measure for the kernel scales.

    On [0, L] the density is ``(t + 1) theta^t / L^(t + 1)``. With
    ``support_bound=None`` it is the exponentially tilted version
    ``theta^t exp(-tail_rate * theta)``, i.e. Gamma(t + 1, tail_rate).
    """

    t: float = 2.0
    support_bound: float | None = 1.0
    tail_rate: float = 1.0

    def __post_init__(self):
        if self.support_bound is not None and self.support_bound <= 0:
            raise ValueError("support bound must be positive")
        if self.tail_rate <= 0:
            raise ValueError("tail rate must be positive")
        if self.t <= -1:
            raise ValueError("exponent must exceed -1 for a proper base measure")

    @property
    def bounded(self) -> bool:
        return self.support_bound is not None

    def pdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        t = self.t
        if self.bounded:
            L = self.support_bound
            inside = (theta > 0) & (theta <= L)
            return np.where(inside, (t + 1) * np.maximum(theta, 0) ** t / L ** (t + 1), 0.0)
        r = self.tail_rate
        logc = (t + 1) * math.log(r) - special.gammaln(t + 1)
        with np.errstate(divide="ignore"):
            logp = logc + t * np.log(np.maximum(theta, 0)) - r * theta
        return np.where(theta > 0, np.exp(logp), 0.0)

    def cdf(self, theta):
        theta = np.maximum(np.asarray(theta, dtype=float), 0.0)
        if self.bounded:
            return np.minimum(theta / self.support_bound, 1.0) ** (self.t + 1)
        return special.gammainc(self.t + 1, self.tail_rate * theta)

    def sample(self, rng, size=None):
        if self.bounded:
            u = 1.0 - rng.random(size)
            return self.support_bound * u ** (1.0 / (self.t + 1))
        return rng.gamma(self.t + 1, 1.0 / self.tail_rate, size)

    def kernel_marginal(self, x):
        """int 1[x <= theta] / theta d alpha(theta): prior predictive density."""
        x = np.asarray(x, dtype=float)
        t = self.t
        if self.bounded:
            L = self.support_bound
            return np.where(x <= L, (t + 1) / (t * L) * (1.0 - (np.minimum(x, L) / L) ** t), 0.0)
        r = self.tail_rate
        return r * special.gammaincc(t, r * x) / t


@dataclass(frozen=True)
class PriorSpec:
    kind: str = DP
    mass: float = 1.0
    base: BaseMeasure = field(default_factory=BaseMeasure)
    k_max: int = 200
    k_exponent: float = 1.0
    dirichlet_weight: float = 1.0

    def __post_init__(self):
        if self.kind not in (DP, FINITE):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.mass <= 0:
            raise ValueError("DP mass must be positive")
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if self.dirichlet_weight <= 0:
            raise ValueError("Dirichlet weight must be positive")

    @property
    def support_bound(self):
        return self.base.support_bound

    def k_log_pmf(self) -> np.ndarray:
        """log Q(K) for K = 1..k_max, with Q(K) proportional to exp(-g K log K)."""
        K = np.arange(1, self.k_max + 1, dtype=float)
        logq = -self.k_exponent * K * np.log(K)
        return logq - special.logsumexp(logq)

    def k_pmf(self) -> np.ndarray:
        return np.exp(self.k_log_pmf())


@dataclass
class ConditionCheck:
    name: str
    passed: bool
    detail: str
    constants: dict = field(default_factory=dict)


@dataclass
class ValidationReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> ConditionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def validate_prior_conditions(spec: PriorSpec) -> ValidationReport:
    """Check the base-measure, K-law and weight-law conditions of the prior."""
    t = spec.base.t
    # For the theta^t family alpha(theta) / theta^t is constant on [0, L]
    # (bounded case) or <= r^(t+1) / Gamma(t+1) (tilted case).
    checks = [
        ConditionCheck(
            "base_measure",
            t > 1,
            f"t = {t}; alpha(theta)/theta^t bounded near 0",
            {"t": t},
        )
    ]

    logq = spec.k_log_pmf()
    K = np.arange(2, spec.k_max + 1, dtype=float)
    if K.size:
        ratio = -logq[1:] / (K * np.log(K))
        # The law extends past the cutoff as exp(-g K log K), whose ratio tends to g.
        c1 = float(min(ratio.min(), spec.k_exponent))
        c2 = float(ratio.max())
    else:
        c1 = c2 = spec.k_exponent
    checks.append(
        ConditionCheck(
            "k_law",
            bool(0 < c1 <= c2 and np.isfinite(c2)),
            f"exp(-C1 K log K) >= Q(K) >= exp(-C2 K log K) with C1={c1:.4g}, C2={c2:.4g}",
            {"C1": c1, "C2": c2},
        )
    )

    # Symmetric Dirichlet(a) density Gamma(Ka)/Gamma(a)^K prod p^(a-1) dominates
    # K^-K c^K prod p^a whenever K Gamma(Ka)^(1/K) / Gamma(a) >= c for all K.
    a = spec.dirichlet_weight
    Ks = np.arange(1, spec.k_max + 1, dtype=float)
    logc = np.log(Ks) + special.gammaln(Ks * a) / Ks - special.gammaln(a)
    c = float(np.exp(logc.min()))
    checks.append(
        ConditionCheck(
            "weight_law",
            c > 0,
            f"symmetric Dirichlet({a}) >= K^-K c^K prod p_i^a with c={c:.4g}",
            {"c": c, "a": a},
        )
    )
    return ValidationReport(checks)


def sample_prior(spec: PriorSpec, truncation: int = 500, seed=None) -> AtomicMixture:
    """One draw of the mixing distribution.

    DP draws use stick-breaking truncated at ``truncation`` atoms, folding the
    leftover stick into the last weight.
    """
    rng = np.random.default_rng(seed)
    if spec.kind == DP:
        if truncation < 1:
            raise ValueError("truncation must be at least 1")
        v = rng.beta(1.0, spec.mass, size=truncation)
        v[-1] = 1.0
        log_rest = np.concatenate(([0.0], np.cumsum(np.log1p(-v[:-1]))))
        weights = v * np.exp(log_rest)
        atoms = spec.base.sample(rng, truncation)
    else:
        K = int(rng.choice(spec.k_max, p=spec.k_pmf())) + 1
        atoms = spec.base.sample(rng, K)
        weights = rng.dirichlet(np.full(K, spec.dirichlet_weight))
    return AtomicMixture.from_unsorted(atoms, weights / weights.sum(), spec.support_bound)

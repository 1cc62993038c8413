"""Analytic monotone densities used as ground truth, and their exact
comparisons with step densities.

Each family exposes its pdf, cdf, the running integral of sqrt(pdf) and the
level point ``sup{x : pdf(x) > c}``. With these, L1, Hellinger, sup and
pointwise losses against a step density are closed-form sums over the step
pieces; only KL falls back to quadrature.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from monobayes.mixture import StepDensity, _check_interval

QUAD_TOL = 1e-8


class MonotoneDensity:
    """Base class for analytic non-increasing densities on [0, L] or R+."""

    support_bound: float = math.inf

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def root_mass(self, x):
        """int_0^x sqrt(pdf)."""
        raise NotImplementedError

    def level_point(self, c):
        """sup{x : pdf(x) > c}, or 0 if pdf(0) <= c."""
        raise NotImplementedError

    def sample(self, n: int, rng) -> np.ndarray:
        return self.quantile(rng.random(n))

    def quantile(self, u):
        raise NotImplementedError

    def __call__(self, x):
        return self.pdf(x)

    @property
    def value_at_zero(self) -> float:
        return float(self.pdf(0.0))

    def describe(self) -> dict:
        raise NotImplementedError


class Uniform(MonotoneDensity):
    def __init__(self, L: float = 1.0):
        self.L = float(L)
        self.support_bound = self.L

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0) & (x <= self.L), 1.0 / self.L, 0.0)

    def cdf(self, x):
        return np.clip(np.asarray(x, dtype=float) / self.L, 0.0, 1.0)

    def root_mass(self, x):
        return np.clip(np.asarray(x, dtype=float), 0.0, self.L) / math.sqrt(self.L)

    def level_point(self, c):
        c = np.asarray(c, dtype=float)
        return np.where(c < 1.0 / self.L, self.L, 0.0)

    def quantile(self, u):
        return self.L * (1.0 - np.asarray(u))

    def describe(self):
        return {"family": "uniform", "L": self.L}


class Triangular(MonotoneDensity):
    """f(x) = 2 (L - x) / L^2 on [0, L]."""

    def __init__(self, L: float = 1.0):
        self.L = float(L)
        self.support_bound = self.L

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0) & (x <= self.L), 2.0 * (self.L - x) / self.L**2, 0.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, self.L)
        return 1.0 - ((self.L - x) / self.L) ** 2

    def root_mass(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, self.L)
        k = math.sqrt(2.0) / self.L
        return k * (2.0 / 3.0) * (self.L**1.5 - (self.L - x) ** 1.5)

    def level_point(self, c):
        c = np.asarray(c, dtype=float)
        return np.clip(self.L - c * self.L**2 / 2.0, 0.0, self.L)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        return self.L * (1.0 - np.sqrt(1.0 - u))

    def describe(self):
        return {"family": "triangular", "L": self.L}


class TruncatedExponential(MonotoneDensity):
    """Exponential(rate) conditioned on [0, L]."""

    def __init__(self, rate: float = 1.0, L: float = 1.0):
        self.rate = float(rate)
        self.L = float(L)
        self.support_bound = self.L
        self._z = -math.expm1(-self.rate * self.L)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0) & (x <= self.L)
        return np.where(inside, self.rate * np.exp(-self.rate * x) / self._z, 0.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, self.L)
        return -np.expm1(-self.rate * x) / self._z

    def root_mass(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, self.L)
        k = math.sqrt(self.rate / self._z)
        return k * (2.0 / self.rate) * (-np.expm1(-0.5 * self.rate * x))

    def level_point(self, c):
        c = np.asarray(c, dtype=float)
        with np.errstate(divide="ignore"):
            x = np.log(self.rate / (self._z * np.maximum(c, 1e-300))) / self.rate
        return np.clip(x, 0.0, self.L)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        return -np.log1p(-u * self._z) / self.rate

    def describe(self):
        return {"family": "truncated-exponential", "rate": self.rate, "L": self.L}


class Exponential(MonotoneDensity):
    """Exponential(rate) on the half line.

    ``beta`` and ``tau`` declare the tail envelope pdf(x) <= exp(-beta x^tau)
    for large x; :meth:`tail_condition_holds` checks it analytically.
    """

    def __init__(self, rate: float = 1.0, beta: float | None = None, tau: float = 1.0):
        self.rate = float(rate)
        self.beta = 0.5 * self.rate if beta is None else float(beta)
        self.tau = float(tau)
        self.support_bound = math.inf

    def tail_condition_holds(self) -> bool:
        # rate * exp(-rate x) <= exp(-beta x^tau) eventually iff tau < 1, or
        # tau == 1 and (beta < rate, or beta == rate and rate <= 1).
        if self.beta <= 0 or self.tau <= 0:
            return False
        if self.tau < 1:
            return True
        if self.tau > 1:
            return False
        return self.beta < self.rate or (self.beta == self.rate and self.rate <= 1)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0)), 0.0)

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return -np.expm1(-self.rate * x)

    def root_mass(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return 2.0 / math.sqrt(self.rate) * (-np.expm1(-0.5 * self.rate * x))

    def level_point(self, c):
        c = np.asarray(c, dtype=float)
        with np.errstate(divide="ignore"):
            x = np.log(self.rate / np.maximum(c, 1e-300)) / self.rate
        return np.maximum(x, 0.0)

    def quantile(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate

    def describe(self):
        return {"family": "exponential", "rate": self.rate, "beta": self.beta, "tau": self.tau}


def _pieces(step: StepDensity):
    return step.knots[:-1], step.knots[1:], step.heights


def step_vs_analytic(step: StepDensity, f0: MonotoneDensity, metric: str, where=None) -> float:
    """Exact loss between a step density and an analytic monotone density."""
    metric = metric.lower()
    if metric == "pointwise":
        x = float(where)
        return abs(float(step(x)) - float(f0.pdf(x)))
    if metric == "sup":
        a, b = _check_interval(where, max(step.support_bound, f0.support_bound))
        grid = np.union1d(step.knots, [a, b])
        grid = grid[(grid >= a) & (grid <= b)]
        lo, hi = grid[:-1], grid[1:]
        c = step(hi)
        # f0 is monotone and continuous inside its support, so the supremum on
        # each closed piece sits at one of its ends.
        gap = np.maximum(np.abs(f0.pdf(lo) - c), np.abs(f0.pdf(hi) - c))
        gap0 = abs(float(step(a)) - float(f0.pdf(a)))
        return float(max(gap.max(initial=0.0), gap0))
    u, v, c = _pieces(step)
    tail = 1.0 - float(f0.cdf(step.right_end))
    if metric == "l1":
        s = np.clip(f0.level_point(c), u, v)
        Fu, Fs, Fv = f0.cdf(u), f0.cdf(s), f0.cdf(v)
        above = (Fs - Fu) - c * (s - u)
        below = c * (v - s) - (Fv - Fs)
        return float(np.sum(above + below) + tail)
    if metric == "hellinger":
        mass = f0.cdf(v) - f0.cdf(u)
        cross = np.sqrt(c) * (f0.root_mass(v) - f0.root_mass(u))
        h2 = 0.5 * (np.sum(mass - 2.0 * cross + c * (v - u)) + tail)
        return float(math.sqrt(max(h2, 0.0)))
    raise ValueError(f"unknown metric {metric!r}")


def analytic_kl(f0, step: StepDensity):
    """KL(f0, step) and int f0 log(f0/step)^2 by per-piece quadrature."""
    pdf = getattr(f0, "pdf", f0)
    bound = getattr(f0, "support_bound", step.right_end)
    if bound > step.right_end * (1 + 1e-12):
        extra, _ = integrate.quad(lambda x: float(pdf(x)), step.right_end, bound)
        if extra > QUAD_TOL:
            return math.inf, math.inf
    kl = m2 = 0.0
    for lo, hi, c in zip(*_pieces(step)):
        def integrand(x, power, c=c):
            fx = float(pdf(x))
            if fx <= 0:
                return 0.0
            return fx * math.log(fx / c) ** power

        if c <= 0:
            mass, _ = integrate.quad(lambda x: float(pdf(x)), lo, hi)
            if mass > QUAD_TOL:
                return math.inf, math.inf
            continue
        kl += integrate.quad(integrand, lo, hi, args=(1,), epsabs=QUAD_TOL, epsrel=0)[0]
        m2 += integrate.quad(integrand, lo, hi, args=(2,), epsabs=QUAD_TOL, epsrel=0)[0]
    return kl, m2


def make_truth(family: str, params: dict | None = None, beta=None, tau=None) -> MonotoneDensity:
    params = dict(params or {})
    family = family.lower()
    if family == "uniform":
        return Uniform(params.get("L", 1.0))
    if family == "triangular":
        return Triangular(params.get("L", 1.0))
    if family == "truncated-exponential":
        return TruncatedExponential(params.get("rate", 1.0), params.get("L", 1.0))
    if family == "exponential":
        return Exponential(params.get("rate", 1.0), beta, 1.0 if tau is None else tau)
    raise ValueError(f"unknown truth family {family!r}")

"""Posterior sampling over mixing distributions.

Two samplers are provided:

* :func:`run_dp_posterior` -- marginal Chinese-restaurant Gibbs for the
  Dirichlet-process prior. The uniform kernel and the theta^t base measure
  are conjugate, so each cluster scale has an exact truncated full
  conditional.
* :func:`run_finite_mixture_posterior` -- reversible jump for the finite
  mixture prior: an allocation/weights/scales Gibbs step followed by a
  birth-or-death proposal on the number of components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import special

from monobayes import _kernels
from monobayes.mixture import AtomicMixture
from monobayes.priors import DP, FINITE, BaseMeasure, PriorSpec


class DomainError(ValueError):
    """Raised when data fall outside the support of the prior."""


@dataclass(frozen=True)
class McmcConfig:
    iterations: int = 5000
    burn_in: int = 1000
    thinning: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.iterations <= self.burn_in:
            raise ValueError("iterations must exceed burn_in")
        if self.burn_in < 0 or self.thinning < 1:
            raise ValueError("burn_in must be >= 0 and thinning >= 1")


@dataclass
class PosteriorDraws:
    draws: list
    burn_in: int
    thinning: int
    seed: int
    acceptance_rates: dict = field(default_factory=dict)
    cluster_count_trace: np.ndarray | None = None
    k_trace: np.ndarray | None = None

    def __len__(self):
        return len(self.draws)

    def __iter__(self):
        return iter(self.draws)

    def values_at(self, x) -> np.ndarray:
        """f_P(x) for every draw; shape (draws,) or (draws, len(x))."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((len(self.draws), xs.size))
        for k, P in enumerate(self.draws):
            suffix = np.append(np.cumsum((P.weights / P.atoms)[::-1])[::-1], 0.0)
            out[k] = suffix[np.searchsorted(P.atoms, xs, side="left")]
        return out[:, 0] if np.ndim(x) == 0 else out


def _seed32(seed) -> int:
    return int(np.random.SeedSequence(seed).generate_state(1)[0])


def _check_data(data, base: BaseMeasure) -> np.ndarray:
    x = np.asarray(data, dtype=float).reshape(-1)
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("observations must be finite and strictly positive")
    if base.bounded and np.any(x > base.support_bound):
        raise DomainError(f"observation beyond the support bound {base.support_bound}")
    return x


def _base_args(base: BaseMeasure):
    L = base.support_bound if base.bounded else math.inf
    return base.bounded, float(base.t), float(L), float(base.tail_rate)


def conjugate_theta_draw(cluster_max: float, n_c: int, base: BaseMeasure, rng=None, size=None):
    """Draw a cluster scale from its full conditional.

    The density is proportional to theta^(t - n_c) on [cluster_max, L], or
    theta^(t - n_c) exp(-r theta) on [cluster_max, inf) for the tilted base.
    ``rng`` may be a numpy Generator or an integer seed.
    """
    bounded, t, L, r = _base_args(base)
    if cluster_max <= 0 or (bounded and cluster_max > L):
        raise DomainError("cluster maximum must lie in (0, L]")
    if isinstance(rng, np.random.Generator):
        seed = int(rng.integers(0, 2**32))
    else:
        seed = _seed32(rng)
    out = _kernels.theta_draws(float(cluster_max), float(n_c), bounded, t, L, r, 1 if size is None else int(size), seed)
    return float(out[0]) if size is None else out


def run_dp_posterior(data, spec: PriorSpec, cfg: McmcConfig = McmcConfig()) -> PosteriorDraws:
    """Posterior draws under the Dirichlet-process prior.

    Each saved clustering is turned into a mixing distribution with weight
    n_c / (n + A) on every cluster scale plus a fresh base-measure atom with
    weight A / (n + A).
    """
    if spec.kind != DP:
        raise ValueError("run_dp_posterior needs a Dirichlet-process prior")
    x = _check_data(data, spec.base)
    bounded, t, L, r = _base_args(spec.base)
    A = float(spec.mass)
    new_weight = A * spec.base.kernel_marginal(x)
    flat_theta, flat_count, offsets, remainder, k_trace = _kernels.dp_gibbs(
        x, new_weight, bounded, t, L, r, A,
        cfg.iterations, cfg.burn_in, cfg.thinning, _seed32(cfg.seed),
    )
    n = x.size
    bound = spec.base.support_bound
    draws = []
    for k in range(offsets.size - 1):
        lo, hi = offsets[k], offsets[k + 1]
        atoms = np.append(flat_theta[lo:hi], remainder[k])
        weights = np.append(flat_count[lo:hi] / (n + A), A / (n + A))
        draws.append(AtomicMixture.from_unsorted(atoms, weights, bound))
    return PosteriorDraws(
        draws=draws,
        burn_in=cfg.burn_in,
        thinning=cfg.thinning,
        seed=cfg.seed,
        cluster_count_trace=np.asarray(k_trace),
    )


class _FiniteState:
    """Mutable state of one reversible-jump chain (single owner)."""

    def __init__(self, x, spec: PriorSpec, rng):
        self.x = x
        self.spec = spec
        self.base = spec.base
        self.rng = rng
        self.log_q = spec.k_log_pmf()
        self.a = spec.dirichlet_weight
        self.x_min = float(x.min()) if x.size else 0.0
        self.x_max = float(x.max()) if x.size else 0.0
        # log of alpha-mass of [x_min, L]: normaliser of the birth proposal
        self.log_tail = math.log(max(1.0 - float(spec.base.cdf(self.x_min)), 1e-300))
        self.theta = np.array([self._restricted_base()]) if x.size == 0 else np.array(
            [conjugate_theta_draw(self.x_max, x.size, self.base, rng)]
        )
        self.p = np.array([1.0])
        self.loglik = self._loglik(self.theta, self.p)

    def _restricted_base(self):
        if self.x_min <= 0:
            return float(self.base.sample(self.rng))
        return conjugate_theta_draw(self.x_min, 0, self.base, self.rng)

    def _loglik(self, theta, p):
        if self.x.size == 0:
            return 0.0
        order = np.argsort(theta)
        th, w = theta[order], p[order]
        suffix = np.append(np.cumsum((w / th)[::-1])[::-1], 0.0)
        vals = suffix[np.searchsorted(th, self.x, side="left")]
        if np.any(vals <= 0):
            return -math.inf
        return float(np.sum(np.log(vals)))

    def _log_dirichlet(self, p):
        K = p.size
        a = self.a
        return float(special.gammaln(K * a) - K * special.gammaln(a) + (a - 1) * np.sum(np.log(p)))

    def _removable(self, theta):
        """Components whose removal keeps every observation covered and that a
        birth could have proposed (scale >= sample minimum)."""
        K = theta.size
        if K < 2:
            return np.zeros(K, dtype=bool)
        ok = theta >= self.x_min
        if self.x.size:
            top = np.sort(theta)
            best, second = top[-1], top[-2]
            others_max = np.where(theta == best, second, best)
            ok &= others_max >= self.x_max
        return ok

    def _move_probs(self, K):
        k_max = self.spec.k_max
        if k_max == 1:
            return 0.0, 0.0
        if K == 1:
            return 1.0, 0.0
        if K == k_max:
            return 0.0, 1.0
        return 0.5, 0.5

    def gibbs(self):
        rng, x, K = self.rng, self.x, self.theta.size
        counts = np.zeros(K, dtype=np.int64)
        cmax = np.zeros(K)
        if x.size:
            w = (self.p / self.theta)[None, :] * (x[:, None] <= self.theta[None, :])
            cum = np.cumsum(w, axis=1)
            u = rng.random(x.size) * cum[:, -1]
            z = np.minimum((cum <= u[:, None]).sum(axis=1), K - 1)
            counts = np.bincount(z, minlength=K)
            np.maximum.at(cmax, z, x)
        self.p = rng.dirichlet(self.a + counts)
        self.p = np.maximum(self.p, 1e-300)
        self.p /= self.p.sum()
        for k in range(K):
            if counts[k] == 0:
                self.theta[k] = float(self.base.sample(rng))
            else:
                self.theta[k] = conjugate_theta_draw(cmax[k], int(counts[k]), self.base, rng)
        self.loglik = self._loglik(self.theta, self.p)

    def _log_birth_ratio(self, K, theta_new, w, p_old, p_new, loglik_new, removable_new):
        """log acceptance ratio of a birth from K to K+1 components."""
        b_K, _ = self._move_probs(K)
        _, d_K1 = self._move_probs(K + 1)
        log_prior = (
            self.log_q[K] - self.log_q[K - 1]
            + self._log_dirichlet(p_new) - self._log_dirichlet(p_old)
            + math.log(K + 1)  # unordered components
        )
        # alpha(theta*) / q(theta*) is the alpha-mass of the proposal region
        log_proposal = math.log(b_K) - self.log_tail + math.log(K) + (K - 1) * math.log1p(-w)
        log_reverse = math.log(d_K1) - math.log(removable_new)
        log_jac = (K - 1) * math.log1p(-w)
        return log_prior + (loglik_new - self.loglik) + log_reverse - log_proposal + log_jac

    def birth_death(self):
        rng = self.rng
        K = self.theta.size
        b_K, d_K = self._move_probs(K)
        if rng.random() < b_K:
            theta_new = self._restricted_base()
            w = rng.beta(1.0, K)
            if not 0.0 < w < 1.0:
                return "birth", False
            theta = np.append(self.theta, theta_new)
            p = np.append(self.p * (1.0 - w), w)
            loglik = self._loglik(theta, p)
            R = int(self._removable(theta).sum())
            log_a = self._log_birth_ratio(K, theta_new, w, self.p, p, loglik, R)
            if math.log(1.0 - rng.random()) < log_a:
                self.theta, self.p, self.loglik = theta, p, loglik
                return "birth", True
            return "birth", False
        if d_K == 0.0:
            return None, False
        removable = np.flatnonzero(self._removable(self.theta))
        if removable.size == 0:
            return "death", False
        j = int(rng.choice(removable))
        w = float(self.p[j])
        theta = np.delete(self.theta, j)
        p = np.delete(self.p, j) / (1.0 - w)
        loglik = self._loglik(theta, p)
        # reverse move is the birth from K-1 of (theta_j, w)
        saved = self.loglik
        self.loglik = loglik
        log_a = -self._log_birth_ratio(K - 1, self.theta[j], w, p, self.p, saved, removable.size)
        self.loglik = saved
        if math.log(1.0 - rng.random()) < log_a:
            self.theta, self.p, self.loglik = theta, p, loglik
            return "death", True
        return "death", False


def run_finite_mixture_posterior(data, spec: PriorSpec, cfg: McmcConfig = McmcConfig()) -> PosteriorDraws:
    """Reversible-jump posterior draws under the finite-mixture prior.

    Births propose a scale from the base measure restricted to [min(data), L]
    and a weight w ~ Beta(1, K), shrinking the others by (1 - w). Deaths pick
    uniformly among components whose removal keeps all observations covered.
    """
    if spec.kind != FINITE:
        raise ValueError("run_finite_mixture_posterior needs a finite-mixture prior")
    x = _check_data(data, spec.base)
    rng = np.random.default_rng(cfg.seed)
    state = _FiniteState(x, spec, rng)
    tried = {"birth": 0, "death": 0}
    accepted = {"birth": 0, "death": 0}
    k_trace = np.empty(cfg.iterations, dtype=np.int64)
    draws = []
    bound = spec.base.support_bound
    for it in range(cfg.iterations):
        state.gibbs()
        move, ok = state.birth_death()
        if move is not None:
            tried[move] += 1
            accepted[move] += int(ok)
        k_trace[it] = state.theta.size
        if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.thinning == 0:
            draws.append(AtomicMixture.from_unsorted(state.theta, state.p, bound))
    rates = {m: (accepted[m] / tried[m] if tried[m] else 0.0) for m in tried}
    return PosteriorDraws(
        draws=draws,
        burn_in=cfg.burn_in,
        thinning=cfg.thinning,
        seed=cfg.seed,
        acceptance_rates=rates,
        k_trace=k_trace,
    )


def run_posterior(data, spec: PriorSpec, cfg: McmcConfig = McmcConfig()) -> PosteriorDraws:
    if spec.kind == DP:
        return run_dp_posterior(data, spec, cfg)
    return run_finite_mixture_posterior(data, spec, cfg)


class ESS(NamedTuple):
    value: float
    degenerate: bool


def effective_sample_size(trace) -> ESS:
    """Effective sample size by Geyer's initial positive sequence."""
    y = np.asarray(trace, dtype=float).reshape(-1)
    n = y.size
    if n < 10:
        raise ValueError("trace must have at least 10 values")
    y = y - y.mean()
    var = float(np.dot(y, y)) / n
    if var <= 1e-300 * max(1.0, float(np.max(np.abs(trace)))):
        return ESS(float(n), True)
    size = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(y, size)
    acov = np.fft.irfft(spec * np.conj(spec), size)[:n] / n
    rho = acov / acov[0]
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    if tau <= 0:
        return ESS(float(n), False)
    return ESS(float(min(n / tau, n)), False)

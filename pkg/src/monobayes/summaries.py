"""Posterior estimators and loss statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from monobayes.mixture import AtomicMixture, distance, eval_density
from monobayes.posterior import PosteriorDraws


@dataclass(frozen=True)
class LossSample:
    values: np.ndarray
    metric: str
    reference: str

    def __len__(self):
        return int(self.values.size)


def _draw_list(draws):
    if isinstance(draws, PosteriorDraws):
        draws = draws.draws
    elif isinstance(draws, AtomicMixture):
        draws = [draws]
    draws = list(draws)
    if not draws:
        raise ValueError("need at least one posterior draw")
    return draws


def draw_values(draws, x) -> np.ndarray:
    """f_P(x) for each draw, shape (draws, len(x))."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    return np.stack([np.atleast_1d(eval_density(P, xs)) for P in _draw_list(draws)])


def _upper_quantile(sorted_vals: np.ndarray, p: float):
    # smallest v with (fraction of values <= v) > p
    n = sorted_vals.shape[0]
    k = min(n - 1, int(math.floor(p * n)))
    return sorted_vals[k]


def posterior_median_pointwise(draws, x):
    """inf{t : fraction of draws with f_P(x) <= t exceeds 1/2}."""
    vals = np.sort(draw_values(draws, x), axis=0)
    med = _upper_quantile(vals, 0.5)
    return float(med[0]) if np.ndim(x) == 0 else med


def posterior_mean_pointwise(draws, x):
    """Reported for reference only; never used as a test statistic."""
    mean = draw_values(draws, x).mean(axis=0)
    return float(mean[0]) if np.ndim(x) == 0 else mean


def loss_sample(draws, f0, metric: str = "l1", where=None) -> LossSample:
    f0_target = f0.to_step() if isinstance(f0, AtomicMixture) else f0
    vals = np.array([distance(P.to_step(), f0_target, metric, where) for P in _draw_list(draws)])
    ref = getattr(f0, "describe", lambda: type(f0).__name__)()
    return LossSample(vals, metric, str(ref))


def posterior_radius(draws, f0, metric: str = "l1", mass: float = 0.9, where=None,
                     losses: LossSample | None = None) -> float:
    """Smallest radius r such that at least ``mass`` of the draws lie within r of f0."""
    if not 0.0 < mass <= 1.0:
        raise ValueError("mass must lie in (0, 1]")
    if losses is None:
        losses = loss_sample(draws, f0, metric, where)
    d = np.sort(losses.values)
    if not np.any(np.isfinite(d)):
        raise ValueError("every posterior draw is at infinite distance")
    k = max(0, int(math.ceil(mass * d.size - 1e-9)) - 1)
    return float(d[k])


def credible_band(draws, grid, level: float = 0.95):
    """Pointwise equal-tailed band of f_P(x); returns (lower, upper) arrays."""
    if not 0.0 <= level < 1.0 + 1e-15:
        raise ValueError("level must lie in [0, 1]")
    vals = np.sort(draw_values(draws, grid), axis=0)
    tail = (1.0 - level) / 2.0
    return _upper_quantile(vals, tail), _upper_quantile(vals, 1.0 - tail)

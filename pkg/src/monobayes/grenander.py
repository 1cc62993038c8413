"""Grenander NPMLE, its boundary-corrected variant and the inverse process."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from monobayes.mixture import StepDensity


class DegenerateScaleError(ValueError):
    """Raised when the boundary offset c_n n^(-1/3) does not fit inside [0, L]."""


@dataclass(frozen=True)
class GrenanderFit:
    """Least concave majorant of the empirical CDF and its left derivative.

    Attributes
    ----------
    sample : sorted observations (ties kept)
    ecdf_knots : distinct sorted values
    ecdf : empirical CDF at ``ecdf_knots``
    density : the NPMLE as a right-closed step density
    """

    sample: np.ndarray
    ecdf_knots: np.ndarray
    ecdf: np.ndarray
    density: StepDensity

    @property
    def n(self) -> int:
        return int(self.sample.size)

    @property
    def value_at_zero(self) -> float:
        """f_hat(0+): the first majorant slope."""
        return float(self.density.heights[0])

    def __call__(self, x):
        return self.density(x)


def grenander_fit(data, support_bound: float | None = None) -> GrenanderFit:
    """Fit the Grenander estimator.

    The majorant is built with a monotone stack over the points (0, 0) and
    (u_j, F_n(u_j)); collinear vertices are dropped, so the returned heights
    are strictly decreasing.
    """
    x = np.sort(np.asarray(data, dtype=float).reshape(-1))
    if x.size == 0:
        raise ValueError("Grenander estimator needs at least one observation")
    if x[0] <= 0 or not np.all(np.isfinite(x)):
        raise ValueError("observations must be finite and strictly positive")
    n = x.size
    u, counts = np.unique(x, return_counts=True)
    cum = np.cumsum(counts)

    px = np.concatenate(([0.0], u))
    pc = np.concatenate(([0], cum))
    hull = [0]
    for j in range(1, px.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b unless slope(a, b) > slope(b, j)
            if (pc[b] - pc[a]) * (px[j] - px[b]) <= (pc[j] - pc[b]) * (px[b] - px[a]):
                hull.pop()
            else:
                break
        hull.append(j)
    hull = np.asarray(hull)
    knots = px[hull]
    heights = np.diff(pc[hull]) / (n * np.diff(knots))
    bound = float(u[-1]) if support_bound is None else float(support_bound)
    density = StepDensity(knots, heights, bound)
    return GrenanderFit(x, u, cum / n, density)


def boundary_offset(n: int, eps: float) -> float:
    """c_n n^(-1/3) with c_n = 5 log(n)^(1/3) / eps."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if eps <= 0:
        raise ValueError("eps must be positive")
    c_n = 5.0 * math.log(n) ** (1.0 / 3.0) / eps
    return c_n * n ** (-1.0 / 3.0)


def boundary_modified_eval(fit: GrenanderFit, x: float, n: int | None = None,
                           eps: float = 1.0, L: float = 1.0) -> float:
    """Boundary-corrected Grenander value.

    At the end points the estimator is read off a distance c_n n^(-1/3)
    inside the support; elsewhere it is the plain NPMLE. The offset is not
    rescaled with L.
    """
    n = fit.n if n is None else int(n)
    delta = boundary_offset(n, eps)
    if delta >= L:
        raise DegenerateScaleError(
            f"offset {delta:.4g} >= L = {L}; n = {n} is too small for eps = {eps}"
        )
    if not 0.0 <= x <= L:
        raise ValueError("x must lie in [0, L]")
    if x == 0.0:
        return float(fit(delta))
    if x == L:
        return float(fit(L - delta))
    return float(fit(x))


def inverse_process(data, a: float) -> float:
    """Smallest maximiser of t -> F_n(t) - a t over t >= 0.

    Between jumps the objective decreases, so only 0 and the observations
    are candidates.
    """
    x = np.asarray(data, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("inverse process needs at least one observation")
    u, counts = np.unique(x, return_counts=True)
    t = np.concatenate(([0.0], u))
    F = np.concatenate(([0], np.cumsum(counts))) / x.size
    objective = F - a * t
    return float(t[int(np.argmax(objective))])

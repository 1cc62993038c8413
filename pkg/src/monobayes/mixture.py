"""Atomic mixtures of uniform kernels and their step densities.

A monotone non-increasing density on [0, L] can be written as

    f_P(x) = sum_i p_i * 1[x <= theta_i] / theta_i

for a mixing distribution P = sum_i p_i delta_{theta_i}. When P is atomic the
density is a right-closed step function, and every comparison between two such
densities (L1, Hellinger, sup, Kullback-Leibler) is an exact finite sum over
the merged knot set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

SIMPLEX_TOL = 1e-12
MASS_TOL = 1e-10

# 2 * (1 - 2^(-2/3))^(-2): piece-count constant of the adaptive partition.
K0 = 2.0 / (1.0 - 2.0 ** (-2.0 / 3.0)) ** 2


class InvalidIntervalError(ValueError):
    """Raised when a sup-norm interval does not lie inside the supports."""


class ShapeViolationError(ValueError):
    """Raised when a density handed to the partition is not non-increasing."""


class BoundViolationError(ValueError):
    """Raised when f(0) exceeds the declared bound M."""


@dataclass(frozen=True)
class AtomicMixture:
    """Finite mixing distribution ``sum_i weights[i] * delta(atoms[i])``.

    Atoms are strictly increasing and positive; weights lie on the simplex.
    Use :meth:`from_unsorted` when atoms come out of a sampler in arbitrary
    order or with ties.
    """

    atoms: np.ndarray
    weights: np.ndarray
    support_bound: float | None = None

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if atoms.size == 0:
            raise ValueError("a mixture needs at least one atom")
        if atoms.shape != weights.shape:
            raise ValueError("atoms and weights must have the same length")
        if np.any(atoms <= 0) or not np.all(np.isfinite(atoms)):
            raise ValueError("atoms must be finite and strictly positive")
        if np.any(np.diff(atoms) <= 0):
            raise ValueError("atoms must be strictly increasing")
        if np.any(weights < 0):
            raise ValueError("weights must be non-negative")
        if abs(weights.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"weights sum to {weights.sum()!r}, not 1")
        if self.support_bound is not None and atoms[-1] > self.support_bound:
            raise ValueError("atom beyond the declared support bound")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_unsorted(cls, atoms, weights, support_bound=None) -> "AtomicMixture":
        """Sort atoms, merge ties, drop zero weights and renormalise."""
        atoms = np.asarray(atoms, dtype=float).reshape(-1)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        keep = weights > 0
        atoms, weights = atoms[keep], weights[keep]
        order = np.argsort(atoms, kind="stable")
        atoms, weights = atoms[order], weights[order]
        uniq, inverse = np.unique(atoms, return_inverse=True)
        merged = np.bincount(inverse, weights=weights, minlength=uniq.size)
        merged = merged / merged.sum()
        return cls(uniq, merged, support_bound)

    @property
    def size(self) -> int:
        return int(self.atoms.size)

    def heights(self) -> np.ndarray:
        """Density value on each piece (theta_{j-1}, theta_j]."""
        return np.cumsum((self.weights / self.atoms)[::-1])[::-1]

    def to_step(self) -> "StepDensity":
        knots = np.concatenate(([0.0], self.atoms))
        bound = math.inf if self.support_bound is None else self.support_bound
        return StepDensity(knots, self.heights(), bound)

    def to_dict(self) -> dict:
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}


@dataclass(frozen=True)
class StepDensity:
    """Right-closed, non-increasing step density.

    ``heights[j]`` is the value on ``(knots[j], knots[j+1]]``; the value at 0
    is ``heights[0]`` (the right limit) and the density vanishes beyond the
    last knot. ``support_bound`` is ``math.inf`` for densities on the half
    line.
    """

    knots: np.ndarray
    heights: np.ndarray
    support_bound: float = math.inf
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float).reshape(-1)
        heights = np.asarray(self.heights, dtype=float).reshape(-1)
        if self.check:
            if knots.size != heights.size + 1 or heights.size == 0:
                raise ValueError("need len(knots) == len(heights) + 1 >= 2")
            if knots[0] != 0.0 or np.any(np.diff(knots) <= 0):
                raise ValueError("knots must start at 0 and strictly increase")
            if np.any(heights < 0):
                raise ValueError("heights must be non-negative")
            scale = max(1.0, float(heights[0]))
            if np.any(np.diff(heights) > 1e-12 * scale):
                raise ValueError("heights must be non-increasing")
            mass = float(np.dot(heights, np.diff(knots)))
            if abs(mass - 1.0) > MASS_TOL:
                raise ValueError(f"step density integrates to {mass!r}, not 1")
            if knots[-1] > self.support_bound * (1 + 1e-12):
                raise ValueError("last knot beyond the support bound")
        knots.setflags(write=False)
        heights.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "heights", heights)

    @classmethod
    def uniform(cls, L: float) -> "StepDensity":
        return cls(np.array([0.0, L]), np.array([1.0 / L]), L)

    @property
    def right_end(self) -> float:
        return float(self.knots[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.knots, x, side="left")
        vals = np.concatenate((self.heights[:1], self.heights, [0.0]))
        return vals[idx]

    def mass(self) -> float:
        return float(np.dot(self.heights, np.diff(self.knots)))

    def to_mixture(self) -> AtomicMixture:
        """Inverse of :meth:`AtomicMixture.to_step`."""
        nxt = np.append(self.heights[1:], 0.0)
        weights = (self.heights - nxt) * self.knots[1:]
        bound = None if math.isinf(self.support_bound) else self.support_bound
        return AtomicMixture.from_unsorted(self.knots[1:], weights, bound)


@dataclass(frozen=True)
class PartitionTrace:
    breakpoints: np.ndarray
    piece_count: int
    steps: int
    final_epsilon: float
    epsilons: tuple
    constant_K0: float = K0

    def piece_bound(self, M: float, L: float, eps: float) -> float:
        return self.constant_K0 * M ** (2.0 / 3.0) * L ** (1.0 / 3.0) / eps


def eval_density(P: AtomicMixture, x):
    """Evaluate ``f_P`` at ``x`` (scalar or array, ``x >= 0``)."""
    atoms = P.atoms
    suffix = np.append(np.cumsum((P.weights / atoms)[::-1])[::-1], 0.0)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("density is only defined for x >= 0")
    out = suffix[np.searchsorted(atoms, xa, side="left")]
    return float(out) if out.ndim == 0 else out


def sample_iid(P: AtomicMixture, n: int, seed) -> np.ndarray:
    """Draw ``n`` observations from ``f_P``: theta ~ P, then Uniform(0, theta]."""
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(seed)
    idx = rng.choice(P.size, size=n, p=P.weights)
    # 1 - U lies in (0, 1], so draws stay in (0, theta].
    return P.atoms[idx] * (1.0 - rng.random(n))


def _merged(f: StepDensity, g: StepDensity):
    grid = np.union1d(f.knots, g.knots)
    mids = 0.5 * (grid[:-1] + grid[1:])
    return grid, np.diff(grid), f(mids), g(mids)


def _as_step(d):
    if isinstance(d, AtomicMixture):
        return d.to_step()
    return d


def distance(f, g, metric: str = "l1", interval=None) -> float:
    """Distance between two densities.

    ``metric`` is ``"l1"``, ``"hellinger"`` (with h^2 = 1/2 int (sqrt f -
    sqrt g)^2), ``"sup"`` (requires ``interval=(a, b)``) or ``"pointwise"``
    (requires ``interval=x``). Step/step pairs are integrated exactly over the
    merged knots. If one argument is an analytic density (anything exposing
    ``pdf``), the comparison is delegated to it.
    """
    f, g = _as_step(f), _as_step(g)
    if not isinstance(f, StepDensity):
        f, g = g, f
    if not isinstance(g, StepDensity):
        from monobayes.densities import step_vs_analytic

        return step_vs_analytic(f, g, metric, interval)
    metric = metric.lower()
    if metric == "pointwise":
        x = float(interval)
        return abs(float(f(x)) - float(g(x)))
    if metric == "sup":
        a, b = _check_interval(interval, max(f.support_bound, g.support_bound))
        grid = np.union1d(np.union1d(f.knots, g.knots), [a, b])
        grid = grid[(grid >= a) & (grid <= b)]
        # Closed pieces of [a, b]: every point of a right-closed piece is
        # represented by its right end, and a itself by the piece containing it.
        pts = np.concatenate(([a], grid[grid > a]))
        return float(np.max(np.abs(f(pts) - g(pts))))
    _, lengths, fv, gv = _merged(f, g)
    if metric == "l1":
        return float(np.sum(np.abs(fv - gv) * lengths))
    if metric == "hellinger":
        h2 = 0.5 * np.sum((np.sqrt(fv) - np.sqrt(gv)) ** 2 * lengths)
        return float(math.sqrt(max(h2, 0.0)))
    raise ValueError(f"unknown metric {metric!r}")


def _check_interval(interval, bound):
    if interval is None:
        raise InvalidIntervalError("sup metric needs interval=(a, b)")
    a, b = map(float, interval)
    if not (0.0 <= a < b) or b > bound * (1 + 1e-12):
        raise InvalidIntervalError(f"interval [{a}, {b}] is outside the supports")
    return a, b


def kl_divergence(f, g, second_moment: bool = False):
    """KL(f, g) = int f log(f / g), exact for step densities.

    Returns ``math.inf`` when f charges a region where g vanishes. With
    ``second_moment=True`` a pair ``(kl, int f log(f/g)^2)`` is returned.
    Analytic ``f`` (with a ``pdf``) against a step ``g`` is integrated by
    quadrature piece by piece.
    """
    f, g = _as_step(f), _as_step(g)
    if not isinstance(f, StepDensity):
        from monobayes.densities import analytic_kl

        kl, m2 = analytic_kl(f, g)
        return (kl, m2) if second_moment else kl
    _, lengths, fv, gv = _merged(f, g)
    charged = (fv > 0) & (lengths > 0)
    if np.any(charged & (gv <= 0)):
        return (math.inf, math.inf) if second_moment else math.inf
    fv, gv, lengths = fv[charged], gv[charged], lengths[charged]
    logr = np.log(fv / gv)
    kl = float(max(np.sum(fv * logr * lengths), 0.0))
    if second_moment:
        return kl, float(np.sum(fv * logr**2 * lengths))
    return kl


def adaptive_kl_partition(
    f: Callable, eps: float, L: float, M: float, check_grid: int = 2**16
) -> tuple[AtomicMixture, PartitionTrace]:
    """Piecewise-constant KL approximation of a monotone density.

    The dyadic refinement runs on ``sqrt(f)``: at each step every interval
    whose oscillation times sqrt(length) reaches ``eps_i / sqrt(2)`` is halved,
    where ``eps_i`` is the current maximum of that quantity. Refinement stops
    at the first step with ``eps_i**2 <= eps**3``. The approximation takes
    ``sqrt(f)`` at the left end of each piece, squares and renormalises, so
    ``f / f_P`` stays bounded and KL(f, f_P) is finite.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if L <= 0:
        raise ValueError("L must be positive")
    pdf = getattr(f, "pdf", f)

    def F(x):
        return np.asarray(pdf(np.asarray(x, dtype=float)), dtype=float)

    grid = np.linspace(0.0, L, check_grid)
    vals = F(grid)
    if np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise ShapeViolationError("density must be finite and non-negative")
    if np.any(np.diff(vals) > 1e-12 * max(1.0, vals[0])):
        raise ShapeViolationError("density is not non-increasing on [0, L]")
    if vals[0] > M * (1 + 1e-12):
        raise BoundViolationError(f"f(0) = {vals[0]} exceeds M = {M}")

    def root(x):
        return np.sqrt(np.maximum(F(x), 0.0))

    pts = np.array([0.0, L])
    rvals = root(pts)
    epsilons = []
    while True:
        lengths = np.diff(pts)
        osc = (rvals[:-1] - rvals[1:]) * np.sqrt(lengths)
        eps_i = float(osc.max())
        epsilons.append(eps_i)
        if eps_i**2 <= eps**3:
            break
        split = osc >= eps_i / math.sqrt(2.0)
        mids = 0.5 * (pts[:-1][split] + pts[1:][split])
        pts = np.concatenate((pts, mids))
        order = np.argsort(pts)
        pts = pts[order]
        rvals = np.concatenate((rvals, root(mids)))[order]

    g2 = rvals[:-1] ** 2
    h = g2 / float(np.dot(g2, np.diff(pts)))
    nxt = np.append(h[1:], 0.0)
    weights = (h - nxt) * pts[1:]
    weights = np.clip(weights, 0.0, None)
    mixture = AtomicMixture.from_unsorted(pts[1:], weights / weights.sum(), L)
    trace = PartitionTrace(
        breakpoints=pts,
        piece_count=int(pts.size - 1),
        steps=len(epsilons) - 1,
        final_epsilon=epsilons[-1],
        epsilons=tuple(epsilons),
    )
    return mixture, trace

"""Compiled inner loops for the Dirichlet-process Gibbs sampler.

Everything here uses numba's own generator, seeded once per chain, so a chain
is a pure function of its inputs.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def power_draw(m, e, L, u):
    """Inverse-CDF draw from density proportional to theta^e on [m, L]."""
    if m >= L:
        return L
    k = e + 1.0
    rho = m / L
    if abs(k) < 1e-12:
        return m * math.exp(u * math.log(L / m))
    if k > 0:
        rk = rho**k
        return L * (rk + u * (1.0 - rk)) ** (1.0 / k)
    q = rho ** (-k)
    return m * (1.0 + u * (q - 1.0)) ** (1.0 / k)


@njit(cache=True)
def _phi(y, s, r):
    return s * y - r * math.exp(y)


@njit(cache=True)
def _level(y_from, direction, target, s, r):
    # Solve phi(y) = target on the side of y_from given by direction.
    step = 1.0
    y_far = y_from + direction * step
    while _phi(y_far, s, r) > target:
        step *= 2.0
        y_far = y_from + direction * step
    lo, hi = y_from, y_far
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _phi(mid, s, r) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@njit(cache=True)
def tilted_draw(m, s, r):
    """Exact draw from density proportional to theta^(s-1) exp(-r theta) on [m, inf).

    Works in y = log(theta), where the density exp(s y - r e^y) is log-concave,
    with a three-piece envelope: tangent exponentials where phi has dropped by
    one from its maximum and a flat top in between.
    """
    y0 = math.log(m)
    ymode = y0
    if s > 0:
        ymode = max(y0, math.log(s / r))
    top = _phi(ymode, s, r)
    yr = _level(ymode, 1.0, top - 1.0, s, r)
    if ymode > y0 and _phi(y0, s, r) < top - 1.0:
        yl = _level(ymode, -1.0, top - 1.0, s, r)
    else:
        yl = y0
    sr = s - r * math.exp(yr)  # < 0
    mass_c = math.exp(-1.0) / (-sr)
    mass_b = yr - yl
    mass_a = 0.0
    sl = 0.0
    if yl > y0:
        sl = s - r * math.exp(yl)  # > 0
        mass_a = math.exp(-1.0) * (-math.expm1(-sl * (yl - y0))) / sl
    total = mass_a + mass_b + mass_c
    while True:
        u = np.random.random() * total
        v = 1.0 - np.random.random()
        if u < mass_a:
            # exponential increasing towards yl, truncated to [y0, yl]
            w = -math.log1p(-np.random.random() * (-math.expm1(-sl * (yl - y0)))) / sl
            y = yl - w
            env = -1.0 - sl * w
        elif u < mass_a + mass_b:
            y = yl + np.random.random() * (yr - yl)
            env = 0.0
        else:
            w = -math.log(1.0 - np.random.random()) / (-sr)
            y = yr + w
            env = -1.0 + sr * w
        if math.log(v) <= _phi(y, s, r) - top - env:
            return math.exp(y)


@njit(cache=True)
def theta_draw(m, count, bounded, t, L, r):
    """Full conditional of a cluster scale given its maximum and size."""
    if bounded:
        return power_draw(m, t - count, L, 1.0 - np.random.random())
    return tilted_draw(m, t - count + 1.0, r)


@njit(cache=True)
def base_draw(bounded, t, L, r):
    if bounded:
        return L * (1.0 - np.random.random()) ** (1.0 / (t + 1.0))
    return np.random.gamma(t + 1.0, 1.0 / r)


@njit(cache=True)
def seed_numba(seed):
    np.random.seed(seed)


@njit(cache=True)
def theta_draws(m, count, bounded, t, L, r, size, seed):
    np.random.seed(seed)
    out = np.empty(size)
    for i in range(size):
        out[i] = theta_draw(m, count, bounded, t, L, r)
    return out


@njit(cache=True)
def dp_gibbs(x, new_weight, bounded, t, L, r, A, iterations, burn_in, thinning, seed):
    """Marginal Chinese-restaurant Gibbs sampler for the uniform-kernel DP mixture.

    Each sweep reassigns every observation (existing cluster c with weight
    n_c 1[x <= theta_c] / theta_c, new cluster with the precomputed
    A * int 1[x <= theta]/theta d alpha), then redraws every cluster scale
    from its conjugate truncated conditional. Saved draws are flattened:
    ``offsets[k]:offsets[k+1]`` index the clusters of draw k.
    """
    np.random.seed(seed)
    n = x.size
    cap_k = n + 1
    z = np.zeros(n, dtype=np.int64)
    counts = np.zeros(cap_k, dtype=np.int64)
    theta = np.zeros(cap_k)
    cmax = np.zeros(cap_k)
    probs = np.zeros(cap_k + 1)
    # active[:K] lists live labels; where[label] is its slot in active;
    # free[:n_free] is a stack of unused labels.
    active = np.zeros(cap_k, dtype=np.int64)
    where = np.zeros(cap_k, dtype=np.int64)
    free = np.arange(cap_k - 1, -1, -1)
    n_free = cap_k
    K = 0
    if n > 0:
        n_free -= 1
        lab = free[n_free]
        active[0] = lab
        where[lab] = 0
        counts[lab] = n
        theta[lab] = theta_draw(x.max(), n, bounded, t, L, r)
        z[:] = lab
        K = 1

    n_saved = 0
    for it in range(burn_in, iterations):
        if (it - burn_in) % thinning == 0:
            n_saved += 1
    cap = max(16, n_saved * 8)
    flat_theta = np.empty(cap)
    flat_count = np.empty(cap, dtype=np.int64)
    offsets = np.zeros(n_saved + 1, dtype=np.int64)
    remainder = np.empty(n_saved)
    k_trace = np.empty(iterations, dtype=np.int64)
    saved = 0
    pos = 0

    for it in range(iterations):
        for i in range(n):
            c = z[i]
            counts[c] -= 1
            if counts[c] == 0:
                slot = where[c]
                moved = active[K - 1]
                active[slot] = moved
                where[moved] = slot
                K -= 1
                free[n_free] = c
                n_free += 1
            xi = x[i]
            total = 0.0
            for s in range(K):
                lab = active[s]
                if xi <= theta[lab]:
                    total += counts[lab] / theta[lab]
                probs[s] = total
            total += new_weight[i]
            probs[K] = total
            u = np.random.random() * total
            s = 0
            while s < K and probs[s] <= u:
                s += 1
            if s == K:
                n_free -= 1
                lab = free[n_free]
                active[K] = lab
                where[lab] = K
                theta[lab] = theta_draw(xi, 1, bounded, t, L, r)
                counts[lab] = 1
                K += 1
            else:
                lab = active[s]
                counts[lab] += 1
            z[i] = lab

        for s in range(K):
            cmax[active[s]] = 0.0
        for i in range(n):
            if x[i] > cmax[z[i]]:
                cmax[z[i]] = x[i]
        for s in range(K):
            lab = active[s]
            theta[lab] = theta_draw(cmax[lab], counts[lab], bounded, t, L, r)
        k_trace[it] = K

        if it >= burn_in and (it - burn_in) % thinning == 0:
            if pos + K > flat_theta.size:
                grow = max(flat_theta.size * 2, pos + K)
                nt = np.empty(grow)
                nc = np.empty(grow, dtype=np.int64)
                nt[:pos] = flat_theta[:pos]
                nc[:pos] = flat_count[:pos]
                flat_theta = nt
                flat_count = nc
            for s in range(K):
                lab = active[s]
                flat_theta[pos + s] = theta[lab]
                flat_count[pos + s] = counts[lab]
            pos += K
            offsets[saved + 1] = pos
            remainder[saved] = base_draw(bounded, t, L, r)
            saved += 1

    return flat_theta[:pos], flat_count[:pos], offsets, remainder, k_trace

"""Independent reference computations used only by the tests.

Nothing here imports the code paths it is used to check.
"""

import math

import numpy as np


def auc_pairwise(scores, labels):
    """Exhaustive O(n^2) concordance count with half credit for ties."""
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    total = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                total += 1.0
            elif sp == sn:
                total += 0.5
    return total / (len(pos) * len(neg))


def etas_thinning(mu, k, alpha, c, p, mc, b, m_max, horizon, rng):
    """Ogata thinning for the temporal ETAS intensity (literal kernel coefficient k).

    Between events the intensity only decays, so its value just after the
    current time (counting an event accepted exactly there) bounds it until the next accepted event.
    """
    beta = b * math.log(10.0)
    times, mags = [], []

    def intensity(t, inclusive=False):
        lam = mu
        for ti, mi in zip(times, mags):
            if ti < t or (inclusive and ti == t):
                lam += k * math.exp(alpha * (mi - mc)) * (t - ti + c) ** (-p)
        return lam

    t = 0.0
    while True:
        bound = intensity(t, inclusive=True) + 1e-300
        t += rng.exponential(1.0 / bound)
        if t > horizon:
            break
        if rng.random() * bound <= intensity(t):
            u = rng.random()
            if m_max is None:
                m = mc - math.log1p(-u) / beta
            else:
                m = mc - math.log1p(-u * (1 - math.exp(-beta * (m_max - mc)))) / beta
            times.append(t)
            mags.append(m)
    return np.array(times), np.array(mags)


def rectangle_distance_bruteforce(point, center, along, down, length, width, n_side=1000):
    """Nearest of n_side**2 points sampled on the rectangle (edges included)."""
    u = np.linspace(-length / 2, length / 2, n_side)
    v = np.linspace(-width / 2, width / 2, n_side)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    surf = (
        np.asarray(center)[None, :]
        + uu.reshape(-1, 1) * np.asarray(along)[None, :]
        + vv.reshape(-1, 1) * np.asarray(down)[None, :]
    )
    return float(np.sqrt(np.min(np.sum((surf - np.asarray(point)) ** 2, axis=1))))


def central_difference_gradient(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def jacobi_eigenvalues_classic(mat, sweeps=100):
    """Classical Jacobi: repeatedly zero the largest off-diagonal entry."""
    a = np.array(mat, dtype=float)
    n = a.shape[0]
    for _ in range(sweeps * n * n):
        off = np.abs(np.triu(a, 1))
        i, j = np.unravel_index(np.argmax(off), off.shape)
        if off[i, j] <= 1e-300 or off[i, j] <= 1e-18 * np.max(np.abs(np.diag(a))):
            break
        angle = 0.5 * math.atan2(2 * a[i, j], a[j, j] - a[i, i])
        c, s = math.cos(angle), math.sin(angle)
        g = np.eye(n)
        g[i, i] = g[j, j] = c
        g[i, j] = s
        g[j, i] = -s
        a = g.T @ a @ g
    return np.sort(np.diag(a))[::-1]

"""Independent reference computations used to check the package.

Nothing here imports the code under test; each oracle is a slow, direct
computation from the defining formula.
"""
from __future__ import annotations

import itertools
import math

import mpmath
import numpy as np


def power_log_phi(c1, q, c2, eps):
    eps = np.asarray(eps, dtype=float)
    return c1 * eps ** (-q) * np.log(math.e + c2 / eps)


def power_log_phi_mp(c1, q, c2, eps, dps=50):
    with mpmath.workdps(dps):
        eps = mpmath.mpf(eps)
        return float(mpmath.mpf(c1) * eps ** (-mpmath.mpf(q)) * mpmath.log(mpmath.e + mpmath.mpf(c2) / eps))


def grid_conjugate(phi, u, lo=1e-8, hi=1e8, points=100_000, zooms=2):
    """Brute-force argmin of u*eps + phi(eps) on a log grid, refined around the best point.

    `phi` takes a numpy array. Returns (eps_min, phi_star).
    """
    a, b = math.log(lo), math.log(hi)
    best_y = None
    for _ in range(zooms + 1):
        ys = np.linspace(a, b, points)
        eps = np.exp(ys)
        vals = u * eps + phi(eps)
        i = int(np.argmin(vals))
        best_y = ys[i]
        step = ys[1] - ys[0]
        a, b = max(math.log(lo), best_y - 2 * step), min(math.log(hi), best_y + 2 * step)
    eps = math.exp(best_y)
    return eps, float(u * eps + phi(np.array([eps]))[0])


def brute_weighted_median(values, weights):
    """Smallest minimizer of sum_k w_k |x - v_k| by evaluating every breakpoint."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    cand = np.unique(values)
    obj = np.array([weights @ np.abs(x - values) for x in cand])
    best = obj.min()
    return float(cand[np.flatnonzero(obj <= best * (1 + 1e-12) + 1e-15)[0]]), float(best)


def brute_l1_opt(A, b, weights=None):
    """Exact weighted l1 regression optimum by enumerating every d-row vertex."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    w = np.ones(len(b)) if weights is None else np.asarray(weights, dtype=float)
    t, d = A.shape
    best, arg = math.inf, None
    for rows in itertools.combinations(range(t), d):
        sub = A[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        theta = np.linalg.solve(sub, b[list(rows)])
        val = float(w @ np.abs(A @ theta - b))
        if val < best:
            best, arg = val, theta
    return arg, best


def interval_tv_numeric(B, Bp, eps, points=2_000_001):
    """Half L1 distance between two uniform densities by midpoint integration."""
    lo, hi = min(B, Bp), max((1 + eps) * B, (1 + eps) * Bp)
    x = np.linspace(lo, hi, points)
    mid = 0.5 * (x[1:] + x[:-1])
    dx = x[1] - x[0]
    f = np.where((mid >= B) & (mid <= (1 + eps) * B), 1 / (eps * B), 0.0)
    g = np.where((mid >= Bp) & (mid <= (1 + eps) * Bp), 1 / (eps * Bp), 0.0)
    return 0.5 * float(np.abs(f - g).sum() * dx)


def joint_tv(P, Q):
    """Exact TV of two joint tables over the same finite product space."""
    return 0.5 * float(np.abs(np.asarray(P) - np.asarray(Q)).sum())


def brute_min_cut_uv(g, n, u, v):
    """min g(S) over all S of the full ground set with u in S and v not in S."""
    best = math.inf
    for S in range(1 << n):
        if S >> u & 1 and not S >> v & 1:
            best = min(best, g(S))
    return best


def brute_submodular(f, n):
    for S in range(1 << n):
        for R in range(1 << n):
            if f(S) + f(R) < f(S | R) + f(S & R) - 1e-12:
                return False
    return True


def reciprocal_phi(eps):
    """phi(eps) = 1/eps, importable as a custom trade-off for CLI tests."""
    return 1.0 / eps

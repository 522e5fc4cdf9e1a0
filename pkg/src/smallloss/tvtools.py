"""Total-variation distances on finite supports and uniform intervals."""
from __future__ import annotations

from typing import Sequence

import numpy as np


def _as_dist(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12 * max(1, p.size):
        raise ValueError("not a probability vector")
    return p


def tv_discrete(p, q) -> float:
    p, q = _as_dist(p), _as_dist(q)
    if p.shape != q.shape:
        raise ValueError(f"support sizes differ: {p.size} vs {q.size}")
    return 0.5 * float(np.abs(p - q).sum())


def tv_uniform_intervals(B: float, Bp: float, eps: float) -> tuple[float, float]:
    """Exact TV between Unif[B,(1+eps)B] and Unif[Bp,(1+eps)Bp], and the ratio bound."""
    if not (B > 0 and Bp > 0 and eps > 0):
        raise ValueError("B, Bp and eps must be positive")
    overlap = max(0.0, min((1 + eps) * B, (1 + eps) * Bp) - max(B, Bp))
    # the overlap carries the smaller of the two densities, 1 / (eps * max(B, Bp))
    exact = 1.0 - overlap / (eps * max(B, Bp))
    bound = min(1.0, (1 + eps) / eps * abs(1 - Bp / B))
    return min(max(exact, 0.0), 1.0), bound


def tv_bernoulli_perturbed(p: float, q: float, eps: float) -> float:
    """Exact TV between the keep/weight laws of one edge under probabilities p and q.

    Each law puts mass 1-p on "dropped" and mass p on a kept edge whose
    perturbed probability is uniform on [p, (1+eps/2) p]; both kept densities
    equal 2/eps on their intervals.
    """
    if not (0 <= p and 0 <= q and eps > 0):
        raise ValueError("need p, q >= 0 and eps > 0")
    ip = (p, (1 + eps / 2) * p)
    iq = (q, (1 + eps / 2) * q)
    overlap = max(0.0, min(ip[1], iq[1]) - max(ip[0], iq[0]))
    sym_diff = (ip[1] - ip[0]) + (iq[1] - iq[0]) - 2 * overlap
    return 0.5 * abs(p - q) + 0.5 * (2.0 / eps) * sym_diff


def tv_product_bound(tvs: Sequence[float]) -> float:
    tvs = np.asarray(tvs, dtype=float)
    if np.any((tvs < 0) | (tvs > 1)):
        raise ValueError("TV entries must lie in [0, 1]")
    return min(1.0, float(tvs.sum()))


def tv_conditional_bound(tv_marginal: float, diag_masses: Sequence[float], tv_conditionals: Sequence[float]) -> float:
    masses = np.asarray(diag_masses, dtype=float)
    conds = np.asarray(tv_conditionals, dtype=float)
    if masses.shape != conds.shape:
        raise ValueError("masses and conditional TVs are misaligned")
    for arr in (masses, conds, np.asarray([tv_marginal])):
        if np.any((arr < 0) | (arr > 1)):
            raise ValueError("entries must lie in [0, 1]")
    return min(1.0, tv_marginal + float(masses @ conds))


def maximal_coupling(p, q) -> np.ndarray:
    """Joint matrix with marginals p, q and Pr[X != Y] = tv_discrete(p, q)."""
    p, q = _as_dist(p), _as_dist(q)
    common = np.minimum(p, q)
    joint = np.diag(common)
    tv = 1.0 - common.sum()
    if tv > 0:
        joint += np.outer(p - common, q - common) / tv
    return joint


def product_dist(*dists) -> np.ndarray:
    out = np.ones(1)
    for d in dists:
        out = np.kron(out, _as_dist(d))
    return out

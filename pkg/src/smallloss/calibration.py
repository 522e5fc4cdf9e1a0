"""Desk calibration of the sample-size constants c_M and c_m.

Each constant is the smallest power of two whose success rate on a fixed
reference family reaches the threshold.  Candidates are scanned upwards with
the same trial seeds, so a stricter threshold can only move the answer up.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .engine import derive_rng
from .instances import random_directed_cut_hypergraph
from .lewis_l1 import _sample_weights, exact_l1_opt, l1_objective, l1_solve, lewis_weights
from .sparsify import EdgeTables, importance_scores, sample_sparsifier
from .submodular import all_masks, cut_values

CANDIDATE_EXPONENTS = range(-8, 9)

C_M_FAMILY = {"n": 5, "edges": 200, "eps": 0.5, "delta": 0.05, "trials": 400, "threshold": 0.95}
C_m_FAMILY = {"t": 200, "d": 3, "eps": 0.5, "delta": 0.05, "trials": 400, "threshold": 0.95}


@dataclass
class CalibrationReport:
    target: str
    constant: float
    rates: dict = field(default_factory=dict)
    family: dict = field(default_factory=dict)
    seed: int = 0

    def to_json(self) -> dict:
        return {"target": self.target, "constant": self.constant, "seed": self.seed,
                "family": self.family, "rates": {str(k): v for k, v in self.rates.items()}}


def sparsifier_success_rate(c_M: float, n: int = 5, edges: int = 200, eps: float = 0.5, delta: float = 0.05,
                            trials: int = 400, seed: int = 0) -> float:
    """Fraction of trials whose perturbed sparsifier is within (1 +- eps) on every cut."""
    masks = all_masks(n)
    cache = EdgeTables()
    ok = 0
    for k in range(trials):
        rng = derive_rng(seed, "calibrate-c_M", k)
        H = random_directed_cut_hypergraph(n, edges, rng)
        exact = cut_values(H, masks)
        scores = importance_scores(H, eps, delta, c_M, cache=cache)
        out = sample_sparsifier(H, scores, eps, rng)
        approx = np.zeros(masks.size)
        for i, w in zip(out.kept, out.weights):
            approx += w * H.edges[i].values(masks)
        if np.all(approx >= (1 - eps) * exact - 1e-12) and np.all(approx <= (1 + eps) * exact + 1e-12):
            ok += 1
    return ok / trials


def reference_regression(t: int, d: int, rng: np.random.Generator, noise: float = 0.1):
    """Gaussian design, Gaussian truth, Laplace noise: a low-noise family where the objective ratio is informative."""
    A = rng.standard_normal((t, d))
    b = A @ rng.standard_normal(d) + noise * rng.laplace(size=t)
    return A, b


def l1_success_rate(c_m: float, t: int = 200, d: int = 3, eps: float = 0.5, delta: float = 0.05,
                    trials: int = 400, seed: int = 0) -> float:
    """Fraction of trials where the sampled solve is within (1 + eps/2) of the optimum."""
    m = max(1, math.ceil(c_m * d / eps ** 2 * math.log(d / (eps * delta))))
    ok = 0
    for k in range(trials):
        rng = derive_rng(seed, "calibrate-c_m", k)
        A, b = reference_regression(t, d, rng)
        _, opt = exact_l1_opt(A, b) if d <= 2 else (None, l1_objective(A, b, l1_solve(A, b)))
        p = lewis_weights(A).p
        theta = l1_solve(A, b, _sample_weights(p, m, eps, rng))
        if l1_objective(A, b, theta) <= (1 + eps / 2) * opt + 1e-12:
            ok += 1
    return ok / trials


def _scan(rate_fn, threshold: float) -> tuple[float, dict]:
    rates = {}
    for e in CANDIDATE_EXPONENTS:
        c = 2.0 ** e
        rates[c] = rate_fn(c)
        if rates[c] >= threshold:
            return c, rates
    raise RuntimeError(f"no candidate reached success rate {threshold}")


def calibrate_c_M(seed: int = 0, threshold: float = C_M_FAMILY["threshold"], trials: int = C_M_FAMILY["trials"]):
    fam = dict(C_M_FAMILY, threshold=threshold, trials=trials)
    c, rates = _scan(lambda c: sparsifier_success_rate(c, fam["n"], fam["edges"], fam["eps"], fam["delta"],
                                                       trials, seed), threshold)
    return CalibrationReport("c_M", c, rates, fam, seed)


def calibrate_c_m(seed: int = 0, threshold: float = C_m_FAMILY["threshold"], trials: int = C_m_FAMILY["trials"]):
    fam = dict(C_m_FAMILY, threshold=threshold, trials=trials)
    c, rates = _scan(lambda c: l1_success_rate(c, fam["t"], fam["d"], fam["eps"], fam["delta"], trials, seed),
                     threshold)
    return CalibrationReport("c_m", c, rates, fam, seed)

"""Importance-sampling cut sparsifier with perturbed weights, and the offline
submodular-minimization oracle built on it."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .conjugate import PowerLog
from .constants import C_M
from .submodular import MAX_N, CapacityError, SetFunction, SubmodularHypergraph, all_masks
from .tvtools import tv_bernoulli_perturbed


@dataclass
class ImportanceScores:
    rho: np.ndarray
    rho_full: np.ndarray  # g_e(e) / sum_f g_f(f)
    rho_empty: np.ndarray  # g_e(empty) / sum_f g_f(empty)
    s: np.ndarray
    p: np.ndarray
    M: float


@dataclass
class SparsifierOutput:
    kept: np.ndarray
    weights: np.ndarray
    base_weights: np.ndarray  # 1/p_e for the kept edges, before perturbation
    eps: float
    M: float
    seed: Optional[int]

    def to_json(self) -> dict:
        return {
            "kept": self.kept.tolist(),
            "weights": self.weights.tolist(),
            "eps": self.eps,
            "M": self.M,
            "seed": self.seed,
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)


def sample_size_M(n: int, eps: float, delta: float, c_M: float = C_M) -> float:
    return c_M * eps ** -2 * (n + math.log(1.0 / delta))


def sparsifier_phi(n: int, T: int, c_M: float = C_M) -> PowerLog:
    """phi with phi(eps)/(2t) >= the analytic average-sensitivity cap 8 M (n^2+1) / (eps t)."""
    return PowerLog(16.0 * c_M * (n * n + 1) * (n + math.log(T)), 3.0, 0.0)


class EdgeTables:
    """Deletion-invariant per-edge quantities, cached per distinct function."""

    def __init__(self):
        self._cache: dict = {}

    def get(self, g: SetFunction) -> tuple[np.ndarray, float, float]:
        key = g.key()
        hit = self._cache.get(key)
        if hit is None:
            full = float(g(g.support))
            empty = float(g(0))
            hit = (g.cut_table().ravel(), full, empty)
            self._cache[key] = hit
        return hit


def _reciprocal(den: np.ndarray) -> np.ndarray:
    """1/den with zero denominators mapped to 0, so their ratios vanish."""
    out = np.zeros_like(den, dtype=float)
    np.divide(1.0, den, out=out, where=den > 0)
    return out


def scores_from_tables(G: np.ndarray, full: np.ndarray, empty: np.ndarray, M: float) -> ImportanceScores:
    """G is (|E|, n*n); full and empty hold g_e(e) and g_e(empty)."""
    rho = G @ _reciprocal(G.sum(axis=0))
    rho_full = full * _reciprocal(np.array(full.sum()))
    rho_empty = empty * _reciprocal(np.array(empty.sum()))
    s = rho + rho_full + rho_empty
    return ImportanceScores(rho, rho_full, rho_empty, s, np.minimum(1.0, M * s), M)


def _tables(H: SubmodularHypergraph, cache: Optional[EdgeTables] = None):
    cache = cache or EdgeTables()
    rows = [cache.get(g) for g in H.edges]
    if not rows:
        k = H.n * H.n
        return np.zeros((0, k)), np.zeros(0), np.zeros(0)
    G = np.stack([r[0] for r in rows])
    w = H.edge_weights()
    return G * w[:, None], np.array([r[1] for r in rows]) * w, np.array([r[2] for r in rows]) * w


def importance_scores(H: SubmodularHypergraph, eps: float, delta: float, c_M: float = C_M,
                      cache: Optional[EdgeTables] = None) -> ImportanceScores:
    if not H.edges:
        raise ValueError("importance scores need a nonempty hypergraph")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    G, full, empty = _tables(H, cache)
    return scores_from_tables(G, full, empty, sample_size_M(H.n, eps, delta, c_M))


def _draw(p: np.ndarray, eps: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    keep_u = rng.random(p.size)
    pert_u = rng.random(p.size)
    kept = np.flatnonzero(keep_u < p)
    p_tilde = p[kept] * (1.0 + 0.5 * eps * pert_u[kept])
    return kept, p_tilde


def sample_sparsifier(H: SubmodularHypergraph, scores: ImportanceScores, eps: float, seed) -> SparsifierOutput:
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    kept, p_tilde = _draw(scores.p, eps, rng)
    return SparsifierOutput(
        kept=kept,
        weights=1.0 / p_tilde,
        base_weights=1.0 / scores.p[kept],
        eps=eps,
        M=scores.M,
        seed=None if isinstance(seed, np.random.Generator) else seed,
    )


def sparsifier_hypergraph(H: SubmodularHypergraph, out: SparsifierOutput, perturbed: bool = True) -> SubmodularHypergraph:
    w = out.weights if perturbed else out.base_weights
    base = H.edge_weights()[out.kept]
    return SubmodularHypergraph(H.n, [H.edges[i] for i in out.kept], base * w)


def offline_submod_solve(losses: Sequence[SetFunction], eps: float, seed, T: Optional[int] = None,
                         c_M: float = C_M, masks: Optional[np.ndarray] = None) -> int:
    """Minimize the cut of a perturbed sparsifier of the prefix hypergraph (edges e_s = V)."""
    if not losses:
        raise ValueError("need at least one loss")
    n = losses[0].n
    if n > MAX_N:
        raise CapacityError(f"n={n} exceeds {MAX_N}")
    T = T or len(losses)
    delta = 1.0 / max(T, 2)
    H = SubmodularHypergraph(n, list(losses))
    scores = importance_scores(H, eps, delta, c_M)
    out = sample_sparsifier(H, scores, eps, seed)
    if masks is None:
        masks = all_masks(n)
    if out.kept.size == 0:
        return int(masks[0])
    vals = np.stack([losses[i].values(masks) for i in out.kept])
    cut = out.weights @ vals
    return int(masks[int(np.argmin(cut))])


@dataclass
class SensitivityReport:
    per_edge: np.ndarray  # (4/eps) * sum_f |p_f(H) - p_f(H-e)|
    per_edge_tight: np.ndarray  # same sum with factor 1 + (2+eps)/eps
    per_edge_exact: np.ndarray  # sum_f of exact per-coordinate TV
    average: float
    cap: float
    score_shift: np.ndarray  # sum_{f != e} |s_f(H) - s_f(H-e)|
    own_score: np.ndarray  # s_e(H)

    def rows(self) -> list[dict]:
        return [
            {"edge": i, "bound": b, "bound_tight": bt, "exact_coordinate_sum": ex,
             "score_shift": ll, "own_score": lr}
            for i, (b, bt, ex, ll, lr) in enumerate(zip(self.per_edge, self.per_edge_tight, self.per_edge_exact,
                                                         self.score_shift, self.own_score))
        ]


def sensitivity_audit(H: SubmodularHypergraph, eps: float, M: float,
                      cache: Optional[EdgeTables] = None) -> SensitivityReport:
    m = len(H.edges)
    if m < 2:
        raise ValueError("sensitivity audit needs at least two edges")
    G, full, empty = _tables(H, cache)
    base = scores_from_tables(G, full, empty, M)
    diffs = np.empty(m)
    exact = np.empty(m)
    lhs = np.empty(m)
    for e in range(m):
        keep = np.arange(m) != e
        sub = scores_from_tables(G[keep], full[keep], empty[keep], M)
        p_del = np.zeros(m)
        p_del[keep] = sub.p
        s_del = np.zeros(m)
        s_del[keep] = sub.s
        diffs[e] = np.abs(base.p - p_del).sum()
        exact[e] = sum(tv_bernoulli_perturbed(a, b, eps) for a, b in zip(base.p, p_del))
        lhs[e] = np.abs(base.s - s_del)[keep].sum()
    per_edge = 4.0 / eps * diffs
    return SensitivityReport(
        per_edge=per_edge,
        per_edge_tight=(1.0 + (2.0 + eps) / eps) * diffs,
        per_edge_exact=exact,
        average=float(per_edge.mean()),
        cap=8.0 * M * (H.n ** 2 + 1) / (eps * m),
        score_shift=lhs,
        own_score=base.s.copy(),
    )


class SparsifierOracle:
    """Incremental version of offline_submod_solve for one engine run.

    The prefix passed to solve/exact_opt is expected to grow by appending; the
    cached state is rebuilt from scratch whenever that does not hold.
    """

    eps_cap = 1.0

    def __init__(self, n: int, T: int, c_M: float = C_M, masks: Optional[np.ndarray] = None):
        self.n = n
        self.T = T
        self.c_M = c_M
        self.delta = 1.0 / max(T, 2)
        self.masks = all_masks(n) if masks is None else np.asarray(masks, dtype=np.int64)
        self.phi = sparsifier_phi(n, T, c_M)
        self._tables = EdgeTables()
        self._values: dict = {}
        self._reset(T)

    @property
    def initial_decision(self) -> int:
        return int(self.masks[0])

    def _reset(self, capacity: int):
        k = self.n * self.n
        self._len = 0
        self._last = None
        self._G = np.zeros((capacity, k))
        self._full = np.zeros(capacity)
        self._empty = np.zeros(capacity)
        self._vals = np.zeros((capacity, len(self.masks)))
        self._cum = np.zeros(len(self.masks))

    def _value_row(self, g: SetFunction) -> np.ndarray:
        key = g.key()
        row = self._values.get(key)
        if row is None:
            row = g.values(self.masks)
            self._values[key] = row
        return row

    def _sync(self, prefix: Sequence[SetFunction]):
        t = len(prefix)
        if t < self._len or (self._len and prefix[self._len - 1] is not self._last):
            self._reset(max(self.T, t))
        if t > self._G.shape[0]:
            grow = max(t, 2 * self._G.shape[0])
            self._G = np.vstack([self._G, np.zeros((grow - self._G.shape[0], self._G.shape[1]))])
            self._full = np.concatenate([self._full, np.zeros(grow - self._full.size)])
            self._empty = np.concatenate([self._empty, np.zeros(grow - self._empty.size)])
            self._vals = np.vstack([self._vals, np.zeros((grow - self._vals.shape[0], self._vals.shape[1]))])
        for i in range(self._len, t):
            g = prefix[i]
            G, full, empty = self._tables.get(g)
            self._G[i] = G
            self._full[i] = full
            self._empty[i] = empty
            self._vals[i] = self._value_row(g)
            self._cum += self._vals[i]
        self._len = t
        self._last = prefix[t - 1] if t else None

    def scores(self, prefix: Sequence[SetFunction], eps: float) -> ImportanceScores:
        self._sync(prefix)
        t = self._len
        M = sample_size_M(self.n, eps, self.delta, self.c_M)
        return scores_from_tables(self._G[:t], self._full[:t], self._empty[:t], M)

    def solve(self, prefix: Sequence[SetFunction], eps: float, rng: np.random.Generator) -> int:
        if not 0 < eps <= 1:
            raise ValueError(f"eps must lie in (0, 1], got {eps}")
        sc = self.scores(prefix, eps)
        kept, p_tilde = _draw(sc.p, eps, rng)
        cut = (1.0 / p_tilde) @ self._vals[kept] if kept.size else np.zeros(len(self.masks))
        return int(self.masks[int(np.argmin(cut))])

    def exact_opt(self, prefix: Sequence[SetFunction]) -> tuple[int, float]:
        self._sync(prefix)
        i = int(np.argmin(self._cum))
        return int(self.masks[i]), float(self._cum[i])

    def describe(self) -> dict:
        return {"oracle": "sparsifier", "n": self.n, "T": self.T, "c_M": self.c_M}

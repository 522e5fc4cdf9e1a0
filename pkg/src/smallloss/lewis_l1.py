"""l1 Lewis weights, weighted l1 regression and the sampling-based l1 oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .conjugate import PowerLog
from .constants import C_m

PINV_RCOND = 1e-12


class LewisConvergenceError(RuntimeError):
    def __init__(self, message: str, w: np.ndarray, residual: float):
        super().__init__(message)
        self.w = w
        self.residual = residual


@dataclass
class LewisState:
    w: np.ndarray
    r: int
    p: np.ndarray
    iterations: int
    residual: float


def _quad_forms(A: np.ndarray, w: np.ndarray) -> np.ndarray:
    gram = A.T @ (A / w[:, None])
    inv = np.linalg.pinv(gram, rcond=PINV_RCOND, hermitian=True)
    return np.einsum("ij,jk,ik->i", A, inv, A)


def lewis_weights(A, tol: float = 1e-10, max_iter: int = 100) -> LewisState:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] < 1:
        raise ValueError("need at least one row")
    if np.any(np.abs(A).sum(axis=1) == 0):
        raise ValueError("zero rows are not allowed")
    w = np.ones(A.shape[0])
    damped = False
    prev_change = np.inf
    for it in range(1, max_iter + 1):
        target = np.sqrt(np.maximum(_quad_forms(A, w), 0.0))
        new = np.sqrt(w * target) if damped else target
        change = float(np.max(np.abs(new - w)))
        if not damped and change > prev_change:
            damped = True  # oscillation: fall back to half steps in log space
        prev_change = change
        w = new
        if change < tol:
            break
    else:
        residual = float(np.max(np.abs(w ** 2 - _quad_forms(A, w))))
        raise LewisConvergenceError(f"no convergence in {max_iter} iterations", w, residual)
    residual = float(np.max(np.abs(w ** 2 - _quad_forms(A, w))))
    r = int(np.linalg.matrix_rank(A))
    return LewisState(w=w, r=r, p=w / w.sum(), iterations=it, residual=residual)


def l1_objective(A, b, theta, weights=None) -> float:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    res = np.abs(A @ np.atleast_1d(theta) - np.asarray(b, dtype=float))
    return float(res.sum() if weights is None else np.asarray(weights, dtype=float) @ res)


def weighted_median(values, weights) -> float:
    """Smallest minimizer of sum_k w_k |x - v_k|."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order]
    cum = np.cumsum(w)
    k = int(np.searchsorted(cum, 0.5 * cum[-1] * (1 - 1e-12)))
    return float(v[min(k, v.size - 1)])


def _solve_1d(a: np.ndarray, b: np.ndarray, w: np.ndarray, box: Optional[float]) -> np.ndarray:
    # |a x - b| = |a| |x - b/a|
    theta = weighted_median(b / a, w * np.abs(a))
    if box is not None:
        theta = min(max(theta, -box), box)
    return np.array([theta])


def _polish(A, b, w, theta, box):
    """Snap an LP solution to an exact vertex through its tightest rows when that is no worse."""
    d = A.shape[1]
    res = np.abs(A @ theta - b)
    order = np.argsort(res, kind="stable")
    rows = []
    for i in order:
        trial = rows + [i]
        if np.linalg.matrix_rank(A[trial]) == len(trial):
            rows = trial
        if len(rows) == d:
            break
    if len(rows) < d:
        return theta
    cand = np.linalg.solve(A[rows], b[rows])
    if box is not None and np.any(np.abs(cand) > box):
        return theta
    return cand if w @ np.abs(A @ cand - b) <= w @ res else theta


def l1_solve(A, b, weights=None, box: Optional[float] = None) -> np.ndarray:
    """argmin_theta sum_k weights_k |<a_k, theta> - b_k|, optionally inside [-box, box]^d."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    w = np.ones(A.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be nonnegative and not all zero")
    live = w > 0
    A, b, w = A[live], b[live], w[live]
    t, d = A.shape
    if d == 1:
        nz = A[:, 0] != 0
        if not np.any(nz):
            return np.zeros(1)
        return _solve_1d(A[nz, 0], b[nz], w[nz], box)
    # restrict to the row space so rank-deficient prefixes give a minimum-norm-like answer
    _, sv, Vt = np.linalg.svd(A, full_matrices=False)
    rank = int(np.sum(sv > PINV_RCOND * sv[0])) if sv.size else 0
    if rank == 0:
        return np.zeros(d)
    if rank < d and box is None:
        basis = Vt[:rank].T
        z = l1_solve(A @ basis, b, w)
        return basis @ z
    # variables: theta (d, free or boxed), s (t, >= 0) with -s <= A theta - b <= s
    c = np.concatenate([np.zeros(d), w])
    eye = np.eye(t)
    A_ub = np.block([[A, -eye], [-A, -eye]])
    b_ub = np.concatenate([b, -b])
    bounds = [(-box, box) if box is not None else (None, None)] * d + [(0, None)] * t
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise RuntimeError(f"l1 regression LP failed: {res.message}")
    theta = res.x[:d]
    if box is not None:
        theta = np.clip(theta, -box, box)
    return _polish(A, b, w, theta, box)


def vertex_opt_2d(A, b, weights=None, box: Optional[float] = None) -> tuple[np.ndarray, float]:
    """Exact l1 optimum for d = 2 by enumerating all candidate vertices."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    w = np.ones(len(b)) if weights is None else np.asarray(weights, dtype=float)
    lines = [(A[i], b[i]) for i in range(len(b))]
    if box is not None:
        lines += [(np.array([1.0, 0.0]), s * box) for s in (-1, 1)]
        lines += [(np.array([0.0, 1.0]), s * box) for s in (-1, 1)]
    best, best_val = None, np.inf
    for (a1, b1), (a2, b2) in combinations(lines, 2):
        M = np.array([a1, a2])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, np.array([b1, b2]))
        if box is not None and np.any(np.abs(x) > box * (1 + 1e-12)):
            continue
        val = float(w @ np.abs(A @ x - b))
        if val < best_val:
            best, best_val = x, val
    if best is None:
        best = np.zeros(2)
        best_val = float(w @ np.abs(b))
    return best, best_val


def sample_count(d: int, eps: float, T: int, c_m: float = C_m) -> int:
    return max(1, math.ceil(c_m * d / eps ** 2 * math.log(d * T / eps)))


def lewis_phi(d: int, T: int, c_m: float = C_m) -> PowerLog:
    """phi(eps) = 16 m / eps written in power-log form, with m the oracle's sample count."""
    return PowerLog(16.0 * (c_m * d + 1.0), 3.0, float(d * T))


def _sample_weights(p: np.ndarray, m: int, eps: float, rng: np.random.Generator) -> np.ndarray:
    idx = rng.choice(p.size, size=m, p=p)
    pert = rng.random(m)
    p_tilde = p[idx] * (1.0 + 0.5 * eps * pert)
    weights = np.zeros(p.size)
    np.add.at(weights, idx, 1.0 / (m * p_tilde))
    return weights


def offline_l1_oracle(A, b, eps: float, seed, T: Optional[int] = None, c_m: float = C_m,
                      box: Optional[float] = None) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    t, d = A.shape
    m = sample_count(d, eps, T or t, c_m)
    p = lewis_weights(A).p
    return l1_solve(A, b, _sample_weights(p, m, eps, rng), box=box)


def exact_l1_opt(A, b, box: Optional[float] = None) -> tuple[np.ndarray, float]:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    d = A.shape[1]
    if d == 1:
        theta = _solve_1d(A[:, 0], b, np.ones(len(b)), box)
    elif d == 2:
        theta, _ = vertex_opt_2d(A, b, box=box)
    else:
        theta = l1_solve(A, b, box=box)  # near-exact
    return theta, l1_objective(A, b, theta)


@dataclass
class L1SensitivityReport:
    per_row: np.ndarray  # ||p(A) - p(A^(-i))||_1
    identity: np.ndarray  # 2 w_i / r
    average: float
    monotone: bool
    tv_bound_average: float  # (4m/eps) * average


def l1_sensitivity_audit(A, eps: float = 0.5, T: Optional[int] = None, c_m: float = C_m,
                         mono_tol: float = 1e-8) -> L1SensitivityReport:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    t, d = A.shape
    if t < 2:
        raise ValueError("audit needs at least two rows")
    base = lewis_weights(A)
    per_row = np.empty(t)
    monotone = True
    for i in range(t):
        keep = np.arange(t) != i
        sub = lewis_weights(A[keep])
        p_del = np.zeros(t)
        p_del[keep] = sub.p
        per_row[i] = np.abs(base.p - p_del).sum()
        if np.any(base.w[keep] > sub.w + mono_tol):
            monotone = False
    m = sample_count(d, eps, T or t, c_m)
    avg = float(per_row.mean())
    return L1SensitivityReport(per_row, 2 * base.w / base.r, avg, monotone, 4 * m / eps * avg)


class LewisOracle:
    """Engine oracle for online l1 regression on a box [-box, box]^d."""

    eps_cap = 1.0

    def __init__(self, d: int, T: int, c_m: float = C_m, box: float = 1.0):
        self.d = d
        self.T = T
        self.c_m = c_m
        self.box = box
        self.phi = lewis_phi(d, T, c_m)

    @property
    def initial_decision(self) -> np.ndarray:
        return np.zeros(self.d)

    @staticmethod
    def _stack(prefix):
        A = np.array([x[0] for x in prefix], dtype=float).reshape(len(prefix), -1)
        b = np.array([x[1] for x in prefix], dtype=float)
        return A, b

    def solve(self, prefix, eps: float, rng: np.random.Generator) -> np.ndarray:
        A, b = self._stack(prefix)
        return offline_l1_oracle(A, b, eps, rng, T=self.T, c_m=self.c_m, box=self.box)

    def exact_opt(self, prefix) -> tuple[np.ndarray, float]:
        A, b = self._stack(prefix)
        return exact_l1_opt(A, b, box=self.box)

    def describe(self) -> dict:
        return {"oracle": "lewis_l1", "d": self.d, "T": self.T, "c_m": self.c_m, "box": self.box}

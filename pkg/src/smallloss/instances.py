"""Instance generators shared by experiments, calibration and tests."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .engine import LossInstance
from .submodular import (
    ConcaveOfCardinality,
    DirectedCut,
    Modular,
    SubmodularHypergraph,
    TableFunction,
    all_masks,
    mask_of,
)


def set_loss(S, f) -> float:
    return f(S)


def abs_loss(theta, x) -> float:
    a, b = x
    return abs(float(np.dot(a, theta)) - b)


def coordinate_loss(n: int, i: int, in_target: bool, agree: bool) -> Modular:
    """1[(i in S) != in_target] if agree, else 1[(i in S) == in_target]."""
    w = [0.0] * n
    charge_inside = in_target != agree  # loss is 1 exactly when i is in S
    w[i] = 1.0 if charge_inside else -1.0
    return Modular(n, tuple(w), 0.0 if charge_inside else 1.0)


def planted_instance(n: int, T: int, k: int, seed: int) -> tuple[LossInstance, int]:
    """T coordinate losses where a hidden set pays exactly k.

    k rounds charge the hidden set on one coordinate and T-k rounds charge any
    deviation from it; coordinates are dealt round-robin inside each group so
    every coordinate keeps a majority of agreeing rounds when 2k <= T - 2n.
    """
    if k < 0 or 2 * k > T - 2 * n:
        raise ValueError("need 0 <= k and 2k <= T - 2n")
    rng = np.random.default_rng(seed)
    target = int(rng.integers(0, 1 << n))
    offset = int(rng.integers(0, n))
    losses = []
    for j in range(T - k):
        i = (j + offset) % n
        losses.append(coordinate_loss(n, i, bool(target >> i & 1), agree=True))
    for j in range(k):
        i = (j + offset) % n
        losses.append(coordinate_loss(n, i, bool(target >> i & 1), agree=False))
    return LossInstance(losses, set_loss, decision_space=f"subsets({n})"), target


def random_submodular_loss(n: int, rng: np.random.Generator, terms: int = 3) -> TableFunction:
    """Random nonnegative combination of cut, cardinality and modular pieces, scaled into [0, 1]."""
    masks = all_masks(n)
    vals = np.zeros(masks.size)
    for _ in range(terms):
        kind = rng.integers(0, 3)
        if kind == 0:
            u, v = rng.choice(n, size=2, replace=False)
            piece = DirectedCut(n, int(u), int(v))
        elif kind == 1:
            size = int(rng.integers(1, n + 1))
            sup = mask_of(rng.choice(n, size=size, replace=False))
            # concave in cardinality: min(c, |S|) pattern or symmetric tent
            if rng.random() < 0.5:
                cap = int(rng.integers(1, size + 1))
                weights = tuple(float(min(c, cap)) for c in range(size + 1))
            else:
                weights = tuple(float(min(c, size - c)) for c in range(size + 1))
            piece = ConcaveOfCardinality(n, sup, weights)
        else:
            w = rng.random(n)
            signs = rng.random(n) < 0.5
            w = np.where(signs, -w, w)
            piece = Modular(n, tuple(w.tolist()), float(-w[w < 0].sum()))
        vals += rng.random() * piece.values(masks)
    vals = np.maximum(vals, 0.0)  # modular pieces can round to -1e-17
    top = vals.max()
    if top > 0:
        vals = vals / top
    return TableFunction(n, (1 << n) - 1, vals)


def random_submodular_instance(n: int, T: int, seed: int, terms: int = 3) -> LossInstance:
    rng = np.random.default_rng(seed)
    return LossInstance([random_submodular_loss(n, rng, terms) for _ in range(T)], set_loss,
                        decision_space=f"subsets({n})")


def random_directed_cut_hypergraph(n: int, m: int, rng: np.random.Generator) -> SubmodularHypergraph:
    edges = []
    for _ in range(m):
        u, v = rng.choice(n, size=2, replace=False)
        edges.append(DirectedCut(n, int(u), int(v)))
    return SubmodularHypergraph(n, edges)


def random_hypergraph(n: int, m: int, rng: np.random.Generator) -> SubmodularHypergraph:
    """Mixed hyperedges on random supports with random submodular splitting functions."""
    edges = []
    for _ in range(m):
        kind = rng.integers(0, 3)
        if kind == 0:
            u, v = rng.choice(n, size=2, replace=False)
            edges.append(DirectedCut(n, int(u), int(v), float(rng.uniform(0.1, 1.0))))
        elif kind == 1:
            size = int(rng.integers(2, n + 1))
            sup = mask_of(rng.choice(n, size=size, replace=False))
            edges.append(ConcaveOfCardinality(n, sup, tuple(float(min(c, size - c)) for c in range(size + 1))))
        else:
            edges.append(random_submodular_loss(n, rng, terms=2))
    return SubmodularHypergraph(n, edges)


def regression_data(t: int, d: int, rng: np.random.Generator, box: float = 1.0,
                    noise: float = 0.25) -> tuple[np.ndarray, np.ndarray]:
    """Rows with ||a||_1 <= 1/4 and |b| <= 1/2, so |<a,theta> - b| <= 1 on [-box, box]^d for box <= 2."""
    A = rng.standard_normal((t, d))
    A /= 4 * np.maximum(np.abs(A).sum(axis=1, keepdims=True), 1e-12)
    theta0 = rng.uniform(-box, box, size=d) * 0.5
    b = A @ theta0 + noise * rng.laplace(size=t)
    b = np.clip(b, -0.5, 0.5)
    return A, b


def regression_instance(t: int, d: int, seed: int, box: float = 1.0) -> LossInstance:
    A, b = regression_data(t, d, np.random.default_rng(seed), box)
    return LossInstance([(A[i], float(b[i])) for i in range(t)], abs_loss, decision_space=f"box({d})")


def zero_instance(n: int, T: int) -> LossInstance:
    zero = Modular(n, tuple([0.0] * n), 0.0)
    return LossInstance([zero] * T, set_loss, decision_space=f"subsets({n})")

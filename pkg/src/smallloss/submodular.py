"""Set functions on bitmasks, submodular hypergraphs and brute-force minimization.

Elements of the ground set are 0-based bit positions; a subset is an int mask.
Every splitting function depends on S only through S & support.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

MAX_N = 20
EXHAUSTIVE_N = 12

log = logging.getLogger(__name__)


class CapacityError(ValueError):
    """Ground set too large for enumeration."""


def all_masks(n: int) -> np.ndarray:
    if n > MAX_N:
        raise CapacityError(f"n={n} exceeds enumeration limit {MAX_N}")
    return np.arange(1 << n, dtype=np.int64)


def bits_of(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def mask_of(elements: Iterable[int]) -> int:
    m = 0
    for i in elements:
        m |= 1 << int(i)
    return m


def local_index(masks: np.ndarray, support: Sequence[int]) -> np.ndarray:
    """Map global masks to indices into a table over subsets of `support`."""
    masks = np.asarray(masks, dtype=np.int64)
    idx = np.zeros_like(masks)
    for k, e in enumerate(support):
        idx |= ((masks >> e) & 1) << k
    return idx


def embed(local: np.ndarray, support: Sequence[int]) -> np.ndarray:
    """Inverse of local_index on subsets of the support."""
    local = np.asarray(local, dtype=np.int64)
    out = np.zeros_like(local)
    for k, e in enumerate(support):
        out |= ((local >> k) & 1) << e
    return out


class SetFunction:
    """A nonnegative set function g(S & support) on an n-element ground set."""

    n: int
    support: int

    def values(self, masks: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, S: int) -> float:
        return float(self.values(np.array([S], dtype=np.int64))[0])

    def key(self) -> tuple:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    @property
    def support_elems(self) -> list[int]:
        return bits_of(self.support)

    def local_table(self) -> np.ndarray:
        sup = self.support_elems
        if len(sup) > MAX_N:
            raise CapacityError("support too large to tabulate")
        return self.values(embed(np.arange(1 << len(sup)), sup))

    def cut_table(self) -> np.ndarray:
        """n x n array of g_{u->v}; the diagonal is 0 by convention."""
        sup = self.support_elems
        table = self.local_table()
        local = np.arange(table.size, dtype=np.int64)
        pos = {e: k for k, e in enumerate(sup)}
        overall = table.min()
        with_set = {}
        without = {}
        for e, k in pos.items():
            bit = (local >> k) & 1
            with_set[e] = table[bit == 1].min()
            without[e] = table[bit == 0].min()
        out = np.empty((self.n, self.n))
        for u in range(self.n):
            for v in range(self.n):
                if u == v:
                    out[u, v] = 0.0
                elif u in pos and v in pos:
                    sel = (((local >> pos[u]) & 1) == 1) & (((local >> pos[v]) & 1) == 0)
                    out[u, v] = table[sel].min()
                elif u in pos:
                    out[u, v] = with_set[u]
                elif v in pos:
                    out[u, v] = without[v]
                else:
                    out[u, v] = overall
        return out


@dataclass(frozen=True, eq=False)
class TableFunction(SetFunction):
    """Explicit value table indexed by subsets of the support (local bit order)."""

    n: int
    support: int
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        k = bin(self.support).count("1")
        table = np.asarray(self.table, dtype=float)
        if table.shape != (1 << k,):
            raise ValueError(f"table needs {1 << k} entries, got {table.shape}")
        if np.any(table < 0):
            raise ValueError("splitting functions must be nonnegative")
        object.__setattr__(self, "table", table)

    def values(self, masks):
        return self.table[local_index(masks, self.support_elems)]

    def local_table(self):
        return self.table

    def key(self):
        return ("table", self.n, self.support, self.table.tobytes())

    def to_json(self):
        return {"family": "table", "support": self.support_elems, "values": self.table.tolist()}


@dataclass(frozen=True, eq=False)
class DirectedCut(SetFunction):
    """g(S) = 1[u in S, v not in S] scaled by `scale`."""

    n: int
    u: int
    v: int
    scale: float = 1.0

    def __post_init__(self):
        if self.u == self.v:
            raise ValueError("directed cut needs distinct endpoints")

    @property
    def support(self):
        return (1 << self.u) | (1 << self.v)

    def values(self, masks):
        masks = np.asarray(masks, dtype=np.int64)
        hit = ((masks >> self.u) & 1) & (1 - ((masks >> self.v) & 1))
        return self.scale * hit.astype(float)

    def cut_table(self):
        out = np.zeros((self.n, self.n))
        out[self.u, self.v] = self.scale
        return out

    def key(self):
        return ("dcut", self.n, self.u, self.v, self.scale)

    def to_json(self):
        return {"family": "directed_cut", "u": self.u, "v": self.v, "scale": self.scale}


@dataclass(frozen=True, eq=False)
class ConcaveOfCardinality(SetFunction):
    """g(S) = weights[|S & support|]."""

    n: int
    support: int
    weights: tuple

    def __post_init__(self):
        k = bin(self.support).count("1")
        if len(self.weights) != k + 1:
            raise ValueError(f"need {k + 1} cardinality weights")
        if min(self.weights) < 0:
            raise ValueError("splitting functions must be nonnegative")

    def values(self, masks):
        masks = np.asarray(masks, dtype=np.int64)
        return np.asarray(self.weights, dtype=float)[np.bitwise_count(masks & self.support)]

    def key(self):
        return ("card", self.n, self.support, tuple(self.weights))

    def to_json(self):
        return {"family": "concave_of_cardinality", "support": self.support_elems, "weights": list(self.weights)}


@dataclass(frozen=True, eq=False)
class Modular(SetFunction):
    """g(S) = offset + sum_{i in S} weights[i]."""

    n: int
    weights: tuple
    offset: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.n,):
            raise ValueError("need one weight per element")
        low = self.offset + w[w < 0].sum()
        if low < -1e-12:
            raise ValueError("modular function takes negative values")

    @property
    def support(self):
        return mask_of(i for i, w in enumerate(self.weights) if w != 0)

    def values(self, masks):
        masks = np.asarray(masks, dtype=np.int64)
        out = np.full(masks.shape, float(self.offset))
        for i, w in enumerate(self.weights):
            if w != 0:
                out += w * ((masks >> i) & 1)
        return out

    def key(self):
        return ("modular", self.n, tuple(self.weights), self.offset)

    def to_json(self):
        return {"family": "modular", "weights": list(self.weights), "offset": self.offset}


@dataclass
class SubmodularHypergraph:
    n: int
    edges: list
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.n > MAX_N:
            raise CapacityError(f"n={self.n} exceeds {MAX_N}")
        for g in self.edges:
            if g.n != self.n:
                raise ValueError("edge defined on a different ground set")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)

    def edge_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(len(self.edges))
        return self.weights

    def without(self, index: int) -> "SubmodularHypergraph":
        keep = [g for i, g in enumerate(self.edges) if i != index]
        w = None if self.weights is None else np.delete(self.weights, index)
        return SubmodularHypergraph(self.n, keep, w)


def cut_value(H: SubmodularHypergraph, S: int) -> float:
    return float(sum(w * g(S) for w, g in zip(H.edge_weights(), H.edges)))


def cut_values(H: SubmodularHypergraph, masks: Optional[np.ndarray] = None) -> np.ndarray:
    if masks is None:
        masks = all_masks(H.n)
    out = np.zeros(len(masks))
    for w, g in zip(H.edge_weights(), H.edges):
        out += w * g.values(masks)
    return out


def min_cut_uv(g: Union[SetFunction, Callable[[int], float]], e: Union[int, Iterable[int]], u: int, v: int) -> float:
    """min over S with u in S, v not in S of g(S & e), by enumerating S & e."""
    support = e if isinstance(e, (int, np.integer)) else mask_of(e)
    sup = bits_of(int(support))
    if len(sup) > MAX_N:
        raise CapacityError("support too large to enumerate")
    if u == v:
        return 0.0
    best = np.inf
    for local in range(1 << len(sup)):
        S = int(embed(np.array([local]), sup)[0])
        if (u in sup and not S >> u & 1) or (v in sup and S >> v & 1):
            continue
        best = min(best, float(g(S)))
    return best


def _values_over(f, masks: np.ndarray) -> np.ndarray:
    if hasattr(f, "values"):
        return np.asarray(f.values(masks), dtype=float)
    return np.array([f(int(S)) for S in masks], dtype=float)


def brute_min(f, n: int, masks: Optional[np.ndarray] = None) -> tuple[int, float]:
    """Exact minimizer over all subsets (or the given ascending masks); ties to the smallest mask."""
    if n > MAX_N:
        raise CapacityError(f"n={n} exceeds enumeration limit {MAX_N}")
    if masks is None:
        masks = all_masks(n)
    vals = _values_over(f, masks)
    i = int(np.argmin(vals))
    return int(masks[i]), float(vals[i])


def is_submodular(f, n: int, samples: int = 100_000, seed: int = 0, tol: float = 1e-12) -> bool:
    """Lattice inequality over all pairs for n <= 12, else over sampled pairs."""
    if n <= EXHAUSTIVE_N:
        masks = all_masks(n)
        vals = _values_over(f, masks)
        for start in range(0, masks.size, 256):
            a = masks[start:start + 256, None]
            lhs = vals[a] + vals[None, :]
            rhs = vals[a | masks[None, :]] + vals[a & masks[None, :]]
            if np.any(lhs < rhs - tol):
                return False
        return True
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 1 << n, size=samples, dtype=np.int64)
    b = rng.integers(0, 1 << n, size=samples, dtype=np.int64)
    ok = bool(np.all(_values_over(f, a) + _values_over(f, b) >= _values_over(f, a | b) + _values_over(f, a & b) - tol))
    if ok:
        log.info("submodularity not falsified on %d sampled pairs", samples)
    return ok


def function_from_json(obj: dict, n: int) -> SetFunction:
    family = obj.get("family", "table")
    if family == "table":
        return TableFunction(n, mask_of(obj["support"]), np.asarray(obj["values"], dtype=float))
    if family == "directed_cut":
        return DirectedCut(n, int(obj["u"]), int(obj["v"]), float(obj.get("scale", 1.0)))
    if family == "concave_of_cardinality":
        support = mask_of(obj.get("support", range(n)))
        return ConcaveOfCardinality(n, support, tuple(float(w) for w in obj["weights"]))
    if family == "modular":
        return Modular(n, tuple(float(w) for w in obj["weights"]), float(obj.get("offset", 0.0)))
    raise ValueError(f"unknown splitting-function family {family!r}")


def hypergraph_from_json(obj: dict) -> SubmodularHypergraph:
    n = int(obj["n"])
    edges = [function_from_json(e, n) for e in obj["edges"]]
    return SubmodularHypergraph(n, edges, obj.get("weights"))


def hypergraph_to_json(H: SubmodularHypergraph) -> dict:
    out = {"n": H.n, "edges": [g.to_json() for g in H.edges]}
    if H.weights is not None:
        out["weights"] = H.weights.tolist()
    return out


def load_hypergraph(path) -> SubmodularHypergraph:
    with open(path) as fh:
        return hypergraph_from_json(json.load(fh))

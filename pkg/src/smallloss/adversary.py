"""Lower-bound instances: Rademacher losses and the mistake-tree adversary."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .engine import RegretTrace
from .submodular import MAX_N, CapacityError, DirectedCut, Modular

U0, U1 = 0, 1
ENUMERATION_T = 18


@dataclass
class RademacherInstance:
    n: int
    sigma: np.ndarray
    losses: list
    opt_T: float

    @property
    def T(self) -> int:
        return self.sigma.size


def rademacher_losses(n: int, sigma) -> list:
    """Loss k (0-based) sits on element k mod n: 1[element in S] if sigma=+1, else 1[element not in S]."""
    losses = []
    for k, s in enumerate(np.asarray(sigma, dtype=int)):
        w = [0.0] * n
        w[k % n] = float(s)
        losses.append(Modular(n, tuple(w), 0.5 * (1 - s)))
    return losses


def rademacher_opt(n: int, sigma) -> float:
    sigma = np.asarray(sigma, dtype=int)
    per_element = np.bincount(np.arange(sigma.size) % n, weights=sigma, minlength=n)
    return 0.5 * (sigma.size - np.abs(per_element).sum())


def rademacher_instance(n: int, T: int, seed: int) -> RademacherInstance:
    if n > T:
        raise ValueError("need n <= T")
    if n > MAX_N:
        raise CapacityError(f"n={n} exceeds {MAX_N}")
    sigma = np.random.default_rng(seed).choice(np.array([-1, 1]), size=T)
    return RademacherInstance(n, sigma, rademacher_losses(n, sigma), rademacher_opt(n, sigma))


def v_bit(t: int) -> int:
    """Bit position of v_t (t is 1-based)."""
    return t + 1


def mistake_losses(T: int, t: int) -> tuple[DirectedCut, DirectedCut]:
    """(f_t^0, f_t^1): 1[v_t in S, u1 not in S] and 1[u0 in S, v_t not in S]."""
    n = T + 2
    return DirectedCut(n, v_bit(t), U1), DirectedCut(n, U0, v_bit(t))


def theta_masks(T: int) -> np.ndarray:
    """All S with u0 in S and u1 not in S, ascending."""
    if T + 2 > MAX_N:
        raise CapacityError(f"T={T} too large to enumerate the decision set")
    rest = np.arange(1 << T, dtype=np.int64)
    return (rest << 2) | (1 << U0)


def in_theta(S: int) -> bool:
    return bool(S >> U0 & 1) and not (S >> U1 & 1)


class ProtocolViolation(RuntimeError):
    pass


@dataclass
class MistakeTreeResult:
    trace: RegretTrace
    labels: list = field(default_factory=list)
    witness: int = 0
    witness_loss: float = 0.0
    enumerated_opt: Optional[float] = None


class ConstantLearner:
    """Always predicts `label` on every v_t."""

    def __init__(self, T: int, label: int):
        self.S = (1 << U0) | (sum(1 << v_bit(t) for t in range(1, T + 1)) if label else 0)

    def predict(self):
        return self.S

    def update(self, x, solve_next: bool = True) -> bool:
        return False


def mistake_tree_run(learner, T: int, enumerate_opt: Optional[bool] = None) -> MistakeTreeResult:
    """Adaptive adversary: y_t is the opposite of the learner's prediction on v_t."""
    if T < 1:
        raise ValueError("need T >= 1")
    if enumerate_opt is None:
        enumerate_opt = T <= ENUMERATION_T
    trace = RegretTrace(seed=0, model="adaptive")
    labels = []
    chosen = []
    cum = 0.0
    for t in range(1, T + 1):
        S = int(learner.predict())
        if not in_theta(S):
            raise ProtocolViolation(f"round {t}: decision {S:#b} is outside the decision set")
        y = 1 - (S >> v_bit(t) & 1)
        loss_fn = mistake_losses(T, t)[y]
        loss = loss_fn(S)
        cum += loss
        labels.append(y)
        chosen.append(loss_fn)
        learner.update(loss_fn, solve_next=t < T)
        changed = t < T and int(learner.predict()) != S
        eps = float(getattr(learner, "eps", float("nan")))
        u = float(getattr(getattr(learner, "state", None), "u", float("nan")))
        trace.rows.append((t, t - 1, loss, 0.0, eps, u, cum, changed))
        trace.inconsistency += int(changed)
    witness = (1 << U0) | sum(1 << v_bit(t) for t, y in zip(range(1, T + 1), labels) if y == 1)
    witness_loss = float(sum(f(witness) for f in chosen))
    enumerated = None
    if enumerate_opt:
        masks = theta_masks(T)
        total = np.zeros(masks.size)
        for f in chosen:
            total += f.values(masks)
        enumerated = float(total.min())
    trace.opt_T = enumerated if enumerated is not None else witness_loss
    # OPT_t of each prefix is also 0: the witness restricted to the prefix labels
    return MistakeTreeResult(trace, labels, witness, witness_loss, enumerated)

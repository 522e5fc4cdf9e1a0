"""Batch-to-online conversion under a seeded random-order stream."""
from __future__ import annotations

import hashlib
import io
import json
import time
import zlib
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .conjugate import eval_phi
from .constants import SLACK


def derive_rng(seed: int, label: str, *keys: int) -> np.random.Generator:
    """Independent stream for (root seed, purpose label, counters)."""
    entropy = [int(seed), zlib.crc32(label.encode())] + [int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def random_order_stream(items: Sequence, seed: int) -> list:
    """Fisher-Yates shuffle of `items` driven by the "order" stream of `seed`."""
    if len(items) == 0:
        raise ValueError("cannot order an empty multiset")
    out = list(items)
    n = len(out)
    if n == 1:
        return out
    rng = derive_rng(seed, "order")
    picks = rng.integers(0, np.arange(n, 1, -1))  # picks[k] uniform on [0, n-1-k]
    for k, j in enumerate(picks):
        i = n - 1 - k
        out[i], out[j] = out[j], out[i]
    return out


@dataclass
class LossInstance:
    datapoints: list
    loss: Callable[[Any, Any], float]
    decision_space: str = "abstract"

    @property
    def T(self) -> int:
        return len(self.datapoints)


def same_decision(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return bool(np.array_equal(a, b))
    return a == b


@dataclass
class RegretTrace:
    seed: int
    rows: list = field(default_factory=list)  # (t, x_index, loss, opt_t, eps_t, u_t, cum_loss, changed)
    opt_T: float = 0.0
    inconsistency: int = 0
    wall_time: float = 0.0
    config_digest: str = ""
    model: str = "random_order"

    @property
    def T(self) -> int:
        return len(self.rows)

    @property
    def cum_loss(self) -> float:
        return self.rows[-1][6] if self.rows else 0.0

    @property
    def regret(self) -> float:
        return self.cum_loss - self.opt_T

    def column(self, name: str) -> np.ndarray:
        idx = {"t": 0, "x": 1, "loss": 2, "opt_t": 3, "eps_t": 4, "u_t": 5, "cum_loss": 6, "changed": 7}[name]
        return np.array([r[idx] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,loss,opt_t,eps_t,u_t,cum_loss,cum_regret,changed\n")
        for t, _, loss, opt, eps, u, cum, changed in self.rows:
            buf.write(f"{t},{loss:.17g},{opt:.17g},{eps:.17g},{u:.17g},{cum:.17g},{cum - opt:.17g},{int(changed)}\n")
        return buf.getvalue()

    def summary(self) -> dict:
        out = {
            "seed": self.seed,
            "T": self.T,
            "regret": self.regret,
            "opt_T": self.opt_T,
            "inconsistency": self.inconsistency,
            "config_digest": self.config_digest,
        }
        if self.model != "random_order":
            out["model"] = self.model
        return out


def config_digest(config: Any) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


class OracleFailure(RuntimeError):
    def __init__(self, round_index: int, cause: Exception):
        super().__init__(f"oracle failed at round {round_index}: {cause}")
        self.round_index = round_index


class BatchToOnlineLearner:
    """Plays theta_t, then refits on the observed prefix with the controller's eps_t."""

    def __init__(self, oracle, controller, seed: int):
        self.oracle = oracle
        self.controller = controller
        self.seed = seed
        self.state = controller.start()
        self.prefix: list = []
        self.theta = oracle.initial_decision
        self.opt = 0.0
        self.eps = float("nan")

    def predict(self):
        return self.theta

    def update(self, x, solve_next: bool = True) -> bool:
        """Reveal x; returns whether the next decision differs from the current one."""
        self.prefix.append(x)
        t = len(self.prefix)
        try:
            _, self.opt = self.oracle.exact_opt(self.prefix)
            self.state, self.eps = self.controller.step(self.state, self.opt)
            if not solve_next:
                return False
            eps = self.eps
            cap = getattr(self.oracle, "eps_cap", None)
            if cap is not None:
                eps = min(eps, cap)
            nxt = self.oracle.solve(self.prefix, eps, derive_rng(self.seed, "oracle", t))
        except Exception as exc:  # attach the round index
            raise OracleFailure(t, exc) from exc
        changed = not same_decision(nxt, self.theta)
        self.theta = nxt
        return changed


def run(instance: LossInstance, oracle, controller, seed: int, digest: str = "") -> RegretTrace:
    start = time.perf_counter()
    order = random_order_stream(range(instance.T), seed)
    learner = BatchToOnlineLearner(oracle, controller, seed)
    trace = RegretTrace(seed=seed, config_digest=digest)
    cum = 0.0
    T = instance.T
    for t, idx in enumerate(order, start=1):
        x = instance.datapoints[idx]
        loss = float(instance.loss(learner.predict(), x))
        cum += loss
        changed = learner.update(x, solve_next=t < T)
        trace.rows.append((t, idx, loss, learner.opt, learner.eps, learner.state.u, cum, changed))
        trace.inconsistency += int(changed)
    trace.opt_T = learner.opt
    trace.wall_time = time.perf_counter() - start
    return trace


def regret_decomposition_bound(trace: RegretTrace, phi, slack: float = SLACK) -> tuple[float, float]:
    """(sum_t eps_t OPT_t / t + sum_t phi(eps_t) / t, additive slack)."""
    total = 0.0
    for t, _, _, opt, eps, _, _, _ in trace.rows:
        total += eps / t * opt + eval_phi(phi, eps) / t
    return total, slack


def prefix_optima_sum(instance: LossInstance, exact_opt: Callable, seed: int) -> tuple[float, float]:
    order = random_order_stream(range(instance.T), seed)
    prefix = []
    total = 0.0
    opt = 0.0
    for t, idx in enumerate(order, start=1):
        prefix.append(instance.datapoints[idx])
        _, opt = exact_opt(prefix)
        total += opt / t
    return total, opt


def audit_prefix_optima(instance: LossInstance, oracle, num_seeds: int, root_seed: int = 0):
    """Monte-Carlo (mean, standard error) of sum_t OPT_t / t, and OPT_T."""
    sums = np.empty(num_seeds)
    opt_T = 0.0
    for k in range(num_seeds):
        sums[k], opt_T = prefix_optima_sum(instance, oracle.exact_opt, root_seed * 1_000_003 + k)
    se = float(sums.std(ddof=1) / np.sqrt(num_seeds)) if num_seeds > 1 else 0.0
    return float(sums.mean()), se, opt_T


def audit_single_step(instance: LossInstance, oracle, t: int, eps: float, num_seeds: int,
                      phi=None, slack: float = SLACK, root_seed: int = 0):
    """Monte-Carlo E[loss(theta_{t+1}, x_{t+1})] against E[(1+eps) OPT_t / t + phi(eps) / t] + slack / T.

    Returns (mc_loss, mc_se, bound) where bound already includes the additive slack.
    """
    T = instance.T
    if not 1 <= t < T:
        raise ValueError("need 1 <= t < T")
    phi = phi if phi is not None else oracle.phi
    losses = np.empty(num_seeds)
    rhs = np.empty(num_seeds)
    for k in range(num_seeds):
        seed = root_seed * 1_000_003 + k
        order = random_order_stream(range(T), seed)
        prefix = [instance.datapoints[i] for i in order[:t]]
        theta = oracle.solve(prefix, eps, derive_rng(seed, "oracle", t))
        losses[k] = instance.loss(theta, instance.datapoints[order[t]])
        _, opt = oracle.exact_opt(prefix)
        rhs[k] = (1 + eps) / t * opt + eval_phi(phi, eps) / t
    se = float(losses.std(ddof=1) / np.sqrt(num_seeds)) if num_seeds > 1 else 0.0
    return float(losses.mean()), se, float(rhs.mean()) + slack / T

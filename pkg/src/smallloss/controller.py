"""Adaptive choice of the approximation parameter eps_t.

A_t = A0 + sum_{s<=t} OPT_s / s,  H_t = sum_{s<=t} 1/s,  u_t = A_t / H_t,
eps_t = eps_min(u_t), optionally capped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .conjugate import DomainError, PhiSpec, PowerLog, eps_min, eval_phi, phi_star


@dataclass(frozen=True)
class ControllerState:
    t: int = 0
    A: float = 1.0
    H: float = 0.0
    u: float = math.nan
    A0: float = 1.0
    eps_cap: Optional[float] = None


def initial_state(A0: float, eps_cap: Optional[float] = None) -> ControllerState:
    if not A0 > 0:
        raise DomainError(f"A0 must be positive, got {A0}")
    if eps_cap is not None and not eps_cap > 0:
        raise DomainError(f"eps_cap must be positive, got {eps_cap}")
    return ControllerState(t=0, A=A0, H=0.0, u=math.nan, A0=A0, eps_cap=eps_cap)


def harmonic(T: int) -> float:
    h = 0.0
    for s in range(1, T + 1):
        h += 1.0 / s
    return h


def default_a0(spec: Optional[PhiSpec] = None, T: Optional[int] = None) -> float:
    if isinstance(spec, PowerLog) and T is not None:
        return min(1.0, harmonic(T) ** (-1.0 / spec.q))
    return 1e-6


def step(state: ControllerState, opt_t: float, spec: PhiSpec) -> tuple[ControllerState, float]:
    if opt_t < 0:
        raise DomainError(f"opt_t must be nonnegative, got {opt_t}")
    t = state.t + 1
    A = state.A + opt_t / t
    H = state.H + 1.0 / t
    u = A / H
    eps = eps_min(spec, u)
    if state.eps_cap is not None:
        eps = min(eps, state.eps_cap)
    return replace(state, t=t, A=A, H=H, u=u), eps


def audit_step_identity(A_prev: float, H_prev: float, opt_t: float, t: int) -> tuple[float, float]:
    """Both sides of OPT_t/t - u_t/t = H_{t-1} (u_t - u_{t-1})."""
    if t < 2:
        raise DomainError("the per-step identity needs t >= 2")
    u_prev = A_prev / H_prev
    A = A_prev + opt_t / t
    H = H_prev + 1.0 / t
    u = A / H
    return opt_t / t - u / t, H_prev * (u - u_prev)


def audit_telescope(opt_seq: Iterable[float], spec: PhiSpec, A0: float) -> tuple[float, float]:
    """Replay the uncapped rule; return (sum of per-round terms, H_T * phi_star(u_T))."""
    state = initial_state(A0)
    total = 0.0
    for opt_t in opt_seq:
        state, eps = step(state, opt_t, spec)
        total += opt_t / state.t * eps + eval_phi(spec, eps) / state.t
    if state.t == 0:
        raise DomainError("empty OPT sequence")
    return total, state.H * phi_star(spec, state.u).phi_star


class AdaptiveController:
    """The eps_t rule packaged for the engine."""

    mode = "adaptive"

    def __init__(self, spec: PhiSpec, A0: float, eps_cap: Optional[float] = None):
        self.spec = spec
        self.A0 = A0
        self.eps_cap = eps_cap

    def start(self) -> ControllerState:
        return initial_state(self.A0, self.eps_cap)

    def step(self, state: ControllerState, opt_t: float) -> tuple[ControllerState, float]:
        return step(state, opt_t, self.spec)

    def describe(self) -> dict:
        return {"mode": self.mode, "phi": self.spec.to_json(), "A0": self.A0, "eps_cap": self.eps_cap}


class FixedController:
    """Constant eps; still tracks A, H, u so traces stay comparable."""

    mode = "fixed"

    def __init__(self, eps: float, A0: float = 1e-6):
        if not eps > 0:
            raise DomainError(f"fixed eps must be positive, got {eps}")
        self.eps = eps
        self.A0 = A0

    def start(self) -> ControllerState:
        return initial_state(self.A0)

    def step(self, state: ControllerState, opt_t: float) -> tuple[ControllerState, float]:
        if opt_t < 0:
            raise DomainError(f"opt_t must be nonnegative, got {opt_t}")
        t = state.t + 1
        A = state.A + opt_t / t
        H = state.H + 1.0 / t
        return replace(state, t=t, A=A, H=H, u=A / H), self.eps

    def describe(self) -> dict:
        return {"mode": self.mode, "eps": self.eps, "A0": self.A0}

"""Trade-off functions phi(eps) and their concave conjugates.

phi_star(u) = inf_{eps >= 0} (u * eps + phi(eps)); the minimizing eps is a
supergradient of phi_star at u and is what the adaptive controller plays.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

DEFAULT_DOMAIN = (1e-8, 1e8)
COARSE_POINTS = 64
LOG_TOL = 1e-10
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class DomainError(ValueError):
    """Argument outside the domain of a trade-off function or its conjugate."""


@dataclass(frozen=True)
class PowerLog:
    """phi(eps) = c1 * eps^-q * log(e + c2 / eps)."""

    c1: float
    q: float
    c2: float = 0.0

    def __post_init__(self):
        if not (self.c1 > 0 and self.q > 0 and self.c2 >= 0):
            raise DomainError(f"invalid power-log parameters {self}")

    @property
    def domain(self) -> tuple[float, float]:
        return DEFAULT_DOMAIN

    def to_json(self) -> dict:
        return {"kind": "power_log", "c1": self.c1, "q": self.q, "c2": self.c2}


@dataclass(frozen=True)
class Custom:
    """User-supplied phi with a declared evaluation domain."""

    func: Callable[[float], float]
    lo: float = DEFAULT_DOMAIN[0]
    hi: float = DEFAULT_DOMAIN[1]
    name: str = "custom"

    @property
    def domain(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def to_json(self) -> dict:
        return {"kind": "custom", "name": self.name, "lo": self.lo, "hi": self.hi}


PhiSpec = Union[PowerLog, Custom]


@dataclass(frozen=True)
class ConjugatePoint:
    u: float
    eps_min: float
    phi_star: float


def phi_from_json(obj: dict) -> PhiSpec:
    kind = obj.get("kind")
    if kind == "power_log":
        return PowerLog(float(obj["c1"]), float(obj["q"]), float(obj.get("c2", 0.0)))
    if kind == "custom":
        # "callable" is an import path of the form "package.module:function"
        import importlib

        module, _, attr = obj["callable"].partition(":")
        func = getattr(importlib.import_module(module), attr)
        lo = float(obj.get("lo", DEFAULT_DOMAIN[0]))
        hi = float(obj.get("hi", DEFAULT_DOMAIN[1]))
        return Custom(func, lo, hi, name=obj["callable"])
    raise DomainError(f"unknown phi kind {kind!r}")


def eval_phi(spec: PhiSpec, eps: float) -> float:
    if not eps > 0:
        raise DomainError(f"phi needs eps > 0, got {eps}")
    if isinstance(spec, PowerLog):
        return spec.c1 * eps ** (-spec.q) * math.log(math.e + spec.c2 / eps)
    lo, hi = spec.domain
    if eps < lo or eps > hi:
        warnings.warn(f"eps={eps} outside custom phi domain [{lo}, {hi}], clamped", RuntimeWarning)
        eps = min(max(eps, lo), hi)
    value = float(spec.func(eps))
    if value < 0:
        raise DomainError(f"custom phi returned negative value {value} at eps={eps}")
    return value


def _phi_vec(spec: PhiSpec, eps: np.ndarray) -> np.ndarray:
    if isinstance(spec, PowerLog):
        return spec.c1 * eps ** (-spec.q) * np.log(math.e + spec.c2 / eps)
    return np.array([eval_phi(spec, float(e)) for e in eps])


def _golden_log(objective: Callable[[float], float], a: float, b: float) -> tuple[float, float]:
    """Golden-section search for the minimum of objective(exp(y)) on y in [a, b]."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = objective(c), objective(d)
    best_y, best_f = (c, fc) if fc <= fd else (d, fd)
    while b - a > LOG_TOL * max(1.0, abs(a), abs(b)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = objective(c)
            if fc < best_f or (fc == best_f and c < best_y):
                best_y, best_f = c, fc
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = objective(d)
            if fd < best_f:
                best_y, best_f = d, fd
    return best_y, best_f


def _numeric_min(spec: PhiSpec, u: float) -> tuple[float, float]:
    lo, hi = spec.domain
    ylo, yhi = math.log(lo), math.log(hi)
    grid = np.linspace(ylo, yhi, COARSE_POINTS)
    eps_grid = np.clip(np.exp(grid), lo, hi)
    values = u * eps_grid + _phi_vec(spec, eps_grid)
    i = int(np.argmin(values))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, COARSE_POINTS - 1)]

    def objective(y: float) -> float:
        eps = min(max(math.exp(y), lo), hi)
        return u * eps + eval_phi(spec, eps)

    y, f = _golden_log(objective, a, b)
    # the coarse grid point itself may still win on plateaus; keep the smaller eps on ties
    if values[i] < f or (values[i] == f and grid[i] < y):
        y, f = grid[i], float(values[i])
    return min(max(math.exp(y), lo), hi), f


def eps_min(spec: PhiSpec, u: float) -> float:
    return phi_star(spec, u).eps_min


def phi_star(spec: PhiSpec, u: float) -> ConjugatePoint:
    if not u > 0:
        raise DomainError(f"conjugate needs u > 0, got {u}")
    if isinstance(spec, PowerLog) and spec.c2 == 0:
        eps = (spec.q * spec.c1 / u) ** (1.0 / (spec.q + 1.0))
        return ConjugatePoint(u, eps, u * eps + eval_phi(spec, eps))
    eps, _ = _numeric_min(spec, u)
    return ConjugatePoint(u, eps, u * eps + eval_phi(spec, eps))


def closed_form_regret_bound(spec: PowerLog, opt_T: float, H_T: float, A0: float) -> float:
    """Closed-form upper bound on H_T * phi_star((A0 + opt_T) / H_T).

    Valid when A0 <= H_T^(-1/q): plugging eps = (q c1 / u)^(1/(q+1)) into the
    conjugate and splitting u^(q/(q+1)) subadditively.
    """
    if not isinstance(spec, PowerLog):
        raise DomainError("closed_form_regret_bound is defined for the power-log family")
    if opt_T < 0 or H_T <= 0 or A0 <= 0:
        raise DomainError("need opt_T >= 0, H_T > 0, A0 > 0")
    q, c1, c2 = spec.q, spec.c1, spec.c2
    if A0 > H_T ** (-1.0 / q) * (1 + 1e-12):
        raise ValueError(f"A0={A0} exceeds H_T^(-1/q)={H_T ** (-1.0 / q)}")
    lead = q ** (-q / (q + 1)) * c1 ** (1 / (q + 1))
    growth = 1.0 + opt_T ** (q / (q + 1)) * H_T ** (1 / (q + 1))
    log_term = q + math.log(math.e + c2 * ((1.0 + opt_T / H_T) / (q * c1)) ** (1 / (q + 1)))
    return lead * growth * log_term

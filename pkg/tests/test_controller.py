import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smallloss.conjugate import DomainError, PowerLog, eval_phi, phi_star
from smallloss.controller import (
    AdaptiveController,
    FixedController,
    audit_step_identity,
    audit_telescope,
    default_a0,
    harmonic,
    initial_state,
    step,
)

ADAGRAD = PowerLog(1, 1, 0)


def test_step_examples():
    s = initial_state(1.0)
    s, eps = step(s, 0.0, ADAGRAD)
    assert (s.t, s.A, s.H, s.u, eps) == (1, 1.0, 1.0, 1.0, 1.0)
    s, eps = step(s, 1.0, ADAGRAD)
    assert s.A == pytest.approx(1.5) and s.H == pytest.approx(1.5)
    assert s.u == pytest.approx(1.0) and eps == pytest.approx(1.0)


def test_zero_opt_trajectory():
    s = initial_state(0.3)
    us, epss = [], []
    for _ in range(50):
        s, eps = step(s, 0.0, ADAGRAD)
        us.append(s.u)
        epss.append(eps)
    assert np.all(np.diff(us) < 0)
    # eps = 1/sqrt(u) grows as u falls
    assert np.all(np.diff(epss) > 0)


def test_cap_and_errors():
    s = initial_state(1e-6, eps_cap=1.0)
    s, eps = step(s, 0.0, ADAGRAD)
    assert eps == 1.0
    with pytest.raises(DomainError):
        step(s, -0.1, ADAGRAD)
    with pytest.raises(DomainError):
        initial_state(0.0)


def test_state_invariants():
    rng = np.random.default_rng(3)
    s = initial_state(0.5)
    for t in range(1, 200):
        s, _ = step(s, float(rng.uniform(0, t)), PowerLog(2, 2, 1))
        assert s.A >= s.A0
        assert s.u * s.H == pytest.approx(s.A, rel=1e-14)
    assert s.H == harmonic(199)
    assert harmonic(199) == pytest.approx(sum(1 / k for k in range(1, 200)), rel=1e-15)


def test_audit_step_identity_examples():
    # opt_t = 0 and A_prev = A0: both sides are -u_t / t
    A0, H_prev, t = 0.7, harmonic(4), 5
    lhs, rhs = audit_step_identity(A0, H_prev, 0.0, t)
    u_t = A0 / (H_prev + 1 / t)
    assert lhs == pytest.approx(-u_t / t, rel=1e-14)
    assert rhs == pytest.approx(-u_t / t, rel=1e-12)
    # A0=1, opt=(0, 1), t=2
    assert audit_step_identity(1.0, 1.0, 1.0, 2) == (0.0, 0.0)
    with pytest.raises(DomainError):
        audit_step_identity(1.0, 1.0, 0.0, 1)


def test_audit_step_identity_random():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(10_000):
        t = int(rng.integers(2, 10_000))
        H_prev = harmonic(t - 1) if t < 200 else math.log(t - 1) + 0.5772156649
        A_prev = float(rng.uniform(1e-3, 10)) * H_prev
        lhs, rhs = audit_step_identity(A_prev, H_prev, float(rng.uniform(0, t)), t)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    assert worst <= 1e-12


def test_audit_telescope_examples():
    T = 40
    total, bound = audit_telescope([0.0] * T, ADAGRAD, 1.0)
    H = harmonic(T)
    assert total <= H * 2 * math.sqrt(1.0 / H) + 1e-9
    assert bound == pytest.approx(H * 2 * math.sqrt(1.0 / H), rel=1e-12)
    total, bound = audit_telescope([1.0] * 100, PowerLog(1, 3, 0), 1.0)
    assert total <= bound + 1e-9
    # T = 1: slack is exactly A0 * eps_1
    spec, A0, opt = PowerLog(2, 2, 0), 0.4, 0.9
    total, bound = audit_telescope([opt], spec, A0)
    eps1 = phi_star(spec, A0 + opt).eps_min
    assert total == pytest.approx(opt * eps1 + eval_phi(spec, eps1), rel=1e-14)
    assert bound - total == pytest.approx(A0 * eps1, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(0, 1), min_size=1, max_size=200),
    st.sampled_from([1.0, 2.0, 3.0]),
    st.floats(0.1, 10),
    st.floats(1e-4, 1),
)
def test_telescope_property(fracs, q, c1, A0):
    opts = np.maximum.accumulate(np.array(fracs) * np.arange(1, len(fracs) + 1))
    total, bound = audit_telescope(opts.tolist(), PowerLog(c1, q, 0), A0)
    assert total <= bound + 1e-9 * max(1.0, bound)


def test_adagrad_correspondence():
    rng = np.random.default_rng(5)
    s = initial_state(0.2)
    for t in range(1, 300):
        s, eps = step(s, float(rng.uniform(0, 0.5 * t)), ADAGRAD)
        assert eps == pytest.approx(math.sqrt(s.H / s.A), rel=1e-12)
        assert 1 / eps == pytest.approx(math.sqrt(s.A / s.H), rel=1e-12)


def test_uncapped_eps_positive():
    s = initial_state(1e-9)
    for t in range(1, 100):
        s, eps = step(s, 0.0, PowerLog(5, 3, 2))
        assert eps > 0 and math.isfinite(eps)


def test_default_a0():
    spec = PowerLog(1, 2, 0)
    assert default_a0(spec, 100) == pytest.approx(min(1.0, harmonic(100) ** -0.5))
    assert default_a0(None, None) == 1e-6
    assert default_a0(PowerLog(1, 2, 0), 1) == 1.0


def test_controller_wrappers():
    ad = AdaptiveController(ADAGRAD, 1.0, eps_cap=0.5)
    s, eps = ad.step(ad.start(), 0.0)
    assert eps == 0.5
    assert ad.describe()["mode"] == "adaptive"
    fx = FixedController(0.25)
    s = fx.start()
    for t in range(1, 5):
        s, eps = fx.step(s, 1.0)
        assert eps == 0.25 and s.t == t
    with pytest.raises(DomainError):
        FixedController(0.0)

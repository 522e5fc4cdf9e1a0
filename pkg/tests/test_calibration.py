import pytest

from smallloss import constants
from smallloss.calibration import calibrate_c_M, calibrate_c_m, l1_success_rate, sparsifier_success_rate


@pytest.mark.slow
def test_c_M_reproduces_shipped_constant():
    rep = calibrate_c_M(seed=0)
    assert rep.constant == constants.C_M
    assert rep.rates[rep.constant] >= 0.95
    assert all(rate < 0.95 for c, rate in rep.rates.items() if c < rep.constant)


@pytest.mark.slow
def test_c_M_stable_across_seeds():
    assert calibrate_c_M(seed=1).constant == constants.C_M


def test_threshold_tightening_is_monotone():
    loose = calibrate_c_M(seed=0, threshold=0.5, trials=60).constant
    strict = calibrate_c_M(seed=0, threshold=0.99, trials=60).constant
    assert strict >= loose


def test_success_rate_monotone_in_constant_on_same_trials():
    low = sparsifier_success_rate(0.0625, trials=60, seed=3)
    high = sparsifier_success_rate(4.0, trials=60, seed=3)
    assert high >= low
    assert l1_success_rate(4.0, trials=30, seed=3) >= l1_success_rate(2 ** -6, trials=30, seed=3)


@pytest.mark.slow
def test_c_m_reproduces_shipped_constant_and_is_stable():
    rep = calibrate_c_m(seed=0)
    assert rep.constant == constants.C_m
    assert rep.rates[rep.constant] >= 0.95
    assert calibrate_c_m(seed=1).constant == constants.C_m

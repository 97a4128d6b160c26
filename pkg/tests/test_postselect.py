import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from cvqkd.postselect import (
    InfoParams,
    binary_mutual_info,
    eve_info,
    mean_error,
    posterior_error,
    selection_stats,
    solve_threshold,
)

P79 = InfoParams(alpha=0.6, eta=0.79)
P36 = InfoParams(alpha=0.6, eta=0.36)

# Thresholds whose closed-form yields equal the reference experiment's
# post/raw ratios (415/1069 and 165/1096), frozen from a brentq oracle.
T79_YIELD_MATCHED = 0.7911468093130068
T36_YIELD_MATCHED = 1.1438186073235126


def test_binary_mutual_info_values():
    assert binary_mutual_info(0.06) == pytest.approx(0.6725550808455237, abs=1e-12)
    assert binary_mutual_info(0.0) == 1.0
    assert binary_mutual_info(1.0) == 1.0
    assert binary_mutual_info(0.5) == 0.0


def test_binary_mutual_info_domain():
    with pytest.raises(ValueError):
        binary_mutual_info(-0.01)
    with pytest.raises(ValueError):
        binary_mutual_info(1.01)


@settings(max_examples=100, deadline=None)
@given(p=st.floats(0.0, 1.0))
def test_binary_mutual_info_symmetry(p):
    assert binary_mutual_info(p) == pytest.approx(binary_mutual_info(1.0 - p), abs=1e-12)
    assert 0.0 <= binary_mutual_info(p) <= 1.0


def test_binary_mutual_info_vectorized():
    ps = np.array([0.0, 0.06, 0.5, 1.0])
    got = binary_mutual_info(ps)
    for value, p in zip(got, ps):
        assert value == pytest.approx(binary_mutual_info(float(p)), abs=1e-12)


def test_mean_error_frozen_values():
    # receiver amplitude 0.6 sqrt(0.79) = 0.53329...
    assert mean_error(P79.receiver_amplitude) == pytest.approx(0.2253680793965249, abs=1e-12)
    assert mean_error(0.5333) == pytest.approx(0.2253645409441229, abs=1e-12)
    assert mean_error(0.36) == pytest.approx(0.3053351494356679, abs=1e-12)
    assert mean_error(0.0) == 0.5


def test_mean_error_excess_noise_identity():
    # variance 0.5 + excess: error = erfc(a / sqrt(1 + 2*excess)) / 2
    a, xs = 0.45, 0.3
    assert mean_error(a, 0.5 + xs) == pytest.approx(
        0.5 * math.erfc(a / math.sqrt(1.0 + 2.0 * xs)), abs=1e-14
    )


def test_mean_error_domain():
    with pytest.raises(ValueError):
        mean_error(-0.1)
    with pytest.raises(ValueError):
        mean_error(0.1, 0.0)


def test_posterior_error_frozen_value():
    assert posterior_error(1.0, 0.5333) == pytest.approx(0.1059115874822533, abs=1e-12)
    assert posterior_error(0.0, 0.5333) == 0.5


@settings(max_examples=100, deadline=None)
@given(x=st.floats(-30.0, 30.0))
def test_posterior_error_even_and_bounded(x):
    p = posterior_error(x, 0.5333)
    assert p == posterior_error(-x, 0.5333)
    assert 0.0 < p <= 0.5


def test_posterior_error_monotone_in_magnitude():
    xs = np.linspace(0.0, 6.0, 200)
    ps = posterior_error(xs, 0.5333)
    assert np.all(np.diff(ps) < 0)


def test_posterior_total_probability():
    # E_x[posterior_error(x)] over the outcome mixture equals mean_error
    mu, s2 = P79.receiver_amplitude, 0.5
    sigma = math.sqrt(s2)

    def integrand(x):
        pdf = math.exp(-((x - mu) ** 2) / (2 * s2)) / (sigma * math.sqrt(2 * math.pi))
        return pdf * posterior_error(x, mu, s2)

    total, _ = quad(integrand, -np.inf, np.inf, epsabs=1e-12)
    assert total == pytest.approx(mean_error(mu, s2), abs=1e-3)
    assert total == pytest.approx(mean_error(mu, s2), abs=1e-9)  # identity is exact


def test_eve_info_chain():
    assert P36.eavesdropper_amplitude == pytest.approx(0.48, abs=1e-15)
    assert mean_error(P36.eavesdropper_amplitude) == pytest.approx(0.2486251646526176, abs=1e-12)
    assert eve_info(P36) == pytest.approx(0.1909082187720958, abs=1e-10)
    assert eve_info(P79) == pytest.approx(0.0671022721094346, abs=1e-10)
    assert eve_info(InfoParams(0.6, 1.0)) == 0.0


def test_info_params_validation():
    with pytest.raises(ValueError):
        InfoParams(alpha=0.0, eta=0.5)
    with pytest.raises(ValueError):
        InfoParams(alpha=0.6, eta=0.0)
    with pytest.raises(ValueError):
        InfoParams(alpha=0.6, eta=1.5)
    with pytest.raises(ValueError):
        InfoParams(alpha=0.6, eta=0.5, sigma2=-1.0)


def test_solve_threshold_lossless_keeps_everything():
    assert solve_threshold(InfoParams(0.6, 1.0)) == 0.0


def test_solve_threshold_crossing_condition():
    for params in (P79, P36):
        t = solve_threshold(params)
        assert t > 0
        i_ab = binary_mutual_info(posterior_error(t, params.receiver_amplitude))
        assert abs(i_ab - eve_info(params)) < 1e-6


def test_solve_threshold_frozen_values():
    assert solve_threshold(P36) == pytest.approx(0.7680265574597023, abs=1e-6)
    assert solve_threshold(P79) == pytest.approx(0.2928874463494540, abs=1e-6)


def test_solve_threshold_monotone_in_transmission():
    etas = np.linspace(0.1, 1.0, 10)
    ts = [solve_threshold(InfoParams(0.6, float(e))) for e in etas]
    assert all(t1 >= t2 - 1e-9 for t1, t2 in zip(ts, ts[1:]))
    assert ts[-1] == 0.0


def test_solve_threshold_scale_invariance():
    # rescaling alpha, outcomes, and sigma together rescales the threshold
    base = solve_threshold(InfoParams(0.6, 0.36, 0.5))
    scaled = solve_threshold(InfoParams(1.2, 0.36, 2.0))
    assert scaled == pytest.approx(2.0 * base, rel=1e-6)


def test_selection_stats_yield_matched_79():
    res = selection_stats(P79, T79_YIELD_MATCHED)
    assert res.yield_fraction == pytest.approx(415 / 1069, abs=1e-9)
    assert res.post_error == pytest.approx(0.0786462269846514, abs=1e-9)
    assert res.advantage == pytest.approx(0.5552595635464341, abs=1e-7)
    assert res.advantage_pooled == pytest.approx(0.5355066962435409, abs=1e-9)


def test_selection_stats_yield_matched_36():
    res = selection_stats(P36, T36_YIELD_MATCHED)
    assert res.yield_fraction == pytest.approx(165 / 1096, abs=1e-9)
    assert res.post_error == pytest.approx(0.1110722901931746, abs=1e-9)
    assert res.advantage == pytest.approx(0.3156014942364278, abs=1e-7)


def test_selection_stats_auto_threshold_36():
    res = selection_stats(P36, solve_threshold(P36))
    assert res.yield_fraction == pytest.approx(0.3372832194092956, abs=1e-6)
    assert res.post_error == pytest.approx(0.1640339080517467, abs=1e-6)
    assert res.advantage == pytest.approx(0.1833203691428653, abs=1e-6)
    assert res.advantage > 0


def test_selection_stats_zero_threshold_recovers_mean_error():
    res = selection_stats(P79, 0.0)
    assert res.yield_fraction == pytest.approx(1.0, abs=1e-12)
    assert res.post_error == pytest.approx(mean_error(P79.receiver_amplitude), abs=1e-12)


def test_selection_yield_decreasing_in_threshold():
    ts = np.linspace(0.0, 3.0, 40)
    ys = [selection_stats(P79, float(t)).yield_fraction for t in ts]
    assert all(a > b for a, b in zip(ys, ys[1:]))


def test_advantage_nondecreasing_in_threshold():
    ts = np.linspace(0.1, 2.5, 25)
    advs = [selection_stats(P79, float(t)).advantage for t in ts]
    assert all(b >= a - 1e-9 for a, b in zip(advs, advs[1:]))


def test_selection_stats_degenerate_threshold():
    with pytest.raises(ValueError):
        selection_stats(P79, 60.0)
    with pytest.raises(ValueError):
        selection_stats(P79, -0.5)

import math
import random
import statistics

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fadingmac.propagation import (
    PropagationParams,
    distance_for_delivery_ratio,
    link_delivery_ratio,
    mean_received_power_dbm,
    normal_isf,
    normal_sf,
    sample_received_power_dbm,
)

DEFAULT = PropagationParams()


def mp_q(x):
    mpmath.mp.dps = 40
    return float(mpmath.ncdf(-mpmath.mpf(x)))


@pytest.mark.parametrize("x", [-6.0, -2.5, -0.3, 0.0, 0.7, 1.96, 4.0, 8.0])
def test_normal_sf_matches_mpmath(x):
    assert normal_sf(x) == pytest.approx(mp_q(x), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("q", [1e-9, 0.01, 0.25, 0.5, 0.661, 0.975, 1 - 1e-9])
def test_normal_isf_inverts_sf(q):
    assert normal_sf(normal_isf(q)) == pytest.approx(q, rel=1e-9)


def test_calibrated_reference_power():
    # frozen: -64 + 30*log10(250) from mpmath
    assert DEFAULT.p_d0_dbm == pytest.approx(7.938200260161128, abs=1e-12)
    assert mean_received_power_dbm(DEFAULT, 1.0) == DEFAULT.p_d0_dbm
    assert mean_received_power_dbm(DEFAULT, 250.0) == pytest.approx(-64.0, abs=1e-12)
    assert DEFAULT.p_d0_dbm - mean_received_power_dbm(DEFAULT, 2.0) == pytest.approx(9.0309, abs=1e-4)


@pytest.mark.parametrize(
    "kwargs",
    [dict(beta=0), dict(sigma_db=-1), dict(d0_m=0), dict(ideal_range_m=0.5), dict(p_d0_dbm=0.0)],
)
def test_invalid_params(kwargs):
    with pytest.raises(ValueError):
        PropagationParams(**kwargs)


def test_consistent_explicit_reference_power_accepted():
    p = PropagationParams(p_d0_dbm=DEFAULT.p_d0_dbm)
    assert p.p_d0_dbm == DEFAULT.p_d0_dbm


def test_distance_below_reference_rejected():
    with pytest.raises(ValueError):
        mean_received_power_dbm(DEFAULT, 0.5)


def test_link_ratio_values():
    assert link_delivery_ratio(DEFAULT, 250.0) == 0.5
    assert link_delivery_ratio(DEFAULT, 220.0) == pytest.approx(0.66143400443865265, abs=1e-12)
    flat = PropagationParams(sigma_db=0.0)
    assert link_delivery_ratio(flat, 100.0) == 1.0
    assert link_delivery_ratio(flat, 250.0) == 1.0
    assert link_delivery_ratio(flat, 251.0) == 0.0


def test_distance_for_ratio():
    assert distance_for_delivery_ratio(DEFAULT, 0.5) == pytest.approx(250.0, rel=1e-12)
    assert distance_for_delivery_ratio(DEFAULT, 0.661) == pytest.approx(220.08012728959192, rel=1e-9)
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            distance_for_delivery_ratio(DEFAULT, bad)
    with pytest.raises(ValueError):
        distance_for_delivery_ratio(PropagationParams(sigma_db=0.0), 0.7)


def test_samples_degenerate_and_spread():
    rng = random.Random(1)
    flat = PropagationParams(sigma_db=0.0)
    assert sample_received_power_dbm(flat, 220.0, rng) == mean_received_power_dbm(flat, 220.0)
    draws = [sample_received_power_dbm(DEFAULT, 220.0, rng) for _ in range(100_000)]
    assert statistics.stdev(draws) == pytest.approx(4.0, abs=0.05)
    mean = mean_received_power_dbm(DEFAULT, 220.0)
    assert statistics.fmean(draws) == pytest.approx(mean, abs=3 * 4 / math.sqrt(len(draws)))
    above = sum(d >= DEFAULT.p_th_dbm for d in draws) / len(draws)
    p = link_delivery_ratio(DEFAULT, 220.0)
    assert abs(above - p) <= 3 * math.sqrt(p * (1 - p) / len(draws))


@settings(max_examples=200, deadline=None)
@given(st.floats(1.0, 2000.0), st.floats(1.0, 2000.0))
def test_ratio_non_increasing_in_distance(a, b):
    lo, hi = sorted((a, b))
    assert link_delivery_ratio(DEFAULT, lo) >= link_delivery_ratio(DEFAULT, hi)


@settings(max_examples=200, deadline=None)
@given(st.floats(1.0, 500.0))
def test_round_trip_distance(d):
    p = link_delivery_ratio(DEFAULT, d)
    if not 1e-12 < p < 1 - 1e-12:
        return
    assert distance_for_delivery_ratio(DEFAULT, p) == pytest.approx(d, rel=1e-6)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 6.0), st.floats(0.5, 12.0), st.floats(50.0, 500.0))
def test_ratio_half_at_range_for_any_params(beta, sigma, rng_m):
    p = PropagationParams(beta=beta, sigma_db=sigma, ideal_range_m=rng_m)
    assert link_delivery_ratio(p, rng_m) == pytest.approx(0.5, abs=1e-9)

import math

import pytest

from fadingmac import scenarios as sc
from fadingmac.macsim import DcfConfig
from fadingmac.propagation import PropagationParams


def test_derive_seed_is_stable_and_keyed():
    a = sc.derive_seed(0, "capacity", 50.0, 0)
    assert a == sc.derive_seed(0, "capacity", 50.0, 0)
    assert a != sc.derive_seed(0, "capacity", 50.0, 1)
    assert a != sc.derive_seed(1, "capacity", 50.0, 0)
    assert 0 <= a < 2**64


def test_summarize():
    mean, hw = sc.summarize([1.0, 2.0, 3.0])
    assert mean == 2.0 and hw == pytest.approx(1.959963984540054 / math.sqrt(3))
    assert sc.summarize([5.0]) == (5.0, None)


def test_table_helpers():
    t = sc.Table.from_dicts([{"a": 1, "b": 2}, {"a": 3, "b": 4}])
    assert t.columns == ["a", "b"] and t.column("b") == [2, 4]
    assert t.dicts()[1] == {"a": 3, "b": 4}


def test_power_trace():
    r = sc.exp_power_trace(duration_s=5.0, seed=1)
    assert r.passed, r.checks
    flat = sc.exp_power_trace(duration_s=1.0, propagation=PropagationParams(sigma_db=0.0))
    assert len(set(flat.tables["power_trace"].column("power_dbm"))) == 1


def test_delivery_vs_distance():
    r = sc.exp_delivery_vs_distance([200.0, 220.0, 250.0, 260.0], n_samples=4000, seed=2)
    t = r.tables["delivery_vs_distance"].dicts()
    assert t[1]["analytic_p"] == pytest.approx(0.661434004438652)
    assert t[2]["analytic_p"] == 0.5
    assert [row["two_ray_p"] for row in t] == [1.0, 1.0, 1.0, 0.0]
    for row in t:
        p = row["analytic_p"]
        assert abs(row["montecarlo_p"] - p) <= 4 * math.sqrt(p * (1 - p) / 4000)


def test_packet_delivery_and_backoff_curves():
    assert sc.exp_packet_delivery_curves().passed
    b = sc.exp_backoff_curve()
    assert b.passed
    rows = b.tables["backoff_curve"].dicts()
    assert rows[0]["expected_backoff_slots"] == 511.5
    assert rows[-1]["expected_backoff_slots"] == 15.5


def test_capture_geometry():
    r = sc.exp_capture_geometry()
    assert r.passed, r.checks


def test_unfairness_geometry_is_reported():
    r = sc.exp_unfairness(150.0, (150.0, 220.0), replications=1, duration_s=2.0)
    geo = r.metadata["geometry"]
    assert geo
    t = r.tables["unfairness"].dicts()
    assert all(0.0 <= row["normalized"] <= 1.0 for row in t)


def test_small_flooding_run_is_reproducible():
    kw = dict(node_counts=(20,), drop_probs=(0.0, 0.5), replications=2, duration_s=1.0)
    a, b = sc.exp_flooding(**kw), sc.exp_flooding(**kw)
    assert a.tables["flooding"].rows == b.tables["flooding"].rows
    cov = a.tables["flooding"].column("coverage")
    assert cov[0] >= cov[1]


def test_parallel_fan_out_matches_serial():
    kw = dict(distances=(100.0, 230.0), replications=2, duration_s=2.0)
    serial = sc.exp_capacity(**kw, workers=1)
    parallel = sc.exp_capacity(**kw, workers=2)
    assert serial.tables["capacity_raw"].rows == parallel.tables["capacity_raw"].rows


def test_validate_small():
    r = sc.exp_validate(DcfConfig(), packets=2000, link_ratios=(0.8,))
    assert r.check("short-packet RTS/CTS closed form equals oracle (1e-12)").passed
    assert r.metadata["long_form_max_abs_discrepancy"] > 1e-3

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fadingmac.geometry import (
    CaptureParams,
    ca_blocks,
    capture_line,
    causes_collision,
    csma_blocks,
    region_table,
)

P = CaptureParams()


def test_capture_line_values():
    assert capture_line(P, 200.0) == pytest.approx(355.6558820077846, rel=1e-12)
    assert capture_line(P, 100.0) == pytest.approx(177.8279410038923, rel=1e-12)
    assert capture_line(CaptureParams(capture_threshold=1.0), 123.0) == 123.0
    with pytest.raises(ValueError):
        capture_line(P, 0.0)


@given(st.floats(1.0, 500.0), st.floats(0.1, 10.0))
def test_capture_line_homogeneous(d, k):
    assert capture_line(P, k * d) == pytest.approx(k * capture_line(P, d), rel=1e-12)


def test_blocking_boundaries():
    assert ca_blocks(P, 250.0) and ca_blocks(P, 0.0) and not ca_blocks(P, 250.1)
    assert csma_blocks(P, 250.0, 300.0, "worst")
    assert not csma_blocks(P, 250.0, 301.0, "worst")
    assert csma_blocks(P, 10.0, 550.0, "average")
    assert not csma_blocks(P, 10.0, 550.5, "average")
    assert causes_collision(P, 200.0, 300.0) and not causes_collision(P, 200.0, 360.0)
    with pytest.raises(ValueError):
        csma_blocks(P, 1.0, 1.0, "best")


@pytest.mark.parametrize(
    "kw", [dict(capture_threshold=0.5), dict(n=0), dict(tx_range_m=0), dict(cs_range_factor=0.9)]
)
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        CaptureParams(**kw)


def test_region_table():
    rows = region_table(P, [100.0])
    assert len(rows) == 1
    assert rows[0]["capture_line"] == pytest.approx(177.8279410038923)
    assert rows[0]["ca_bound"] == 250.0 and rows[0]["csma_avg_bound"] == 550.0
    assert rows[0]["csma_worst_bound"] == 450.0
    for r in region_table(P, range(10, 301, 10)):
        assert r["csma_worst_bound"] >= r["ca_bound"]
    with pytest.raises(ValueError):
        region_table(P, [])
    with pytest.raises(ValueError):
        region_table(P, [10.0, -1.0])


def test_cs_range():
    assert CaptureParams(cs_range_factor=1.0).cs_range_m == 250.0
    assert math.isclose(P.cs_range_m, 550.0)

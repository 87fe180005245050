import xml.etree.ElementTree as ET

import numpy as np
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from gdpcast import fixture, pipeline
from gdpcast.series import read_csv
from gdpcast.svg import Panel, document, inverse_points, nice_ticks

NS = {"s": "http://www.w3.org/2000/svg"}


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e6, 1e6), st.floats(1e-3, 1e6))
def test_nice_ticks_cover_range(lo, span):
    hi = lo + span
    t = nice_ticks(lo, hi)
    assert 1 <= t.size <= 11
    assert t[0] >= lo - 1e-9 * max(1.0, abs(lo)) and t[-1] <= hi + 1e-9 * max(1.0, abs(hi))
    steps = np.diff(t)
    if steps.size:
        assert_allclose(steps, steps[0], rtol=1e-6)
        mantissa = steps[0] / 10.0 ** np.floor(np.log10(steps[0]))
        assert any(np.isclose(mantissa, m) for m in (1, 2, 2.5, 5, 10))


def test_nice_ticks_degenerate_range():
    assert nice_ticks(3.0, 3.0).size >= 1


def test_panel_roundtrip_through_document():
    x = 1996 + np.arange(20) / 4
    y = np.linspace(1.5e5, 3.9e5, 20) + 1e4 * np.sin(np.arange(20))
    p = Panel(50, 30, 500, 200, (x[0], x[-1]), (y.min(), y.max()), title="a < b")
    p.line(x, y, "#000000", ident="series")
    p.band(x, y - 1, y + 1, "#ff0000")
    root = ET.fromstring(document({"main": p}, 640, 300, title="t & u",
                                  legend=(("series", "#000000"),)))
    g = root.find("s:g[@id='main']", NS)
    aff = [float(g.get(f"data-{k}")) for k in ("ax", "bx", "ay", "by")]
    back = inverse_points(g.find("s:polyline[@id='series']", NS).get("points"), *aff)
    assert_allclose(back[:, 0], x, rtol=1e-12)
    assert_allclose(back[:, 1], y, rtol=1e-12)
    band = inverse_points(g.find("s:polygon[@id='band']", NS).get("points"), *aff)
    assert band.shape == (40, 2)
    assert_allclose(band[:20, 1], y + 1, rtol=1e-12)
    assert_allclose(band[20:, 1], (y - 1)[::-1], rtol=1e-12)


def test_flat_panel_gets_padded_limits():
    p = Panel(0, 0, 100, 100, (0, 1), (5.0, 5.0))
    assert p.ylim[0] < 5.0 < p.ylim[1]
    assert np.isfinite(p.by)


def test_fixture_is_reproducible_and_matches_bundle():
    a, b = fixture.generate(), fixture.generate()
    bundled = read_csv(pipeline.FIXTURE)
    assert np.array_equal(a.values, b.values)
    assert a.origin == bundled.origin == (1996, 1)
    assert np.array_equal(a.values, bundled.values)
    assert len(bundled) == 96


def test_fixture_has_quarterly_pattern():
    s = fixture.generate()
    q = np.log(s.values).reshape(-1, 4)
    profile = (q - q.mean(axis=1, keepdims=True)).mean(axis=0)
    assert profile[0] == profile.min() and profile[2] == profile.max()

"""Segment algebra: lengths, splitting, concatenation, planar geometry,
abstraction maps and serialization.

The geometric oracle is independent of the implementation: a curve's
endpoint must equal the integral of its unit tangent field, evaluated
with scipy quadrature.
"""

import math

import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from mapcl.segments import (
    ANGLE_TOL,
    Arc,
    Curve,
    EMPTY_CURVE,
    Interval,
    Line,
    POINT_TOL,
    Region,
    abstract_ci,
    abstract_rc,
    angles_close,
    concat,
    concretize_cr,
    concretize_ic,
    curve,
    end_slope,
    endpoint,
    is_prefix,
    normalize_angle,
    point_at,
    region_contains,
    seg_from_json,
    seg_length,
    seg_to_json,
    segments_equal,
    slope_at,
    split,
    start_slope,
    variant,
)

# --- strategies -------------------------------------------------------------

lengths = st.floats(min_value=0.5, max_value=40.0,
                    allow_nan=False, allow_infinity=False)
radii = st.floats(min_value=0.5, max_value=10.0,
                  allow_nan=False, allow_infinity=False)
angles = st.floats(min_value=-math.pi, max_value=math.pi,
                   allow_nan=False, allow_infinity=False)
sweeps = st.builds(
    lambda mag, sign: mag * sign,
    st.floats(min_value=0.2, max_value=4.0,
              allow_nan=False, allow_infinity=False),
    st.sampled_from([-1.0, 1.0]))


@st.composite
def curves(draw, max_prims: int = 4):
    """Tangent-continuous primitive chains (the Curve invariant)."""
    phi = draw(angles)
    prims = []
    for _ in range(draw(st.integers(min_value=1, max_value=max_prims))):
        if draw(st.booleans()):
            prims.append(Line(draw(lengths), phi))
        else:
            theta = draw(sweeps)
            prims.append(Arc(draw(radii), phi, theta))
            phi = phi + theta
    return curve(*prims)


intervals = st.builds(Interval, lengths)
regions = st.builds(Region, curves(), st.floats(min_value=0.2, max_value=4.0))
segments = st.one_of(intervals, curves(), regions)


def tangent_integral(c: Curve) -> tuple:
    """Endpoint oracle: integrate the unit tangent over arc length."""
    total = seg_length(c)
    breaks = []
    acc = 0.0
    for p in c.prims:
        acc += seg_length(curve(p))
        breaks.append(acc)
    x, _ = quad(lambda t: math.cos(slope_at(c, t)), 0.0, total,
                points=breaks, limit=300)
    y, _ = quad(lambda t: math.sin(slope_at(c, t)), 0.0, total,
                points=breaks, limit=300)
    return (x, y)


# --- lengths and variants ---------------------------------------------------


def test_variant_tags():
    assert variant(Interval(2.0)) == "interval"
    assert variant(curve(Line(1.0, 0.0))) == "curve"
    assert variant(Region(curve(Line(1.0, 0.0)), 0.5)) == "region"


def test_basic_lengths():
    assert seg_length(Interval(3.0)) == 3.0
    assert seg_length(curve(Line(2.0, 0.3))) == 2.0
    # arc length is radius times sweep magnitude
    assert seg_length(curve(Arc(2.0, 0.0, math.pi))) == pytest.approx(2.0 * math.pi)
    assert seg_length(curve(Arc(2.0, 0.0, -math.pi / 2))) == pytest.approx(math.pi)
    assert seg_length(Region(curve(Line(5.0, 0.0)), 1.0)) == 5.0
    assert seg_length(EMPTY_CURVE) == 0.0


def test_invalid_segments_rejected():
    with pytest.raises(ValueError):
        Interval(-1.0)
    with pytest.raises(ValueError):
        Line(-2.0, 0.0)
    with pytest.raises(ValueError):
        Arc(-1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        # tangent break between primitives
        Curve((Line(1.0, 0.0), Line(1.0, 1.0)))
    with pytest.raises(TypeError):
        curve(Interval(1.0))


# --- planar geometry --------------------------------------------------------


def test_line_endpoint_closed_form():
    for L, phi in [(1.0, 0.0), (2.0, math.pi / 3), (5.0, -2.0)]:
        x, y = endpoint(curve(Line(L, phi)))
        assert x == pytest.approx(L * math.cos(phi), abs=1e-12)
        assert y == pytest.approx(L * math.sin(phi), abs=1e-12)


def test_arc_endpoint_spot_values():
    # quarter turns left/right from heading east, and a half circle
    assert endpoint(curve(Arc(1.0, 0.0, math.pi / 2))) == pytest.approx((1.0, 1.0))
    assert endpoint(curve(Arc(1.0, 0.0, -math.pi / 2))) == pytest.approx((1.0, -1.0))
    assert endpoint(curve(Arc(2.0, 0.0, math.pi))) == pytest.approx((0.0, 4.0))


@settings(max_examples=60, deadline=None)
@given(curves())
def test_endpoint_matches_tangent_integral(c):
    x, y = endpoint(c)
    ox, oy = tangent_integral(c)
    scale = max(1.0, seg_length(c))
    assert math.hypot(x - ox, y - oy) <= 1e-6 * scale


@settings(max_examples=60, deadline=None)
@given(curves(), st.floats(min_value=0.0, max_value=1.0))
def test_point_at_is_partial_endpoint(c, frac):
    a = frac * seg_length(c)
    px, py = point_at(c, a)
    ex, ey = endpoint(split(c, 0.0, a))
    assert math.hypot(px - ex, py - ey) <= 1e-9


def test_point_at_origin_shift():
    c = curve(Line(2.0, 0.0))
    assert point_at(c, 1.0, origin=(3.0, 4.0)) == pytest.approx((4.0, 4.0))


def test_slopes():
    c = curve(Line(1.0, 0.5))
    assert start_slope(c) == pytest.approx(0.5)
    assert end_slope(c) == pytest.approx(0.5)
    a = curve(Arc(1.0, 0.0, math.pi / 2))
    assert start_slope(a) == pytest.approx(0.0)
    assert end_slope(a) == pytest.approx(math.pi / 2)
    assert slope_at(a, seg_length(a) / 2) == pytest.approx(math.pi / 4)
    assert start_slope(EMPTY_CURVE) is None


def test_normalize_angle_and_closeness():
    assert normalize_angle(3 * math.pi) == pytest.approx(math.pi)
    assert normalize_angle(-math.pi) == pytest.approx(math.pi)
    assert angles_close(0.0, 2 * math.pi)
    assert angles_close(-math.pi, math.pi)
    assert not angles_close(0.0, 0.1)
    assert ANGLE_TOL == 1e-9 and POINT_TOL == 1e-9


# --- split / concat laws ----------------------------------------------------


@settings(max_examples=80, deadline=None)
@given(segments, st.floats(min_value=0.0, max_value=1.0),
       st.floats(min_value=0.0, max_value=1.0))
def test_split_length_is_difference(s, f1, f2):
    total = seg_length(s)
    a, b = sorted((f1 * total, f2 * total))
    assert seg_length(split(s, a, b)) == pytest.approx(b - a, abs=1e-9)


@settings(max_examples=80, deadline=None)
@given(segments)
def test_split_whole_is_identity(s):
    assert segments_equal(split(s, 0.0, seg_length(s)), s, tol=1e-9)


@settings(max_examples=80, deadline=None)
@given(segments, st.floats(min_value=0.01, max_value=0.99))
def test_split_then_concat_restores(s, frac):
    m = frac * seg_length(s)
    left = split(s, 0.0, m)
    right = split(s, m, seg_length(s))
    whole = concat(left, right)
    assert whole is not None
    assert segments_equal(whole, s, tol=1e-6)


@settings(max_examples=80, deadline=None)
@given(segments, st.floats(min_value=0.01, max_value=0.99))
def test_prefixes(s, frac):
    pre = split(s, 0.0, frac * seg_length(s))
    assert is_prefix(s, pre)
    assert is_prefix(s, s)


def test_is_prefix_rejects_other_shape():
    s = curve(Line(2.0, 0.0))
    assert not is_prefix(s, curve(Line(1.0, 1.0)))
    assert not is_prefix(s, curve(Line(3.0, 0.0)))


@settings(max_examples=60, deadline=None)
@given(intervals, intervals)
def test_interval_concat_adds(i1, i2):
    assert seg_length(concat(i1, i2)) == pytest.approx(i1.length + i2.length)


def test_concat_partiality():
    # tangent break between curves
    assert concat(curve(Line(1.0, 0.0)), curve(Line(1.0, 1.0))) is None
    # joined when tangents agree
    j = concat(curve(Line(1.0, 0.0)), curve(Arc(1.0, 0.0, 1.0)))
    assert j is not None and seg_length(j) == pytest.approx(2.0)
    # region widths must match
    r1 = Region(curve(Line(1.0, 0.0)), 1.0)
    r2 = Region(curve(Line(1.0, 0.0)), 2.0)
    assert concat(r1, r2) is None
    # mixing sorts is a usage error
    with pytest.raises(TypeError):
        concat(Interval(1.0), curve(Line(1.0, 0.0)))


def test_concat_merges_contiguous_primitives():
    c = concat(curve(Line(1.0, 0.0)), curve(Line(2.0, 0.0)))
    assert c == curve(Line(3.0, 0.0))
    a = concat(curve(Arc(2.0, 0.0, 0.5)), curve(Arc(2.0, 0.5, 0.7)))
    assert a == curve(Arc(2.0, 0.0, 1.2))


def test_empty_curve_is_neutral():
    c = curve(Line(1.5, 0.7))
    assert concat(EMPTY_CURVE, c) == c
    assert concat(c, EMPTY_CURVE) == c


# --- abstraction and concretization ----------------------------------------


@settings(max_examples=60, deadline=None)
@given(curves())
def test_abstract_ci_preserves_length(c):
    assert abstract_ci(c).length == pytest.approx(seg_length(c))


@settings(max_examples=60, deadline=None)
@given(regions)
def test_abstract_rc_is_center(r):
    assert abstract_rc(r) == r.center


@settings(max_examples=60, deadline=None)
@given(intervals, angles)
def test_concretize_then_abstract_interval(iv, phi):
    c = concretize_ic(iv, phi)
    assert variant(c) == "curve"
    assert abstract_ci(c).length == pytest.approx(iv.length)
    assert start_slope(c) == pytest.approx(normalize_angle(phi))


@settings(max_examples=60, deadline=None)
@given(curves(), st.floats(min_value=0.2, max_value=3.0))
def test_concretize_then_abstract_curve(c, w):
    r = concretize_cr(c, w)
    assert variant(r) == "region"
    assert abstract_rc(r) == c


@settings(max_examples=40, deadline=None)
@given(curves(), curves())
def test_abstraction_is_concat_homomorphism(c1, c2):
    joined = concat(c1, c2)
    if joined is None:
        return
    lhs = abstract_ci(joined)
    rhs = concat(abstract_ci(c1), abstract_ci(c2))
    assert lhs.length == pytest.approx(rhs.length)


@settings(max_examples=40, deadline=None)
@given(curves(), st.floats(min_value=0.1, max_value=0.9),
       st.floats(min_value=0.2, max_value=3.0))
def test_abstraction_commutes_with_split(c, frac, w):
    a = frac * seg_length(c)
    r = concretize_cr(c, w)
    assert segments_equal(abstract_rc(split(r, 0.0, a)),
                          split(abstract_rc(r), 0.0, a), tol=1e-9)


# --- region membership ------------------------------------------------------


def test_region_contains_straight_band():
    import random
    rng = random.Random(7)
    reg = Region(curve(Line(10.0, 0.0)), 2.0)
    margin = 1e-3
    for _ in range(500):
        x = rng.uniform(-2.0, 12.0)
        y = rng.uniform(-3.0, 3.0)
        analytic = 0.0 <= x <= 10.0 and abs(y) <= 1.0
        near_boundary = (min(abs(x), abs(x - 10.0)) < margin
                         or abs(abs(y) - 1.0) < margin)
        if near_boundary:
            continue
        assert region_contains(reg, (x, y)) == analytic, (x, y)


def test_region_contains_arc_band():
    import random
    rng = random.Random(8)
    # half circle of radius 2 centred at (0, 2), width 1
    reg = Region(curve(Arc(2.0, 0.0, math.pi)), 1.0)
    margin = 1e-3
    for _ in range(500):
        x = rng.uniform(-3.5, 3.5)
        y = rng.uniform(-1.5, 5.5)
        rho = math.hypot(x, y - 2.0)
        # inside the sweep: any direction from the centre on the right
        # half plane x >= 0 corresponds to an angle actually swept
        analytic = abs(rho - 2.0) <= 0.5 and x >= 0.0
        near_boundary = abs(abs(rho - 2.0) - 0.5) < margin or abs(x) < margin
        if near_boundary:
            continue
        assert region_contains(reg, (x, y)) == analytic, (x, y)


def test_region_contains_respects_origin():
    reg = Region(curve(Line(4.0, 0.0)), 1.0)
    assert region_contains(reg, (11.0, 0.0), origin=(10.0, 0.0))
    assert not region_contains(reg, (11.0, 0.0))


# --- serialization ----------------------------------------------------------


@settings(max_examples=80, deadline=None)
@given(segments)
def test_json_round_trip(s):
    back = seg_from_json(seg_to_json(s))
    assert back == s


def test_json_shapes():
    d = seg_to_json(curve(Line(2.5, 0.0)))
    assert d["kind"] == "curve" and d["prims"][0] == {"line": [2.5, 0.0]}
    assert seg_to_json(Interval(2.0)) == {"kind": "interval", "len": 2.0}
    r = seg_to_json(Region(curve(Arc(1.0, 0.5, -0.5)), 2.0))
    assert r["kind"] == "region" and r["width"] == 2.0
    assert r["center"]["prims"][0] == {"arc": [1.0, 0.5, -0.5]}
    with pytest.raises((ValueError, KeyError)):
        seg_from_json({"kind": "nope"})

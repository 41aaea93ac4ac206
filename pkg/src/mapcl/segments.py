"""Segment algebra: intervals, planar curves, and regions.

Segments are the edge labels of metric-graph road maps.  All three
interpretations share a partial concatenation ``concat`` and a
length-respecting ``split``; curves and regions additionally carry 2D
geometry (endpoints, tangent slopes, point membership).

A curve is a chain of primitives traversed at uniform speed:

* ``Line(length, phi)`` -- straight stretch heading ``phi``;
* ``Arc(radius, phi, theta)`` -- circular stretch entering with tangent
  ``phi`` and sweeping ``theta`` radians (counterclockwise when positive).

Displacement of an arc after arc-length ``l``::

    sgn(theta) * r * (sin(phi + t*theta) - sin(phi),
                      cos(phi) - cos(phi + t*theta)),   t = l / (r*|theta|)

which keeps the tangent direction at ``phi + t*theta`` for either sign of
``theta``.  Concatenation of curves is defined only when the end slope of
the left operand meets the start slope of the right one (mod 2*pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

#: tolerance for slope compatibility checks (radians)
ANGLE_TOL = 1e-9
#: tolerance for point coincidence checks
POINT_TOL = 1e-9
#: snapping window for split offsets landing on primitive boundaries
_CUT_SNAP = 1e-12

Point = tuple[float, float]


def normalize_angle(phi: float) -> float:
    """Reduce an angle to the half-open interval (-pi, pi]."""
    a = math.fmod(phi, 2.0 * math.pi)
    if a > math.pi:
        a -= 2.0 * math.pi
    elif a <= -math.pi:
        a += 2.0 * math.pi
    return a


def angles_close(a: float, b: float, tol: float = ANGLE_TOL) -> bool:
    """Equality of directions modulo 2*pi."""
    d = math.fmod(a - b, 2.0 * math.pi)
    if d < 0:
        d += 2.0 * math.pi
    return d <= tol or (2.0 * math.pi - d) <= tol


def points_close(p: Point, q: Point, tol: float = POINT_TOL) -> bool:
    return math.hypot(p[0] - q[0], p[1] - q[1]) <= tol


@dataclass(frozen=True)
class Interval:
    """One-dimensional segment [0, length]."""

    length: float

    def __post_init__(self):
        if self.length < 0 or not math.isfinite(self.length):
            raise ValueError(f"interval length must be finite and >= 0, got {self.length}")


@dataclass(frozen=True)
class Line:
    """Straight primitive of positive length with heading ``phi``."""

    length: float
    phi: float

    def __post_init__(self):
        if self.length <= 0 or not math.isfinite(self.length):
            raise ValueError(f"line length must be > 0, got {self.length}")


@dataclass(frozen=True)
class Arc:
    """Circular primitive: radius > 0, entry tangent ``phi``, sweep ``theta`` != 0."""

    radius: float
    phi: float
    theta: float

    def __post_init__(self):
        if self.radius <= 0 or not math.isfinite(self.radius):
            raise ValueError(f"arc radius must be > 0, got {self.radius}")
        if self.theta == 0 or not math.isfinite(self.theta):
            raise ValueError("arc sweep must be nonzero and finite")


Primitive = Union[Line, Arc]


def _prim_length(p: Primitive) -> float:
    if isinstance(p, Line):
        return p.length
    return p.radius * abs(p.theta)


def _prim_start_slope(p: Primitive) -> float:
    return p.phi


def _prim_end_slope(p: Primitive) -> float:
    if isinstance(p, Line):
        return p.phi
    return p.phi + p.theta


def _prim_displacement(p: Primitive) -> Point:
    return _prim_point(p, _prim_length(p))


def _prim_point(p: Primitive, l: float) -> Point:
    """Point reached after arc length ``l`` along the primitive, from its start."""
    if isinstance(p, Line):
        return (l * math.cos(p.phi), l * math.sin(p.phi))
    s = 1.0 if p.theta > 0 else -1.0
    a = p.phi + s * l / p.radius
    return (s * p.radius * (math.sin(a) - math.sin(p.phi)),
            s * p.radius * (math.cos(p.phi) - math.cos(a)))


def _prim_slope(p: Primitive, l: float) -> float:
    if isinstance(p, Line):
        return p.phi
    return p.phi + (1.0 if p.theta > 0 else -1.0) * l / p.radius


def _prim_cut(p: Primitive, l1: float, l2: float) -> Optional[Primitive]:
    """Sub-primitive between arc lengths l1 <= l2; None when degenerate."""
    if l2 - l1 <= _CUT_SNAP:
        return None
    if isinstance(p, Line):
        return Line(l2 - l1, p.phi)
    s = 1.0 if p.theta > 0 else -1.0
    return Arc(p.radius, p.phi + s * l1 / p.radius, s * (l2 - l1) / p.radius)


def _mergeable(a: Primitive, b: Primitive) -> Optional[Primitive]:
    if isinstance(a, Line) and isinstance(b, Line) and angles_close(a.phi, b.phi):
        return Line(a.length + b.length, a.phi)
    if (isinstance(a, Arc) and isinstance(b, Arc)
            and abs(a.radius - b.radius) <= POINT_TOL
            and a.theta * b.theta > 0
            and angles_close(a.phi + a.theta, b.phi)):
        return Arc(a.radius, a.phi, a.theta + b.theta)
    return None


def _chain(prims) -> tuple[Primitive, ...]:
    """Normalize a primitive sequence by merging contiguous same-shape pieces."""
    out: list[Primitive] = []
    for p in prims:
        if out:
            m = _mergeable(out[-1], p)
            if m is not None:
                out[-1] = m
                continue
        out.append(p)
    return tuple(out)


@dataclass(frozen=True)
class Curve:
    """Finite chain of primitives with matching tangents at the joints."""

    prims: tuple[Primitive, ...] = ()

    def __post_init__(self):
        for p in self.prims:
            if not isinstance(p, (Line, Arc)):
                raise TypeError(f"not a curve primitive: {p!r}")
        for a, b in zip(self.prims, self.prims[1:]):
            if not angles_close(_prim_end_slope(a), _prim_start_slope(b)):
                raise ValueError(
                    f"tangent break inside curve: {_prim_end_slope(a)!r} -> {_prim_start_slope(b)!r}")


#: the empty curve, neutral element of curve concatenation
EMPTY_CURVE = Curve(())


@dataclass(frozen=True)
class Region:
    """Two-dimensional segment: a center curve swept with constant width."""

    center: Curve
    width: float

    def __post_init__(self):
        if self.width <= 0 or not math.isfinite(self.width):
            raise ValueError(f"region width must be > 0, got {self.width}")


Segment = Union[Interval, Curve, Region]


def curve(*prims: Primitive) -> Curve:
    """Build a curve from primitives, merging contiguous pieces."""
    return Curve(_chain(prims))


def seg_length(s: Segment) -> float:
    if isinstance(s, Interval):
        return s.length
    if isinstance(s, Curve):
        return sum(_prim_length(p) for p in s.prims)
    if isinstance(s, Region):
        return seg_length(s.center)
    raise TypeError(f"not a segment: {s!r}")


def variant(s: Segment) -> str:
    if isinstance(s, Interval):
        return "interval"
    if isinstance(s, Curve):
        return "curve"
    if isinstance(s, Region):
        return "region"
    raise TypeError(f"not a segment: {s!r}")


def start_slope(s: Union[Curve, Region]) -> Optional[float]:
    """Entry tangent direction; None for the empty curve."""
    c = s.center if isinstance(s, Region) else s
    if not c.prims:
        return None
    return normalize_angle(_prim_start_slope(c.prims[0]))


def end_slope(s: Union[Curve, Region]) -> Optional[float]:
    c = s.center if isinstance(s, Region) else s
    if not c.prims:
        return None
    return normalize_angle(_prim_end_slope(c.prims[-1]))


def concat(s1: Segment, s2: Segment) -> Optional[Segment]:
    """Partial concatenation; returns None where undefined.

    Mixing interpretation variants is a usage error, not an undefined
    result, and raises TypeError.
    """
    if variant(s1) != variant(s2):
        raise TypeError(f"cannot concatenate {variant(s1)} with {variant(s2)}")
    if isinstance(s1, Interval):
        return Interval(s1.length + s2.length)
    if isinstance(s1, Curve):
        return _concat_curves(s1, s2)
    assert isinstance(s1, Region) and isinstance(s2, Region)
    if abs(s1.width - s2.width) > POINT_TOL:
        return None
    c = _concat_curves(s1.center, s2.center)
    if c is None:
        return None
    return Region(c, s1.width)


def _concat_curves(c1: Curve, c2: Curve) -> Optional[Curve]:
    if not c1.prims:
        return c2
    if not c2.prims:
        return c1
    if not angles_close(_prim_end_slope(c1.prims[-1]), _prim_start_slope(c2.prims[0])):
        return None
    return Curve(_chain(c1.prims + c2.prims))


def split(s: Segment, a1: float, a2: float) -> Segment:
    """The unique sub-segment between offsets a1 <= a2 of s."""
    total = seg_length(s)
    if a1 < -_CUT_SNAP or a2 > total + max(_CUT_SNAP, total * 1e-12) or a1 > a2 + _CUT_SNAP:
        raise ValueError(f"split range [{a1}, {a2}] outside [0, {total}]")
    a1 = min(max(a1, 0.0), total)
    a2 = min(max(a2, a1), total)
    if isinstance(s, Interval):
        return Interval(a2 - a1)
    if isinstance(s, Region):
        return Region(_curve_cut(s.center, a1, a2), s.width)
    return _curve_cut(s, a1, a2)


def _curve_cut(c: Curve, a1: float, a2: float) -> Curve:
    out: list[Primitive] = []
    pos = 0.0
    for p in c.prims:
        pl = _prim_length(p)
        lo = max(a1 - pos, 0.0)
        hi = min(a2 - pos, pl)
        if hi - lo > _CUT_SNAP:
            piece = _prim_cut(p, lo, hi)
            if piece is not None:
                out.append(piece)
        pos += pl
    return Curve(_chain(out))


def point_at(s: Union[Curve, Region], a: float, origin: Point = (0.0, 0.0)) -> Point:
    """Point reached after arc length ``a`` along the (center) curve."""
    c = s.center if isinstance(s, Region) else s
    x, y = origin
    pos = 0.0
    for p in c.prims:
        pl = _prim_length(p)
        if a <= pos + pl or p is c.prims[-1]:
            dx, dy = _prim_point(p, min(max(a - pos, 0.0), pl))
            return (x + dx, y + dy)
        dx, dy = _prim_displacement(p)
        x, y = x + dx, y + dy
        pos += pl
    return (x, y)


def slope_at(s: Union[Curve, Region], a: float) -> Optional[float]:
    """Tangent direction after arc length ``a``; None on the empty curve."""
    c = s.center if isinstance(s, Region) else s
    if not c.prims:
        return None
    pos = 0.0
    for p in c.prims:
        pl = _prim_length(p)
        if a <= pos + pl or p is c.prims[-1]:
            return normalize_angle(_prim_slope(p, min(max(a - pos, 0.0), pl)))
        pos += pl
    return None


def endpoint(s: Union[Curve, Region], origin: Point = (0.0, 0.0)) -> Point:
    """Displacement from start to end of the (center) curve."""
    c = s.center if isinstance(s, Region) else s
    x, y = origin
    for p in c.prims:
        dx, dy = _prim_displacement(p)
        x, y = x + dx, y + dy
    return (x, y)


# ---------------------------------------------------------------------------
# abstraction / concretization

def abstract_ci(c: Curve) -> Interval:
    """Forget geometry, keep length."""
    return Interval(seg_length(c))


def abstract_rc(g: Region) -> Curve:
    """Forget width, keep the center curve."""
    return g.center


def concretize_ic(i: Interval, phi: float, theta: float = 0.0) -> Curve:
    """Bend an interval into a curve of the same length.

    ``theta`` = 0 yields a straight line heading ``phi``; otherwise a
    single arc sweeping ``theta`` (radius chosen to preserve length).
    """
    if i.length == 0:
        return EMPTY_CURVE
    if theta == 0.0:
        return Curve((Line(i.length, phi),))
    return Curve((Arc(i.length / abs(theta), phi, theta),))


def concretize_cr(c: Curve, width: float) -> Region:
    return Region(c, width)


# ---------------------------------------------------------------------------
# region membership

def region_contains(g: Region, p: Point, origin: Point = (0.0, 0.0),
                    tol: float = POINT_TOL) -> bool:
    """Whether point ``p`` lies in the region anchored at ``origin``.

    Each line primitive contributes a rectangle, each arc primitive a ring
    sector; the region is their union along the center curve.
    """
    half = g.width / 2.0
    base = origin
    for prim in g.center.prims:
        if isinstance(prim, Line):
            if _in_rectangle(prim, base, p, half, tol):
                return True
        else:
            if _in_ring_sector(prim, base, p, half, tol):
                return True
        dx, dy = _prim_displacement(prim)
        base = (base[0] + dx, base[1] + dy)
    return False


def _in_rectangle(prim: Line, base: Point, p: Point, half: float, tol: float) -> bool:
    dx, dy = p[0] - base[0], p[1] - base[1]
    c, s = math.cos(prim.phi), math.sin(prim.phi)
    along = dx * c + dy * s
    across = -dx * s + dy * c
    return -tol <= along <= prim.length + tol and abs(across) <= half + tol


def _in_ring_sector(prim: Arc, base: Point, p: Point, half: float, tol: float) -> bool:
    r, phi, theta = prim.radius, prim.phi, prim.theta
    if theta > 0:
        center = (base[0] - r * math.sin(phi), base[1] + r * math.cos(phi))
        a0 = phi - math.pi / 2.0
    else:
        center = (base[0] + r * math.sin(phi), base[1] - r * math.cos(phi))
        a0 = phi + math.pi / 2.0
    rho = math.hypot(p[0] - center[0], p[1] - center[1])
    if not (max(r - half, 0.0) - tol <= rho <= r + half + tol):
        return False
    if rho <= tol:
        # at the circle center; only inside when the ring collapses
        return r <= half + tol
    ang = math.atan2(p[1] - center[1], p[0] - center[0])
    # sweep runs from a0 to a0 + theta
    d = math.fmod(ang - a0, 2.0 * math.pi)
    if theta > 0:
        if d < 0:
            d += 2.0 * math.pi
        return d <= theta + tol / max(rho, tol)
    if d > 0:
        d -= 2.0 * math.pi
    return d >= theta - tol / max(rho, tol)


# ---------------------------------------------------------------------------
# equality (semantic, tolerance-based)

def segments_equal(s1: Segment, s2: Segment, tol: float = POINT_TOL) -> bool:
    """Approximate structural equality used by the logic semantics."""
    if variant(s1) != variant(s2):
        return False
    if isinstance(s1, Interval):
        return abs(s1.length - s2.length) <= tol
    if isinstance(s1, Region):
        return (abs(s1.width - s2.width) <= tol
                and segments_equal(s1.center, s2.center, tol))
    assert isinstance(s1, Curve) and isinstance(s2, Curve)
    if len(s1.prims) != len(s2.prims):
        return False
    for a, b in zip(s1.prims, s2.prims):
        if isinstance(a, Line) != isinstance(b, Line):
            return False
        if isinstance(a, Line):
            if abs(a.length - b.length) > tol or not angles_close(a.phi, b.phi, max(tol, ANGLE_TOL)):
                return False
        else:
            if (abs(a.radius - b.radius) > tol
                    or not angles_close(a.phi, b.phi, max(tol, ANGLE_TOL))
                    or abs(a.theta - b.theta) > max(tol, ANGLE_TOL)):
                return False
    return True


def is_prefix(whole: Segment, prefix: Segment, tol: float = 1e-6) -> bool:
    """Whether ``prefix`` coincides with the initial part of ``whole``."""
    lp, lw = seg_length(prefix), seg_length(whole)
    if lp > lw + tol:
        return False
    return segments_equal(split(whole, 0.0, min(lp, lw)), prefix, tol)


# ---------------------------------------------------------------------------
# serialization

def seg_to_json(s: Segment):
    if isinstance(s, Interval):
        return {"kind": "interval", "len": s.length}
    if isinstance(s, Curve):
        prims = []
        for p in s.prims:
            if isinstance(p, Line):
                prims.append({"line": [p.length, p.phi]})
            else:
                prims.append({"arc": [p.radius, p.phi, p.theta]})
        return {"kind": "curve", "prims": prims}
    if isinstance(s, Region):
        return {"kind": "region", "center": seg_to_json(s.center), "width": s.width}
    raise TypeError(f"not a segment: {s!r}")


def seg_from_json(d) -> Segment:
    try:
        kind = d["kind"]
        if kind == "interval":
            return Interval(float(d["len"]))
        if kind == "curve":
            prims = []
            for pd in d["prims"]:
                if "line" in pd:
                    a, phi = pd["line"]
                    prims.append(Line(float(a), float(phi)))
                else:
                    r, phi, theta = pd["arc"]
                    prims.append(Arc(float(r), float(phi), float(theta)))
            return Curve(tuple(prims))
        if kind == "region":
            return Region(seg_from_json(d["center"]), float(d["width"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad segment JSON: {d!r}") from exc
    raise ValueError(f"bad segment kind: {d!r}")

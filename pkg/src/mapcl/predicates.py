"""Derived predicates over maps and object states.

Positional predicates (right-of, opposite, turn headings) read edge
geometry and therefore require curve-sorted maps; reachability
predicates (meets, inside) work on any segment sort.  Object arguments
are duck-typed: anything with pos/it/sp/wt/ln attributes.
"""

from __future__ import annotations

import math
from typing import Iterable, Optional

from .graph import AtVertex, MetricGraph, OnEdge, Position, normalize_position, rides
from .segments import Arc, Curve, Line, Region, Segment, seg_length, segments_equal, split
from .slarith import UnsupportedFragment

ANGLE_TOL = 1e-9
PREFIX_TOL = 1e-6

# defaults for the braking model; overridable through config
B_MAX = 6.0
T_REACT = 0.5


def _central_prims(seg: Segment):
    """Primitive chain of a curve (or a region's center line)."""
    if isinstance(seg, Curve):
        return seg.prims
    if isinstance(seg, Region):
        return seg.center.prims
    return None


def _single_line(seg: Segment) -> Optional[Line]:
    prims = _central_prims(seg)
    if prims is not None and len(prims) == 1 and isinstance(prims[0], Line):
        return prims[0]
    return None


def _single_arc(seg: Segment) -> Optional[Arc]:
    prims = _central_prims(seg)
    if prims is not None and len(prims) == 1 and isinstance(prims[0], Arc):
        return prims[0]
    return None


def _angles_eq(a: float, b: float, tol: float = ANGLE_TOL) -> bool:
    d = (a - b) % (2.0 * math.pi)
    return min(d, 2.0 * math.pi - d) <= tol


def _require_curves(g: MetricGraph, what: str) -> None:
    if g.kind == "interval":
        raise UnsupportedFragment(
            f"{what} needs curve geometry; the map is interval-sorted")


def right_of(g: MetricGraph, x: str, x2: str, X: Iterable[str]) -> bool:
    """x approaches from the right of x2: some common target in X is
    reached by a straight edge from x2 and a quarter-turn-right arc from
    x starting perpendicular to it."""
    _require_curves(g, "right-of")
    targets = set(X)
    for e1 in g.out_edges(x2):
        line = _single_line(e1.seg)
        if line is None or e1.dst not in targets:
            continue
        for e2 in g.out_edges(x):
            arc = _single_arc(e2.seg)
            if arc is None or e2.dst != e1.dst:
                continue
            if _angles_eq(arc.theta, -math.pi / 2.0) and \
                    _angles_eq(arc.phi, line.phi + math.pi / 2.0):
                return True
    return False


def opposite(g: MetricGraph, x: str, x2: str, X: Iterable[str]) -> bool:
    """x and x2 face each other: equal-length straight edges into X whose
    directions differ by a half turn."""
    _require_curves(g, "opposite")
    targets = set(X)
    for e1 in g.out_edges(x):
        l1 = _single_line(e1.seg)
        if l1 is None or e1.dst not in targets:
            continue
        for e2 in g.out_edges(x2):
            l2 = _single_line(e2.seg)
            if l2 is None or e2.dst not in targets:
                continue
            if abs(l1.length - l2.length) <= ANGLE_TOL and \
                    _angles_eq(l2.phi, l1.phi + math.pi):
                return True
    return False


def _is_prefix(whole: Segment, prefix: Segment, tol: float = PREFIX_TOL) -> bool:
    lp = seg_length(prefix)
    if lp > seg_length(whole) + tol:
        return False
    return segments_equal(split(whole, 0.0, min(lp, seg_length(whole))), prefix, tol)


def meets_distances(g: MetricGraph, cpos: Position, cit: Segment,
                    opos: Position) -> list[float]:
    """Lengths of rides from cpos to opos that prefix the itinerary cit.
    Objects without an itinerary (static or parked) meet nothing."""
    if cpos is None or opos is None or cit is None:
        return []
    out = []
    for r in rides(g, cpos, opos):
        if _is_prefix(cit, r.label):
            d = seg_length(r.label)
            if not any(abs(d - x) <= PREFIX_TOL for x in out):
                out.append(d)
    return sorted(out)


def meets_value(g: MetricGraph, obj, other) -> list[float]:
    return meets_distances(g, obj.pos, obj.it, other.pos)


def meets(g: MetricGraph, state, c: str, d: float, o: str,
          tol: float = PREFIX_TOL) -> bool:
    """c reaches the position of o at riding distance d along its itinerary."""
    co, oo = state.objects[c], state.objects[o]
    return any(abs(d - x) <= tol for x in meets_value(g, co, oo))


def inside_pos(g: MetricGraph, pos: Position, X: Iterable[str]) -> bool:
    """pos lies in the subgraph induced by the vertex set X."""
    verts = set(X)
    pos = normalize_position(g, pos)
    if isinstance(pos, AtVertex):
        return pos.vertex in verts
    e = g.edge(pos.edge)
    return e.src in verts and e.dst in verts


def inside(g: MetricGraph, state, o: str, X: Iterable[str],
           lane: Optional[float] = None) -> bool:
    obj = state.objects[o]
    if obj.pos is None or not inside_pos(g, obj.pos, X):
        return False
    if lane is None:
        return True
    return abs(getattr(obj, "ln", 0.0) - lane) <= ANGLE_TOL


def _heading_matches(seg: Segment, kind: str) -> bool:
    if kind == "straight":
        return _single_line(seg) is not None
    arc = _single_arc(seg)
    if arc is None:
        return False
    want = -math.pi / 2.0 if kind == "right" else math.pi / 2.0
    return _angles_eq(arc.theta, want)


def heading(g: MetricGraph, pos: Position, it: Segment, X: Iterable[str],
            kind: str) -> bool:
    """The itinerary starts with a straight/right-turn/left-turn edge of
    the X-subgraph leaving the current vertex."""
    if kind not in ("straight", "right", "left"):
        raise ValueError(f"bad heading kind {kind!r}")
    _require_curves(g, f"heading ({kind})")
    if pos is None or it is None:
        return False
    pos = normalize_position(g, pos)
    if not isinstance(pos, AtVertex):
        return False
    verts = set(X)
    if pos.vertex not in verts:
        return False
    for e in g.out_edges(pos.vertex):
        if e.dst not in verts:
            continue
        if _heading_matches(e.seg, kind) and _is_prefix(it, e.seg):
            return True
    return False


def go_straight(g: MetricGraph, state, c: str, X: Iterable[str]) -> bool:
    obj = state.objects[c]
    return heading(g, obj.pos, obj.it, X, "straight")


def turn_right(g: MetricGraph, state, c: str, X: Iterable[str]) -> bool:
    obj = state.objects[c]
    return heading(g, obj.pos, obj.it, X, "right")


def turn_left(g: MetricGraph, state, c: str, X: Iterable[str]) -> bool:
    obj = state.objects[c]
    return heading(g, obj.pos, obj.it, X, "left")


def safe_dist(obj1, obj2, b_max: float = B_MAX, t_react: float = T_REACT) -> float:
    """Reaction distance plus the braking-distance difference, floored at 0."""
    sp1 = getattr(obj1, "sp", 0.0)
    sp2 = getattr(obj2, "sp", 0.0)
    braking = sp1 * sp1 / (2.0 * b_max) - sp2 * sp2 / (2.0 * b_max)
    return sp1 * t_react + max(0.0, braking)


def centrifugal_force(obj) -> Optional[float]:
    """weight * sp^2 / r against the first itinerary primitive; None when
    the itinerary does not start on an arc."""
    prims = _central_prims(getattr(obj, "it", None)) \
        if isinstance(getattr(obj, "it", None), (Curve, Region)) else None
    if not prims or not isinstance(prims[0], Arc):
        return None
    weight = getattr(obj, "weight", 1.0)
    sp = getattr(obj, "sp", 0.0)
    return weight * sp * sp / prims[0].radius


def centrifugal_ok(obj, bound: float, tol: float = ANGLE_TOL) -> bool:
    force = centrifugal_force(obj)
    return force is None or force <= bound + tol

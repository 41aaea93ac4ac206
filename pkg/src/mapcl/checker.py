"""Model checking of graph-logic formulas over concrete maps and states.

Two evaluation regimes cooperate:

* direct recursion for ground formulas — vertex, object, and road
  quantifiers range over finite sets, edge-set operators enumerate
  subset decompositions, atoms evaluate against the graph and the world
  state;
* a residue pipeline for real/segment quantifiers — the subformula is
  partially evaluated against the graph (vertex quantifiers expanded,
  ride and distance atoms enumerated), leaving an arithmetic/segment
  residue solved by exact linear arithmetic.

Term evaluation can fail (missing edge, ambiguous segment, undefined
concatenation, offset out of range); a failure makes the smallest
enclosing atom false and is recorded in the diagnostic trace.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from typing import Optional

from . import predicates as P
from .graph import (
    AtVertex, MetricGraph, OnEdge, Position, distance,
    normalize_position, positions_equal, rides,
)
from .maps import Road, decompose_map
from .segments import (
    Arc, Curve, Interval, Line, Region, Segment, concat, seg_length,
    segments_equal,
)
from .logic import ast as A
from .slarith import (
    ResourceLimit, UnsupportedFragment, fold_arith, lower, solve,
)
from .translate import SymEdge, TransCtx, sand, snot, sor, tr

DIST_TOL = 1e-9
MEETS_TOL = 1e-6
COALESCE_CAP = 16
TRACE_CAP = 200


class EvalFailure(Exception):
    """A term failed to evaluate; the enclosing atom is false."""


class CheckCtx:
    def __init__(self, g: MetricGraph, state=None, *, b_max: float = P.B_MAX,
                 t_react: float = P.T_REACT, coalesce_cap: int = COALESCE_CAP,
                 trace: Optional[list] = None):
        self.g = g
        self.state = state
        self.b_max = b_max
        self.t_react = t_react
        self.coalesce_cap = coalesce_cap
        self.trace = trace
        self._memo: dict = {}
        self._structure = None
        self.all_eids = frozenset(e.eid for e in g.edges)

    @property
    def structure(self):
        if self._structure is None:
            self._structure = decompose_map(self.g)
        return self._structure

    def variant(self) -> str:
        k = self.g.kind
        if k == "curve":
            return "curve"
        if k == "region":
            return "region"
        return "iv"

    def note(self, msg: str) -> None:
        if self.trace is not None and len(self.trace) < TRACE_CAP:
            self.trace.append(msg)

    def obj(self, env: dict, var: str):
        if var not in env:
            raise EvalFailure(f"unbound object variable {var!r}")
        oid = env[var]
        if self.state is None or oid not in self.state.objects:
            raise EvalFailure(f"no object {oid!r} in the world state")
        return self.state.objects[oid]


def _env_key(env: dict):
    return tuple(sorted(env.items(), key=lambda kv: kv[0]))


# ---------------------------------------------------------------------------
# term evaluation (Table-style, failures raised as EvalFailure)

_NUM_ATTRS = {"sp", "wt", "ln", "weight", "cl", "kind"}


def eval_arith(ctx: CheckCtx, env: dict, t) -> float:
    if isinstance(t, A.Const):
        return t.value
    if isinstance(t, A.RVar):
        if t.name not in env:
            raise EvalFailure(f"unbound real variable {t.name!r}")
        return float(env[t.name])
    if isinstance(t, A.Add):
        return eval_arith(ctx, env, t.left) + eval_arith(ctx, env, t.right)
    if isinstance(t, A.Sub):
        return eval_arith(ctx, env, t.left) - eval_arith(ctx, env, t.right)
    if isinstance(t, A.Mul):
        return eval_arith(ctx, env, t.left) * eval_arith(ctx, env, t.right)
    if isinstance(t, A.LenT):
        return seg_length(eval_seg(ctx, env, t.seg))
    if isinstance(t, A.AttrNum):
        ob = ctx.obj(env, t.obj)
        if t.attr == "id":
            return float(ob.uid)
        if t.attr in _NUM_ATTRS:
            try:
                return float(getattr(ob, t.attr))
            except (AttributeError, TypeError):
                raise EvalFailure(
                    f"object {env[t.obj]!r} has no attribute {t.attr!r}")
        raise EvalFailure(f"unknown numeric attribute {t.attr!r}")
    if isinstance(t, A.LanesOf):
        road = env.get(t.road)
        if not isinstance(road, Road):
            raise EvalFailure(f"unbound road variable {t.road!r}")
        return float(road.lanes)
    if isinstance(t, A.SafeDist):
        o1 = ctx.obj(env, t.obj1)
        o2 = ctx.obj(env, t.obj2)
        return P.safe_dist(o1, o2, ctx.b_max, ctx.t_react)
    raise TypeError(f"not an arithmetic term: {t!r}")


def eval_seg(ctx: CheckCtx, env: dict, t) -> Segment:
    if isinstance(t, A.SegConst):
        return t.value
    if isinstance(t, A.SVar):
        if t.name not in env:
            raise EvalFailure(f"unbound segment variable {t.name!r}")
        return env[t.name]
    if isinstance(t, A.SegCtor):
        args = [eval_arith(ctx, env, a) for a in t.args]
        try:
            if t.kind == "iv":
                return Interval(args[0])
            if t.kind == "line":
                return Curve((Line(args[0], args[1]),))
            return Curve((Arc(args[0], args[1], args[2]),))
        except (ValueError, TypeError) as exc:
            raise EvalFailure(f"segment constructor failed: {exc}")
    if isinstance(t, A.SegRegion):
        center = eval_seg(ctx, env, t.center)
        width = eval_arith(ctx, env, t.width)
        if not isinstance(center, Curve):
            raise EvalFailure("region center is not a curve")
        try:
            return Region(center, width)
        except (ValueError, TypeError) as exc:
            raise EvalFailure(f"region construction failed: {exc}")
    if isinstance(t, A.SegConcat):
        s1 = eval_seg(ctx, env, t.left)
        s2 = eval_seg(ctx, env, t.right)
        out = concat(s1, s2)
        if out is None:
            raise EvalFailure("concatenation undefined (tangent break)")
        return out
    if isinstance(t, A.AttrIt):
        ob = ctx.obj(env, t.obj)
        it = getattr(ob, "it", None)
        if it is None:
            raise EvalFailure(f"object {env[t.obj]!r} has no itinerary")
        return it
    raise TypeError(f"not a segment term: {t!r}")


def eval_pos(ctx: CheckCtx, env: dict, E: frozenset, p) -> Position:
    """Resolve a position term against the current edge subset."""
    g = ctx.g
    if isinstance(p, A.VertexP):
        v = env.get(p.var, p.var)
        if v not in g.vertices:
            raise EvalFailure(f"unbound vertex variable {p.var!r}")
        return AtVertex(v)
    if isinstance(p, A.PosConst):
        try:
            return normalize_position(g, p.value)
        except ValueError as exc:
            raise EvalFailure(str(exc))
    if isinstance(p, A.AttrPos):
        ob = ctx.obj(env, p.obj)
        try:
            return normalize_position(g, ob.pos)
        except ValueError as exc:
            raise EvalFailure(str(exc))
    if isinstance(p, (A.FwdP, A.BwdP)):
        v = env.get(p.vertex, p.vertex)
        if v not in g.vertices:
            raise EvalFailure(f"unbound vertex variable {p.vertex!r}")
        seg = eval_seg(ctx, env, p.seg)
        off = eval_arith(ctx, env, p.off)
        pool = (g.out_edges(v) if isinstance(p, A.FwdP) else g.in_edges(v))
        cands = [e for e in pool if e.eid in E and segments_equal(e.seg, seg)]
        if len(cands) != 1:
            raise EvalFailure(
                f"{'no' if not cands else 'ambiguous'} edge at {v!r} labelled "
                f"by the given segment")
        e = cands[0]
        if not (0.0 < off < e.length):
            raise EvalFailure(
                f"offset {off} outside the open interval (0, {e.length})")
        if isinstance(p, A.FwdP):
            return OnEdge(e.eid, off)
        return OnEdge(e.eid, e.length - off)
    raise TypeError(f"not a position term: {p!r}")


def _place_vertices(ctx: CheckCtx, env: dict, place) -> frozenset:
    if isinstance(place, frozenset):
        out = set()
        for name in place:
            v = env.get(name, name)
            if not isinstance(v, str) or v not in ctx.g.vertices:
                raise EvalFailure(f"{name!r} does not name a vertex")
            out.add(v)
        return frozenset(out)
    road = env.get(place)
    if not isinstance(road, Road):
        raise EvalFailure(f"unbound road variable {place!r}")
    return _road_vertices(ctx.g, road)


def _road_vertices(g: MetricGraph, road: Road) -> frozenset:
    verts = set()
    for eid in road.edges:
        verts.add(eid[0])
        verts.add(eid[1])
    return frozenset(verts)


def _road_segment(g: MetricGraph, road: Road) -> Segment:
    seg = None
    for eid in road.edges:
        nxt = g.edge(eid).seg
        seg = nxt if seg is None else concat(seg, nxt)
        if seg is None:
            raise EvalFailure(
                f"road {road.name!r} segments do not concatenate")
    if seg is None:
        raise EvalFailure(f"road {road.name!r} has no edges")
    return seg


def _vertex_ref(ctx: CheckCtx, env: dict, name: str) -> str:
    v = env.get(name, name)
    if not isinstance(v, str) or v not in ctx.g.vertices:
        raise EvalFailure(f"{name!r} does not name a vertex")
    return v


# ---------------------------------------------------------------------------
# direct recursion

def _ev(ctx: CheckCtx, env: dict, E: frozenset, f) -> bool:
    key = (id(f), E, _env_key(env))
    hit = ctx._memo.get(key)
    if hit is not None:
        return hit
    out = _ev_raw(ctx, env, E, f)
    ctx._memo[key] = out
    return out


def _atom(ctx: CheckCtx, f, fn) -> bool:
    try:
        return fn()
    except EvalFailure as exc:
        ctx.note(f"(atom {type(f).__name__} false: {exc})")
        return False


def _ev_raw(ctx: CheckCtx, env: dict, E: frozenset, f) -> bool:
    g = ctx.g
    if isinstance(f, A.BoolConst):
        return f.value
    if isinstance(f, A.Leq):
        return _atom(ctx, f, lambda: eval_arith(ctx, env, f.left)
                     <= eval_arith(ctx, env, f.right))
    if isinstance(f, A.SegEq):
        return _atom(ctx, f, lambda: segments_equal(
            eval_seg(ctx, env, f.left), eval_seg(ctx, env, f.right)))
    if isinstance(f, A.EdgeA):
        def edge_atom():
            if len(E) != 1:
                return False
            (eid,) = E
            e = g.edge(eid)
            return env.get(f.src, f.src) == e.src \
                and env.get(f.dst, f.dst) == e.dst \
                and segments_equal(eval_seg(ctx, env, f.seg), e.seg)
        return _atom(ctx, f, edge_atom)
    if isinstance(f, A.PosEq):
        return _atom(ctx, f, lambda: positions_equal(
            g, eval_pos(ctx, env, E, f.left), eval_pos(ctx, env, E, f.right)))
    if isinstance(f, A.RideA):
        def ride_atom():
            p = eval_pos(ctx, env, E, f.frm)
            q = eval_pos(ctx, env, E, f.to)
            z = eval_seg(ctx, env, f.seg)
            return any(segments_equal(r.label, z)
                       for r in rides(g, p, q, edge_ids=E))
        return _atom(ctx, f, ride_atom)
    if isinstance(f, A.DistEq):
        def dist_atom():
            p = eval_pos(ctx, env, E, f.frm)
            q = eval_pos(ctx, env, E, f.to)
            t = eval_arith(ctx, env, f.num)
            d = distance(g, p, q, edge_ids=E)
            return math.isfinite(d) and abs(d - t) <= DIST_TOL
        return _atom(ctx, f, dist_atom)
    if isinstance(f, A.ObjEq):
        return _atom(ctx, f, lambda: env[f.left] == env[f.right]
                     if f.left in env and f.right in env
                     else _fail(f"unbound object variable in {f!r}"))
    if isinstance(f, A.RoadA):
        def road_atom():
            road = env.get(f.road)
            if not isinstance(road, Road):
                raise EvalFailure(f"unbound road variable {f.road!r}")
            seg = eval_seg(ctx, env, f.seg)
            return env.get(f.src) == road.entrance \
                and env.get(f.dst) == road.exit \
                and segments_equal(seg, _road_segment(g, road))
        return _atom(ctx, f, road_atom)
    if isinstance(f, A.Meets):
        def meets_atom():
            co = ctx.obj(env, f.obj)
            oo = ctx.obj(env, f.other)
            d = eval_arith(ctx, env, f.dist)
            return any(abs(d - x) <= MEETS_TOL
                       for x in P.meets_value(g, co, oo))
        return _atom(ctx, f, meets_atom)
    if isinstance(f, A.Inside):
        def inside_atom():
            ob = ctx.obj(env, f.obj)
            verts = _place_vertices(ctx, env, f.place)
            if not P.inside_pos(g, ob.pos, verts):
                return False
            if f.lane is None:
                return True
            lane = eval_arith(ctx, env, f.lane)
            return abs(getattr(ob, "ln", 0.0) - lane) <= P.ANGLE_TOL
        return _atom(ctx, f, inside_atom)
    if isinstance(f, A.RightOf):
        return _atom(ctx, f, lambda: P.right_of(
            g, _vertex_ref(ctx, env, f.x), _vertex_ref(ctx, env, f.y),
            _place_vertices(ctx, env, f.place)))
    if isinstance(f, A.OppositeA):
        return _atom(ctx, f, lambda: P.opposite(
            g, _vertex_ref(ctx, env, f.x), _vertex_ref(ctx, env, f.y),
            _place_vertices(ctx, env, f.place)))
    if isinstance(f, A.Heading):
        def heading_atom():
            ob = ctx.obj(env, f.obj)
            verts = _place_vertices(ctx, env, f.place)
            return P.heading(g, ob.pos, ob.it, verts, f.kind)
        return _atom(ctx, f, heading_atom)
    if isinstance(f, A.CentrifugalOk):
        def centrifugal_atom():
            ob = ctx.obj(env, f.obj)
            return P.centrifugal_ok(ob, eval_arith(ctx, env, f.bound))
        return _atom(ctx, f, centrifugal_atom)
    if isinstance(f, A.Not):
        return not _ev(ctx, env, E, f.body)
    if isinstance(f, A.And):
        return _ev(ctx, env, E, f.left) and _ev(ctx, env, E, f.right)
    if isinstance(f, A.Or):
        return _ev(ctx, env, E, f.left) or _ev(ctx, env, E, f.right)
    if isinstance(f, A.Implies):
        return (not _ev(ctx, env, E, f.left)) or _ev(ctx, env, E, f.right)
    if isinstance(f, A.Coalesce):
        edges = sorted(E)
        if len(edges) > ctx.coalesce_cap:
            raise ResourceLimit(
                f"coalescing over {len(edges)} edges exceeds the cap "
                f"({ctx.coalesce_cap})")
        for marks in itertools.product((0, 1, 2), repeat=len(edges)):
            e1 = frozenset(e for e, m in zip(edges, marks) if m != 1)
            e2 = frozenset(e for e, m in zip(edges, marks) if m != 0)
            if _ev(ctx, env, e1, f.left) and _ev(ctx, env, e2, f.right):
                return True
        return False
    if isinstance(f, A.Closure):
        edges = sorted(E)
        if len(edges) > ctx.coalesce_cap:
            raise ResourceLimit(
                f"closure over {len(edges)} edges exceeds the cap "
                f"({ctx.coalesce_cap})")
        for r in range(len(edges) + 1):
            for combo in itertools.combinations(edges, r):
                if _ev(ctx, env, frozenset(combo), f.body):
                    return True
        return False
    if isinstance(f, A.Exists):
        if f.sort == "vertex":
            return any(_ev(ctx, {**env, f.var: v}, E, f.body)
                       for v in g.vertices)
        if f.sort == "obj":
            if ctx.state is None:
                raise UnsupportedFragment(
                    f"object quantifier {f.var!r} without a world state")
            return any(_ev(ctx, {**env, f.var: oid}, E, f.body)
                       for oid in sorted(ctx.state.objects))
        if f.sort == "road":
            return any(_ev(ctx, {**env, f.var: road}, E, f.body)
                       for road in ctx.structure.roads)
        return _residue_check(ctx, env, E, f)
    raise TypeError(f"not a formula: {f!r}")


def _fail(msg: str):
    raise EvalFailure(msg)


# ---------------------------------------------------------------------------
# residue pipeline

def _resolve(ctx: CheckCtx, env: dict, f):
    """Partially evaluate object/road structure and bound variables,
    leaving a pure graph-logic formula ready for translation."""
    res = lambda g: _resolve(ctx, env, g)

    def arith(t):
        if isinstance(t, A.Const):
            return t
        if isinstance(t, A.RVar):
            return A.num(float(env[t.name])) if t.name in env else t
        if isinstance(t, (A.Add, A.Sub, A.Mul)):
            return type(t)(arith(t.left), arith(t.right))
        if isinstance(t, A.LenT):
            return A.LenT(seg(t.seg))
        # state-dependent terms are ground once objects are bound
        return A.num(eval_arith(ctx, env, t))

    def seg(t):
        if isinstance(t, A.SegConst):
            return t
        if isinstance(t, A.SVar):
            return A.SegConst(env[t.name]) if t.name in env else t
        if isinstance(t, A.SegCtor):
            return A.SegCtor(t.kind, tuple(arith(a) for a in t.args))
        if isinstance(t, A.SegRegion):
            return A.SegRegion(seg(t.center), arith(t.width))
        if isinstance(t, A.SegConcat):
            return A.SegConcat(seg(t.left), seg(t.right))
        if isinstance(t, A.AttrIt):
            return A.SegConst(eval_seg(ctx, env, t))
        raise TypeError(f"not a segment term: {t!r}")

    def pos(p):
        if isinstance(p, A.VertexP):
            return p
        if isinstance(p, A.PosConst):
            return A.PosConst(normalize_position(ctx.g, p.value))
        if isinstance(p, A.AttrPos):
            return A.PosConst(eval_pos(ctx, env, ctx.all_eids, p))
        if isinstance(p, A.FwdP):
            return A.FwdP(p.vertex, seg(p.seg), arith(p.off))
        if isinstance(p, A.BwdP):
            return A.BwdP(arith(p.off), seg(p.seg), p.vertex)
        raise TypeError(f"not a position term: {p!r}")

    if isinstance(f, A.BoolConst):
        return f
    if isinstance(f, A.Leq):
        return A.Leq(arith(f.left), arith(f.right))
    if isinstance(f, A.SegEq):
        return A.SegEq(seg(f.left), seg(f.right))
    if isinstance(f, A.EdgeA):
        src = env.get(f.src, f.src)
        dst = env.get(f.dst, f.dst)
        return A.EdgeA(src, seg(f.seg), dst)
    if isinstance(f, A.PosEq):
        return A.PosEq(pos(f.left), pos(f.right))
    if isinstance(f, A.RideA):
        return A.RideA(pos(f.frm), seg(f.seg), pos(f.to))
    if isinstance(f, A.DistEq):
        return A.DistEq(pos(f.frm), pos(f.to), arith(f.num))
    if isinstance(f, A.ObjEq):
        return A.BoolConst(env[f.left] == env[f.right])
    if isinstance(f, A.RoadA):
        road = env.get(f.road)
        if not isinstance(road, Road):
            raise UnsupportedFragment(f"unbound road variable {f.road!r}")
        rseg = A.SegConst(_road_segment(ctx.g, road))
        return sand(
            A.PosEq(_pos_of(f.src, env), A.PosConst(AtVertex(road.entrance))),
            A.PosEq(_pos_of(f.dst, env), A.PosConst(AtVertex(road.exit))),
            A.SegEq(seg(f.seg), rseg))
    if isinstance(f, A.Meets):
        co = ctx.obj(env, f.obj)
        oo = ctx.obj(env, f.other)
        dterm = arith(f.dist)
        cands = P.meets_value(ctx.g, co, oo)
        dval = fold_arith(dterm)
        if dval is not None:
            return A.BoolConst(any(abs(float(dval) - x) <= MEETS_TOL
                                   for x in cands))
        return sor(*[A.arith_eq(dterm, A.num(x)) for x in cands])
    if isinstance(f, A.Inside):
        ob = ctx.obj(env, f.obj)
        verts = _place_vertices(ctx, env, f.place)
        if not P.inside_pos(ctx.g, ob.pos, verts):
            return A.BoolConst(False)
        if f.lane is None:
            return A.BoolConst(True)
        lane = arith(f.lane)
        return A.arith_eq(lane, A.num(getattr(ob, "ln", 0.0)))
    if isinstance(f, A.RightOf):
        return A.BoolConst(P.right_of(
            ctx.g, _vertex_ref(ctx, env, f.x), _vertex_ref(ctx, env, f.y),
            _place_vertices(ctx, env, f.place)))
    if isinstance(f, A.OppositeA):
        return A.BoolConst(P.opposite(
            ctx.g, _vertex_ref(ctx, env, f.x), _vertex_ref(ctx, env, f.y),
            _place_vertices(ctx, env, f.place)))
    if isinstance(f, A.Heading):
        ob = ctx.obj(env, f.obj)
        verts = _place_vertices(ctx, env, f.place)
        return A.BoolConst(P.heading(ctx.g, ob.pos, ob.it, verts, f.kind))
    if isinstance(f, A.CentrifugalOk):
        ob = ctx.obj(env, f.obj)
        force = P.centrifugal_force(ob)
        if force is None:
            return A.BoolConst(True)
        return A.Leq(A.num(force), arith(f.bound))
    if isinstance(f, A.Not):
        return snot(res(f.body))
    if isinstance(f, A.And):
        return sand(res(f.left), res(f.right))
    if isinstance(f, A.Or):
        return sor(res(f.left), res(f.right))
    if isinstance(f, A.Implies):
        left = res(f.left)
        right = res(f.right)
        return sor(snot(left), right)
    if isinstance(f, (A.Coalesce, A.Closure)):
        if isinstance(f, A.Coalesce):
            return A.Coalesce(res(f.left), res(f.right))
        return A.Closure(res(f.body))
    if isinstance(f, A.Exists):
        if f.sort == "obj":
            if ctx.state is None:
                raise UnsupportedFragment(
                    f"object quantifier {f.var!r} without a world state")
            return sor(*[_resolve(ctx, {**env, f.var: oid}, f.body)
                         for oid in sorted(ctx.state.objects)])
        if f.sort == "road":
            return sor(*[_resolve(ctx, {**env, f.var: road}, f.body)
                         for road in ctx.structure.roads])
        inner = _resolve(ctx, {k: v for k, v in env.items() if k != f.var},
                         f.body)
        if isinstance(inner, A.BoolConst):
            return inner
        return A.Exists(f.var, f.sort, inner)
    raise TypeError(f"not a formula: {f!r}")


def _pos_of(name: str, env: dict):
    """A vertex reference as a position term: bound -> constant."""
    if name in env:
        return A.PosConst(AtVertex(env[name]))
    return A.VertexP(name)


def _ground_position(ctx: CheckCtx, mu: dict, p) -> Optional[Position]:
    if isinstance(p, A.VertexP) and p.var in mu:
        return AtVertex(mu[p.var])
    if isinstance(p, A.PosConst):
        return p.value
    return None


def _make_overrides(ctx: CheckCtx):
    def ride_override(tctx, E, mu, p, s, q):
        gp = _ground_position(ctx, mu, p)
        gq = _ground_position(ctx, mu, q)
        if gp is None or gq is None:
            return None
        eids = frozenset(e.uid for e in E)
        labels = [r.label for r in rides(ctx.g, gp, gq, edge_ids=eids)]
        return sor(*[A.SegEq(s, A.SegConst(lab)) for lab in labels])

    def dist_override(tctx, E, mu, p, q, t):
        gp = _ground_position(ctx, mu, p)
        gq = _ground_position(ctx, mu, q)
        if gp is None or gq is None:
            return None
        eids = frozenset(e.uid for e in E)
        d = distance(ctx.g, gp, gq, edge_ids=eids)
        if not math.isfinite(d):
            return A.BoolConst(False)
        return A.arith_eq(t, A.num(d))

    return ride_override, dist_override


def _translate_resolved(ctx: CheckCtx, env: dict, E: frozenset, resolved):
    ride_ov, dist_ov = _make_overrides(ctx)
    sym = tuple(SymEdge(ctx.g.edge(eid).src, ctx.g.edge(eid).dst,
                        A.SegConst(ctx.g.edge(eid).seg), eid)
                for eid in sorted(E))
    tctx = TransCtx(ctx.g.vertices, sym, coalesce_cap=ctx.coalesce_cap,
                    ride_override=ride_ov, dist_override=dist_ov)
    vs = set(ctx.g.vertices)
    mu = {k: v for k, v in env.items() if isinstance(v, str) and v in vs}
    return tr(tctx, frozenset(sym), mu, resolved)


def residue(env: Optional[dict], g: MetricGraph, f, state=None,
            E: Optional[frozenset] = None, **cfg):
    """Partially evaluate f against the graph, leaving an
    arithmetic/segment residue (no vertex variables, no graph atoms)."""
    ctx = CheckCtx(g, state, **cfg)
    env = dict(env or {})
    E = ctx.all_eids if E is None else E
    return _translate_resolved(ctx, env, E, _resolve(ctx, env, f))


def _residue_check(ctx: CheckCtx, env: dict, E: frozenset, f) -> bool:
    resolved = _resolve(ctx, env, f)
    if isinstance(resolved, A.BoolConst):
        return resolved.value
    res = _translate_resolved(ctx, env, E, resolved)
    return solve(lower(res, ctx.variant())).is_sat


# ---------------------------------------------------------------------------
# public entry points

def check(env: Optional[dict], g: MetricGraph, f, **cfg) -> bool:
    """Model-check a graph-logic formula against a concrete graph."""
    ctx = CheckCtx(g, None, **cfg)
    return _ev(ctx, dict(env or {}), ctx.all_eids, f)


def check_m2cl(env: Optional[dict], g: MetricGraph, state, f, **cfg) -> bool:
    """Model-check a formula with object/road atoms against a graph and
    a world state."""
    ctx = CheckCtx(g, state, **cfg)
    return _ev(ctx, dict(env or {}), ctx.all_eids, f)


# ---------------------------------------------------------------------------
# object-variable elimination (for the satisfiability pipeline)

def _obj_vars_of(f) -> tuple[list, A.Formula]:
    """Peel the prenex-existential object prefix."""
    out = []
    while isinstance(f, A.Exists) and f.sort == "obj":
        out.append(f.var)
        f = f.body
    return out, f


def eliminate_objects(f) -> A.Formula:
    """Rewrite a prenex-existential object formula into pure graph logic:
    each object variable becomes fresh typed variables (id, used numeric
    attributes, itinerary, position split into at-vertex/on-edge cases)
    with pairwise id-consistency constraints."""
    ys, body = _obj_vars_of(f)
    used: dict = {y: set() for y in ys}
    pos_used: set = set()

    def scan(t):
        if isinstance(t, A.AttrNum):
            if t.obj not in used:
                raise UnsupportedFragment(f"free object variable {t.obj!r}")
            used[t.obj].add(t.attr)
        elif isinstance(t, A.AttrIt):
            if t.obj not in used:
                raise UnsupportedFragment(f"free object variable {t.obj!r}")
            used[t.obj].add("it")
        elif isinstance(t, A.AttrPos):
            if t.obj not in used:
                raise UnsupportedFragment(f"free object variable {t.obj!r}")
            pos_used.add(t.obj)
        elif isinstance(t, (A.Meets, A.Inside, A.RightOf, A.OppositeA,
                            A.Heading, A.CentrifugalOk, A.RoadA, A.SafeDist)):
            raise UnsupportedFragment(
                f"{type(t).__name__} cannot be eliminated without a world "
                "state")
        elif isinstance(t, A.Exists) and t.sort == "obj":
            raise UnsupportedFragment(
                f"object quantifier {t.var!r} inside the body (universal "
                "or nested quantification is outside the eliminable form)")
        for name in ("left", "right", "body", "seg", "frm", "to", "num",
                     "off", "center", "width", "bound", "dist"):
            sub = getattr(t, name, None)
            if sub is not None and not isinstance(sub, (str, float, int)):
                scan(sub)
        if isinstance(t, A.SegCtor):
            for a in t.args:
                scan(a)

    scan(body)

    def rewrite(t, posmap):
        if isinstance(t, A.AttrNum):
            return A.RVar(f"{t.obj}_{t.attr}")
        if isinstance(t, A.AttrIt):
            return A.SVar(f"{t.obj}_it")
        if isinstance(t, A.AttrPos):
            return posmap[t.obj]
        if isinstance(t, A.ObjEq):
            return A.arith_eq(A.RVar(f"{t.left}_id"), A.RVar(f"{t.right}_id"))
        if isinstance(t, A.SegCtor):
            return A.SegCtor(t.kind, tuple(rewrite(a, posmap) for a in t.args))
        if isinstance(t, (str, float, int, bool)) or t is None:
            return t
        if not dataclasses.is_dataclass(t):
            return t
        kwargs = {}
        for fld in dataclasses.fields(t):
            v = getattr(t, fld.name)
            kwargs[fld.name] = rewrite(v, posmap) \
                if not isinstance(v, (str, float, int, bool, frozenset,
                                      tuple)) and v is not None else v
        return type(t)(**kwargs)

    cases = []
    pos_ys = [y for y in ys if y in pos_used]
    for combo in itertools.product(("vertex", "edge"), repeat=len(pos_ys)):
        posmap = {}
        quantifiers = []
        for y in ys:
            quantifiers.append((f"{y}_id", "real"))
            for attr in sorted(used[y] - {"it"}):
                quantifiers.append((f"{y}_{attr}", "real"))
            if "it" in used[y]:
                quantifiers.append((f"{y}_it", "seg"))
        for y, kind in zip(pos_ys, combo):
            if kind == "vertex":
                quantifiers.append((f"{y}_at", "vertex"))
                posmap[y] = A.VertexP(f"{y}_at")
            else:
                quantifiers.append((f"{y}_at", "vertex"))
                quantifiers.append((f"{y}_on", "seg"))
                quantifiers.append((f"{y}_k", "real"))
                posmap[y] = A.FwdP(f"{y}_at", A.SVar(f"{y}_on"),
                                   A.RVar(f"{y}_k"))
        core = rewrite(body, posmap)
        consistency = []
        for y1, y2 in itertools.combinations(ys, 2):
            shared = (used[y1] & used[y2]) - {"it"}
            eqs = [A.arith_eq(A.RVar(f"{y1}_{a}"), A.RVar(f"{y2}_{a}"))
                   for a in sorted(shared)]
            if "it" in used[y1] and "it" in used[y2]:
                eqs.append(A.SegEq(A.SVar(f"{y1}_it"), A.SVar(f"{y2}_it")))
            if y1 in pos_used and y2 in pos_used:
                eqs.append(A.PosEq(posmap[y1], posmap[y2]))
            if eqs:
                consistency.append(A.Implies(
                    A.arith_eq(A.RVar(f"{y1}_id"), A.RVar(f"{y2}_id")),
                    A.conj(*eqs)))
        full = sand(core, *consistency)
        for var, sort in reversed(quantifiers):
            full = A.Exists(var, sort, full)
        cases.append(full)
    return sor(*cases) if cases else A.BoolConst(False)

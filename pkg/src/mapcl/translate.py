"""Translation of graph-level formulas into segment-level residues.

Works over a symbolic edge set: each edge has a source key, target key,
and a segment term (a variable for satisfiability questions, a ground
constant when partially evaluating against a concrete graph).  Vertex
quantifiers become finite disjunctions, edge-set operators enumerate
subset decompositions, position equality and ride atoms expand into the
equality/path predicates over segment terms, and distance atoms are
rewritten through rides.  What remains ("the residue") speaks only about
reals and segments and is handed to the arithmetic lowering.

The mixed forward/backward case of position equality additionally
requires an actual edge from the forward anchor to the backward anchor;
without it, two distinct parallel-looking edges with equal segments on
different vertex pairs would be wrongly identified.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .graph import AtVertex, OnEdge
from .logic import ast as A
from .slarith import ResourceLimit, UnsupportedFragment

COALESCE_EDGE_CAP = 16


# ---------------------------------------------------------------------------
# simplifying constructors

def sand(*fs) -> A.Formula:
    out = []
    for f in fs:
        if isinstance(f, A.BoolConst):
            if not f.value:
                return A.BoolConst(False)
            continue
        if isinstance(f, A.And):
            out.extend(_and_parts(f))
        else:
            out.append(f)
    return A.conj(*out) if out else A.BoolConst(True)


def _and_parts(f):
    if isinstance(f, A.And):
        return _and_parts(f.left) + _and_parts(f.right)
    return [f]


def sor(*fs) -> A.Formula:
    out = []
    for f in fs:
        if isinstance(f, A.BoolConst):
            if f.value:
                return A.BoolConst(True)
            continue
        out.append(f)
    return A.disj(*out) if out else A.BoolConst(False)


def snot(f: A.Formula) -> A.Formula:
    if isinstance(f, A.BoolConst):
        return A.BoolConst(not f.value)
    if isinstance(f, A.Not):
        return f.body
    return A.Not(f)


def simplies(a: A.Formula, b: A.Formula) -> A.Formula:
    if isinstance(a, A.BoolConst):
        return b if a.value else A.BoolConst(True)
    if isinstance(b, A.BoolConst) and b.value:
        return A.BoolConst(True)
    return A.Implies(a, b)


def sexists(var: str, sort: str, body: A.Formula) -> A.Formula:
    if isinstance(body, A.BoolConst):
        return body
    return A.Exists(var, sort, body)


def _lt(a, b) -> A.Formula:
    """a < b as a formula."""
    return snot(A.Leq(b, a))


# ---------------------------------------------------------------------------
# symbolic edges and translation context


@dataclass(frozen=True)
class SymEdge:
    src: object
    dst: object
    seg: object  # segment term
    uid: object  # hashable identity (slot name or concrete edge id)


class TransCtx:
    """Vertex keys, symbolic edges, fresh-name supply, and memo tables.

    ride_override/dist_override, when set, may return a replacement
    formula for a ride/distance atom (or None to fall back to the
    generic path expansion); the partial evaluator uses them to plug in
    concrete ride enumeration over ground graphs.
    """

    def __init__(self, vkeys: Iterable, edges: Iterable[SymEdge],
                 coalesce_cap: int = COALESCE_EDGE_CAP,
                 ride_override=None, dist_override=None):
        self.vkeys = tuple(vkeys)
        self.edges = tuple(edges)
        self.coalesce_cap = coalesce_cap
        self.ride_override = ride_override
        self.dist_override = dist_override
        self._counter = itertools.count(1)
        self._memo: dict = {}

    def fresh(self, base: str) -> str:
        return f"{base}${next(self._counter)}"


def _mu_key(mu: dict):
    return tuple(sorted(mu.items(), key=lambda kv: kv[0]))


# ---------------------------------------------------------------------------
# position descriptors

@dataclass(frozen=True)
class _PD:
    """Normalized position: vertex key, edge offset, or anchored offset."""

    kind: str  # "vertex" | "fwd" | "bwd" | "onedge"
    key: object = None          # vertex key (vertex/fwd/bwd) or edge uid
    seg: object = None          # segment term (fwd/bwd)
    off: object = None          # arithmetic term (fwd/bwd/onedge)


def _vkey(ctx: TransCtx, mu: dict, name: str):
    """Resolve a vertex name: a bound variable, or a literal vertex key."""
    if name in mu:
        return mu[name]
    if name in ctx.vkeys:
        return name
    raise UnsupportedFragment(f"unbound vertex variable {name!r}")


def _describe(ctx: TransCtx, mu: dict, p) -> _PD:
    if isinstance(p, A.VertexP):
        return _PD("vertex", key=_vkey(ctx, mu, p.var))
    if isinstance(p, A.FwdP):
        return _PD("fwd", key=_vkey(ctx, mu, p.vertex), seg=p.seg, off=p.off)
    if isinstance(p, A.BwdP):
        return _PD("bwd", key=_vkey(ctx, mu, p.vertex), seg=p.seg, off=p.off)
    if isinstance(p, A.PosConst):
        v = p.value
        if isinstance(v, AtVertex):
            return _PD("vertex", key=v.vertex)
        if isinstance(v, OnEdge):
            return _PD("onedge", key=v.edge, off=A.num(v.offset))
        raise TypeError(f"unknown position constant {v!r}")
    raise UnsupportedFragment(f"position term outside the fragment: {p!r}")


def _out_segments(E, key):
    return [e.seg for e in sorted(E, key=lambda e: str(e.uid)) if e.src == key]


def _in_segments(E, key):
    return [e.seg for e in sorted(E, key=lambda e: str(e.uid)) if e.dst == key]


def unique(s, seg_multiset) -> A.Formula:
    """s equals exactly one member of the multiset."""
    one_of = sor(*[A.SegEq(s, t) for t in seg_multiset])
    clashes = [sand(A.SegEq(s, t1), A.SegEq(s, t2))
               for t1, t2 in itertools.combinations(seg_multiset, 2)]
    return sand(one_of, snot(sor(*clashes)))


def _interior(off, seg) -> A.Formula:
    """0 < off < len(seg)."""
    return sand(_lt(A.num(0), off), _lt(off, A.LenT(seg)))


def eq_pos(ctx: TransCtx, E, mu: dict, p, q) -> A.Formula:
    a, b = _describe(ctx, mu, p), _describe(ctx, mu, q)
    if a.kind == "vertex" and b.kind == "vertex":
        return A.BoolConst(a.key == b.key)
    if a.kind == "onedge" and b.kind == "onedge":
        return sand(A.BoolConst(a.key == b.key), A.arith_eq(a.off, b.off))
    if a.kind == "vertex" or b.kind == "vertex":
        return A.BoolConst(False)  # interior offsets are strict
    if b.kind in ("fwd", "onedge") and a.kind == "bwd":
        return eq_pos(ctx, E, mu, q, p)
    if a.kind == "fwd" and b.kind == "fwd":
        if a.key != b.key:
            return A.BoolConst(False)
        return sand(A.SegEq(a.seg, b.seg), A.arith_eq(a.off, b.off),
                    _interior(a.off, a.seg),
                    unique(a.seg, _out_segments(E, a.key)))
    if a.kind == "bwd" and b.kind == "bwd":
        if a.key != b.key:
            return A.BoolConst(False)
        return sand(A.SegEq(a.seg, b.seg), A.arith_eq(a.off, b.off),
                    _interior(a.off, a.seg),
                    unique(a.seg, _in_segments(E, a.key)))
    if a.kind == "fwd" and b.kind == "bwd":
        # soundness fix: demand an actual edge from the forward anchor to
        # the backward anchor carrying the shared segment
        cases = []
        for e in (e for e in ctx_sorted(E) if e.src == a.key and e.dst == b.key):
            cases.append(sand(
                A.SegEq(a.seg, e.seg), A.SegEq(b.seg, e.seg),
                A.arith_eq(A.Add(a.off, b.off), A.LenT(a.seg)),
                _interior(a.off, a.seg),
                unique(a.seg, _out_segments(E, a.key)),
                unique(b.seg, _in_segments(E, b.key))))
        return sor(*cases)
    if a.kind == "fwd" and b.kind == "onedge":
        matches = [e for e in ctx_sorted(E) if e.uid == b.key]
        if not matches:
            return A.BoolConst(False)
        e = matches[0]
        if e.src != a.key:
            return A.BoolConst(False)
        return sand(A.SegEq(a.seg, e.seg), A.arith_eq(a.off, b.off),
                    _interior(a.off, a.seg),
                    unique(a.seg, _out_segments(E, a.key)))
    if a.kind == "onedge" and b.kind in ("fwd", "bwd"):
        return eq_pos(ctx, E, mu, q, p)
    if a.kind == "bwd" and b.kind == "onedge":
        matches = [e for e in ctx_sorted(E) if e.uid == b.key]
        if not matches:
            return A.BoolConst(False)
        e = matches[0]
        if e.dst != a.key:
            return A.BoolConst(False)
        return sand(A.SegEq(a.seg, e.seg),
                    A.arith_eq(A.Add(b.off, a.off), A.LenT(a.seg)),
                    _interior(a.off, a.seg),
                    unique(a.seg, _in_segments(E, a.key)))
    return A.BoolConst(False)


def ctx_sorted(E):
    return sorted(E, key=lambda e: str(e.uid))


def _self_wf(ctx: TransCtx, E, mu: dict, p) -> A.Formula:
    """Well-formedness of a position term: equality with itself."""
    d = _describe(ctx, mu, p)
    if d.kind in ("vertex", "onedge"):
        return A.BoolConst(True)
    return eq_pos(ctx, E, mu, p, p)


def at_pos(ctx: TransCtx, E, mu: dict, p, e: SymEdge, kvar: str) -> A.Formula:
    """Position p sits on edge e at arc-length coordinate kvar from its
    start; conjoins the well-formedness of p."""
    d = _describe(ctx, mu, p)
    k = A.RVar(kvar)
    branches = []
    if d.kind == "vertex":
        if d.key == e.src:
            branches.append(A.arith_eq(k, A.num(0)))
        if d.key == e.dst:
            branches.append(A.arith_eq(k, A.LenT(e.seg)))
    elif d.kind == "fwd":
        if d.key == e.src:
            branches.append(sand(A.SegEq(d.seg, e.seg), A.arith_eq(k, d.off)))
    elif d.kind == "bwd":
        if d.key == e.dst:
            branches.append(sand(A.SegEq(d.seg, e.seg),
                                 A.arith_eq(A.Add(k, d.off), A.LenT(e.seg))))
    elif d.kind == "onedge":
        if d.key == e.uid:
            branches.append(A.arith_eq(k, d.off))
    if not branches:
        return A.BoolConst(False)
    return sand(_self_wf(ctx, E, mu, p), sor(*branches))


def subseg(ctx: TransCtx, s, t1, t2, sub) -> A.Formula:
    """sub is the stretch of s between arc lengths t1 and t2."""
    z1 = ctx.fresh("z")
    z2 = ctx.fresh("z")
    inner = sand(
        A.arith_eq(A.LenT(A.SVar(z1)), t1),
        A.arith_eq(A.Add(A.LenT(A.SVar(z2)), t2), A.LenT(s)),
        A.SegEq(s, A.SegConcat(A.SVar(z1), A.SegConcat(sub, A.SVar(z2)))))
    return sand(A.Leq(A.num(0), t1), A.Leq(t1, t2), A.Leq(t2, A.LenT(s)),
                sexists(z1, "seg", sexists(z2, "seg", inner)))


def _acyclic_paths_sym(edges, start, goal):
    """Non-empty edge-simple paths from start to goal over the given edges."""
    out = []
    edges = ctx_sorted(edges)

    def walk(here, used, acc):
        if here == goal and acc:
            out.append(tuple(acc))
            # longer paths may revisit the goal, keep exploring
        for e in edges:
            if e.src == here and e.uid not in used:
                walk(e.dst, used | {e.uid}, acc + [e])

    walk(start, frozenset(), [])
    return out


def _path_seg_term(path):
    term = path[0].seg
    for e in path[1:]:
        term = A.SegConcat(term, e.seg)
    return term


def acyclic_path(ctx: TransCtx, E, mu: dict, p, s, q) -> A.Formula:
    """Ride atom: s labels an acyclic ride from p to q."""
    k = ctx.fresh("k")
    k2 = ctx.fresh("k")
    kv, kv2 = A.RVar(k), A.RVar(k2)
    disjuncts = []
    edges = ctx_sorted(E)
    # same edge, forward stretch
    for e in edges:
        disjuncts.append(sand(
            at_pos(ctx, E, mu, p, e, k), at_pos(ctx, E, mu, q, e, k2),
            A.Leq(kv, kv2),
            subseg(ctx, e.seg, kv, kv2, s)))
    # same edge, wrapping around a cycle back to it
    for e in edges:
        z = ctx.fresh("z")
        z2 = ctx.fresh("z")
        closing = []
        if e.dst == e.src:
            closing.append(A.SegEq(s, A.SegConcat(A.SVar(z), A.SVar(z2))))
        for w in _acyclic_paths_sym([x for x in edges if x.uid != e.uid],
                                    e.dst, e.src):
            closing.append(A.SegEq(s, A.SegConcat(
                A.SVar(z), A.SegConcat(_path_seg_term(w), A.SVar(z2)))))
        if not closing:
            continue
        inner = sand(
            subseg(ctx, e.seg, kv, A.LenT(e.seg), A.SVar(z)),
            subseg(ctx, e.seg, A.num(0), kv2, A.SVar(z2)),
            sor(*closing))
        disjuncts.append(sand(
            at_pos(ctx, E, mu, p, e, k), at_pos(ctx, E, mu, q, e, k2),
            A.Leq(kv2, kv),
            sexists(z, "seg", sexists(z2, "seg", inner))))
    # two distinct edges joined by a (possibly empty) connecting path
    for e, e2 in itertools.permutations(edges, 2):
        z = ctx.fresh("z")
        z2 = ctx.fresh("z")
        closing = []
        if e.dst == e2.src:
            closing.append(A.SegEq(s, A.SegConcat(A.SVar(z), A.SVar(z2))))
        rest = [x for x in edges if x.uid not in (e.uid, e2.uid)]
        for w in _acyclic_paths_sym(rest, e.dst, e2.src):
            closing.append(A.SegEq(s, A.SegConcat(
                A.SVar(z), A.SegConcat(_path_seg_term(w), A.SVar(z2)))))
        if not closing:
            continue
        inner = sand(
            subseg(ctx, e.seg, kv, A.LenT(e.seg), A.SVar(z)),
            subseg(ctx, e2.seg, A.num(0), kv2, A.SVar(z2)),
            sor(*closing))
        disjuncts.append(sand(
            at_pos(ctx, E, mu, p, e, k), at_pos(ctx, E, mu, q, e2, k2),
            sexists(z, "seg", sexists(z2, "seg", inner))))
    body = sor(*disjuncts)
    return sexists(k, "real", sexists(k2, "real", body))


def _ride_formula(ctx: TransCtx, E, mu: dict, p, s, q) -> A.Formula:
    if ctx.ride_override is not None:
        alt = ctx.ride_override(ctx, E, mu, p, s, q)
        if alt is not None:
            return alt
    return acyclic_path(ctx, E, mu, p, s, q)


def _dist_formula(ctx: TransCtx, E, mu: dict, p, q, t) -> A.Formula:
    if ctx.dist_override is not None:
        alt = ctx.dist_override(ctx, E, mu, p, q, t)
        if alt is not None:
            return alt
    z = ctx.fresh("z")
    zs = A.SVar(z)
    ride_eq = sexists(z, "seg", sand(
        _ride_formula(ctx, E, mu, p, zs, q),
        A.arith_eq(A.LenT(zs), t)))
    z2 = ctx.fresh("z")
    zs2 = A.SVar(z2)
    shorter = sexists(z2, "seg", sand(
        _ride_formula(ctx, E, mu, p, zs2, q),
        _lt(A.LenT(zs2), t)))
    same = sand(eq_pos(ctx, E, mu, p, q), A.arith_eq(t, A.num(0)))
    return sor(same, sand(ride_eq, snot(shorter)))


# ---------------------------------------------------------------------------
# the main recursion

def tr(ctx: TransCtx, E: frozenset, mu: dict, f) -> A.Formula:
    key = (id(f), E, _mu_key(mu))
    hit = ctx._memo.get(key)
    if hit is not None:
        return hit
    out = _tr(ctx, E, mu, f)
    ctx._memo[key] = out
    return out


def _tr(ctx: TransCtx, E: frozenset, mu: dict, f) -> A.Formula:
    if isinstance(f, A.BoolConst):
        return f
    if isinstance(f, A.Leq):
        return f
    if isinstance(f, A.SegEq):
        return f
    if isinstance(f, A.EdgeA):
        if len(E) != 1:
            return A.BoolConst(False)
        (e,) = E
        if (_vkey(ctx, mu, f.src) == e.src
                and _vkey(ctx, mu, f.dst) == e.dst):
            return A.SegEq(f.seg, e.seg)
        return A.BoolConst(False)
    if isinstance(f, A.PosEq):
        return eq_pos(ctx, E, mu, f.left, f.right)
    if isinstance(f, A.RideA):
        return _ride_formula(ctx, E, mu, f.frm, f.seg, f.to)
    if isinstance(f, A.DistEq):
        return _dist_formula(ctx, E, mu, f.frm, f.to, f.num)
    if isinstance(f, A.Coalesce):
        edges = ctx_sorted(E)
        if len(edges) > ctx.coalesce_cap:
            raise ResourceLimit(
                f"coalescing over {len(edges)} edges exceeds the cap "
                f"({ctx.coalesce_cap})")
        branches = []
        for marks in itertools.product((0, 1, 2), repeat=len(edges)):
            e1 = frozenset(e for e, m in zip(edges, marks) if m != 1)
            e2 = frozenset(e for e, m in zip(edges, marks) if m != 0)
            left = tr(ctx, e1, mu, f.left)
            if isinstance(left, A.BoolConst) and not left.value:
                continue
            right = tr(ctx, e2, mu, f.right)
            branches.append(sand(left, right))
        return sor(*branches)
    if isinstance(f, A.Closure):
        edges = ctx_sorted(E)
        if len(edges) > ctx.coalesce_cap:
            raise ResourceLimit(
                f"closure over {len(edges)} edges exceeds the cap "
                f"({ctx.coalesce_cap})")
        branches = []
        for r in range(len(edges) + 1):
            for combo in itertools.combinations(edges, r):
                branches.append(tr(ctx, frozenset(combo), mu, f.body))
        return sor(*branches)
    if isinstance(f, A.Not):
        return snot(tr(ctx, E, mu, f.body))
    if isinstance(f, A.And):
        return sand(tr(ctx, E, mu, f.left), tr(ctx, E, mu, f.right))
    if isinstance(f, A.Or):
        return sor(tr(ctx, E, mu, f.left), tr(ctx, E, mu, f.right))
    if isinstance(f, A.Implies):
        return simplies(tr(ctx, E, mu, f.left), tr(ctx, E, mu, f.right))
    if isinstance(f, A.Exists):
        if f.sort == "vertex":
            return sor(*[tr(ctx, E, {**mu, f.var: key}, f.body)
                         for key in ctx.vkeys])
        if f.sort in ("real", "seg"):
            return sexists(f.var, f.sort, tr(ctx, E, mu, f.body))
        raise UnsupportedFragment(
            f"{f.sort} quantifier must be eliminated before translation "
            f"(variable {f.var!r})")
    raise UnsupportedFragment(
        f"{type(f).__name__} atom must be expanded before translation")

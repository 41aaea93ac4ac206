"""Pretty printer for formulas; inverse of the parser on its own output.

``parse_formula(pretty(f))`` returns ``f`` for any formula the parser can
produce, and ``pretty`` is deterministic, so formulas can be compared and
logged textually.
"""

from __future__ import annotations

import math

from ..segments import Curve, Interval, Region
from . import ast as A

# precedence levels, loosest to tightest
_IMPLIES, _OR, _COAL, _AND, _NOT = 1, 2, 3, 4, 5


def _num(x: float) -> str:
    if x == math.pi:
        return "pi"
    if x == int(x) and abs(x) < 1e15:
        return repr(float(x))
    return repr(x)


def _seg_const(seg) -> str:
    if isinstance(seg, Interval):
        return f"iv({_num(seg.length)})"
    if isinstance(seg, Region):
        return f"region({_seg_const(seg.center)}, {_num(seg.width)})"
    if isinstance(seg, Curve):
        if not seg.prims:
            return "eps"
        parts = []
        for p in seg.prims:
            if hasattr(p, "radius"):
                parts.append(f"arc({_num(p.radius)}, {_num(p.phi)}, {_num(p.theta)})")
            else:
                parts.append(f"line({_num(p.length)}, {_num(p.phi)})")
        return " * ".join(parts)
    raise TypeError(f"not a segment constant: {seg!r}")


def _term(t) -> str:
    if isinstance(t, A.Const):
        v = _num(t.value)
        return f"({v})" if t.value < 0 else v
    if isinstance(t, A.RVar):
        return t.name
    if isinstance(t, (A.Add, A.Sub)):
        op = "+" if isinstance(t, A.Add) else "-"
        right = _term(t.right)
        if isinstance(t.right, (A.Add, A.Sub, A.Mul)):
            right = f"({right})"
        return f"{_term(t.left)} {op} {right}"
    if isinstance(t, A.Mul):
        left, right = _term(t.left), _term(t.right)
        if isinstance(t.left, (A.Add, A.Sub)):
            left = f"({left})"
        if isinstance(t.right, (A.Add, A.Sub, A.Mul)):
            right = f"({right})"
        return f"{left} * {right}"
    if isinstance(t, A.LenT):
        return f"len({_term(t.seg)})"
    if isinstance(t, A.AttrNum):
        return f"{t.obj}.{t.attr}"
    if isinstance(t, A.LanesOf):
        return f"{t.road}.lanes"
    if isinstance(t, A.SafeDist):
        return f"safedist({t.obj1}, {t.obj2})"
    if isinstance(t, A.SVar):
        return t.name
    if isinstance(t, A.SegConst):
        return _seg_const(t.value)
    if isinstance(t, A.SegCtor):
        return f"{t.kind}({', '.join(_term(a) for a in t.args)})"
    if isinstance(t, A.SegRegion):
        return f"region({_term(t.center)}, {_term(t.width)})"
    if isinstance(t, A.SegConcat):
        left = _term(t.left)
        if isinstance(t.left, A.SegConcat):
            left = f"({left})"
        return f"{left} * {_term(t.right)}"
    if isinstance(t, A.AttrIt):
        return f"{t.obj}.it"
    if isinstance(t, A.VertexP):
        return t.var
    if isinstance(t, A.FwdP):
        return f"fwd({t.vertex}, {_term(t.seg)}, {_term(t.off)})"
    if isinstance(t, A.BwdP):
        return f"bwd({_term(t.off)}, {_term(t.seg)}, {t.vertex})"
    if isinstance(t, A.AttrPos):
        return f"{t.obj}.pos"
    if isinstance(t, A.PosConst):
        raise TypeError("ground position constants have no concrete syntax")
    if isinstance(t, str):
        return t
    raise TypeError(f"unknown term {t!r}")


def _place(p) -> str:
    if isinstance(p, frozenset):
        return "{" + ", ".join(sorted(p)) + "}"
    return p


def _is_arith_eq(f) -> bool:
    return (isinstance(f, A.And) and isinstance(f.left, A.Leq)
            and isinstance(f.right, A.Leq)
            and f.left.left == f.right.right and f.left.right == f.right.left)


def pretty(f, prec: int = 0) -> str:
    s, level = _pretty(f)
    if level < prec:
        return f"({s})"
    return s


def _pretty(f):
    if isinstance(f, A.BoolConst):
        return ("true" if f.value else "false"), _NOT + 1
    if isinstance(f, A.Leq):
        return f"{_term(f.left)} <= {_term(f.right)}", _NOT + 1
    if _is_arith_eq(f):
        return f"{_term(f.left.left)} = {_term(f.left.right)}", _NOT + 1
    if isinstance(f, A.SegEq):
        return f"{_term(f.left)} = {_term(f.right)}", _NOT + 1
    if isinstance(f, A.PosEq):
        return f"{_term(f.left)} = {_term(f.right)}", _NOT + 1
    if isinstance(f, A.ObjEq):
        return f"{f.left} = {f.right}", _NOT + 1
    if isinstance(f, A.EdgeA):
        return f"edge({f.src}, {_term(f.seg)}, {f.dst})", _NOT + 1
    if isinstance(f, A.RoadA):
        return f"road({f.road}, {f.src}, {_term(f.seg)}, {f.dst})", _NOT + 1
    if isinstance(f, A.RideA):
        return f"ride({_term(f.frm)}, {_term(f.seg)}, {_term(f.to)})", _NOT + 1
    if isinstance(f, A.DistEq):
        return f"dist({_term(f.frm)}, {_term(f.to)}) = {_term(f.num)}", _NOT + 1
    if isinstance(f, A.Meets):
        return f"meets({f.obj}, {_term(f.dist)}, {f.other})", _NOT + 1
    if isinstance(f, A.Inside):
        if f.lane is None:
            return f"inside({f.obj}, {_place(f.place)})", _NOT + 1
        return f"inside({f.obj}, {_place(f.place)}, {_term(f.lane)})", _NOT + 1
    if isinstance(f, A.RightOf):
        return f"rightof({f.x}, {f.y}, {_place(f.place)})", _NOT + 1
    if isinstance(f, A.OppositeA):
        return f"opposite({f.x}, {f.y}, {_place(f.place)})", _NOT + 1
    if isinstance(f, A.Heading):
        kw = {"straight": "straight", "right": "turnright",
              "left": "turnleft"}[f.kind]
        return f"{kw}({f.obj}, {_place(f.place)})", _NOT + 1
    if isinstance(f, A.CentrifugalOk):
        return f"centrifugal({f.obj}, {_term(f.bound)})", _NOT + 1
    if isinstance(f, A.Closure):
        return f"C({pretty(f.body)})", _NOT + 1
    if isinstance(f, A.Not):
        return f"!{pretty(f.body, _NOT)}", _NOT
    if isinstance(f, A.And):
        return f"{pretty(f.left, _AND)} && {pretty(f.right, _AND + 1)}", _AND
    if isinstance(f, A.Coalesce):
        return f"{pretty(f.left, _COAL)} ++ {pretty(f.right, _COAL + 1)}", _COAL
    if isinstance(f, A.Or):
        return f"{pretty(f.left, _OR)} || {pretty(f.right, _OR + 1)}", _OR
    if isinstance(f, A.Implies):
        return f"{pretty(f.left, _IMPLIES + 1)} => {pretty(f.right, _IMPLIES)}", _IMPLIES
    if isinstance(f, A.Exists):
        names = [f.var]
        body = f.body
        while isinstance(body, A.Exists) and body.sort == f.sort:
            names.append(body.var)
            body = body.body
        return f"exists {f.sort} {', '.join(names)}. {pretty(body)}", _IMPLIES
    raise TypeError(f"unknown formula {f!r}")


def pretty_temporal(f, prec: int = 0) -> str:
    s, level = _pretty_t(f)
    if level < prec:
        return f"({s})"
    return s


_T_IMPLIES, _T_OR, _T_AND, _T_UNTIL, _T_NOT = 1, 2, 3, 4, 5


def _pretty_t(f):
    if isinstance(f, A.TState):
        return f"[ {pretty(f.formula)} ]", _T_NOT + 1
    if isinstance(f, A.TNot):
        # recognise the always-sugar: !(true until !g)
        body = f.body
        if (isinstance(body, A.TUntil) and isinstance(body.left, A.TState)
                and body.left.formula == A.BoolConst(True)
                and isinstance(body.right, A.TNot)):
            return f"always {pretty_temporal(body.right.body, _T_NOT)}", _T_NOT
        return f"!{pretty_temporal(body, _T_NOT)}", _T_NOT
    if isinstance(f, A.TNext):
        return f"next {pretty_temporal(f.body, _T_NOT)}", _T_NOT
    if isinstance(f, A.TUntil):
        if (isinstance(f.left, A.TState) and f.left.formula == A.BoolConst(True)):
            return f"eventually {pretty_temporal(f.right, _T_NOT)}", _T_NOT
        return (f"{pretty_temporal(f.left, _T_UNTIL + 1)} until "
                f"{pretty_temporal(f.right, _T_UNTIL)}"), _T_UNTIL
    if isinstance(f, A.TAnd):
        return (f"{pretty_temporal(f.left, _T_AND)} && "
                f"{pretty_temporal(f.right, _T_AND + 1)}"), _T_AND
    if isinstance(f, A.TExists):
        return f"exists obj {f.var}. {pretty_temporal(f.body)}", _T_IMPLIES
    # t_or / t_implies are sugar over TNot/TAnd and are already covered
    raise TypeError(f"unknown temporal formula {f!r}")

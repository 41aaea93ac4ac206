"""Abstract syntax for the map configuration logics.

Three term layers (arithmetic, segment, position) under a single formula
type; a temporal layer on top.  Sorts are carried by the quantifier
nodes (``real``, ``seg``, ``vertex``, ``obj``, ``road``), so no separate
symbol table is needed once a formula is built.

Derived traffic predicates (``Meets``, ``Inside``, ...) are first-class
atoms: the monitor evaluates them directly against a world state, and
they expand into core formulas for satisfiability work.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from ..segments import Segment
from ..graph import Position

# ---------------------------------------------------------------------------
# arithmetic terms


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class RVar:
    name: str


@dataclass(frozen=True)
class Add:
    left: "ArithTerm"
    right: "ArithTerm"


@dataclass(frozen=True)
class Sub:
    left: "ArithTerm"
    right: "ArithTerm"


@dataclass(frozen=True)
class Mul:
    left: "ArithTerm"
    right: "ArithTerm"


@dataclass(frozen=True)
class LenT:
    """Length of a segment term, as a real-valued term."""

    seg: "SegTerm"


@dataclass(frozen=True)
class AttrNum:
    """Numeric attribute of an object variable (sp, wt, ln, weight, cl, id)."""

    obj: str
    attr: str


@dataclass(frozen=True)
class LanesOf:
    road: str


@dataclass(frozen=True)
class SafeDist:
    """Braking-based safe distance between two objects (leader second)."""

    obj1: str
    obj2: str


ArithTerm = Union[Const, RVar, Add, Sub, Mul, LenT, AttrNum, LanesOf, SafeDist]

# ---------------------------------------------------------------------------
# segment terms


@dataclass(frozen=True)
class SVar:
    name: str


@dataclass(frozen=True)
class SegConst:
    value: Segment


@dataclass(frozen=True)
class SegCtor:
    """iv(a) | line(a, phi) | arc(r, phi, theta) with arithmetic arguments."""

    kind: str
    args: tuple

    def __post_init__(self):
        arity = {"iv": 1, "line": 2, "arc": 3}
        if self.kind not in arity:
            raise ValueError(f"unknown segment constructor {self.kind!r}")
        if len(self.args) != arity[self.kind]:
            raise ValueError(f"{self.kind} takes {arity[self.kind]} arguments")


@dataclass(frozen=True)
class SegRegion:
    center: "SegTerm"
    width: "ArithTerm"


@dataclass(frozen=True)
class SegConcat:
    left: "SegTerm"
    right: "SegTerm"


@dataclass(frozen=True)
class AttrIt:
    obj: str


SegTerm = Union[SVar, SegConst, SegCtor, SegRegion, SegConcat, AttrIt]

# ---------------------------------------------------------------------------
# position terms


@dataclass(frozen=True)
class VertexP:
    var: str


@dataclass(frozen=True)
class FwdP:
    """Offset ``off`` into the unique ``seg``-labelled edge out of ``vertex``."""

    vertex: str
    seg: "SegTerm"
    off: "ArithTerm"


@dataclass(frozen=True)
class BwdP:
    """Offset ``off`` back from the end of the unique edge into ``vertex``."""

    off: "ArithTerm"
    seg: "SegTerm"
    vertex: str


@dataclass(frozen=True)
class PosConst:
    value: Position


@dataclass(frozen=True)
class AttrPos:
    obj: str


PosTerm = Union[VertexP, FwdP, BwdP, PosConst, AttrPos]

# ---------------------------------------------------------------------------
# formulas

PlaceRef = Union[frozenset, str]  # literal vertex set, or a road variable


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class Leq:
    left: "ArithTerm"
    right: "ArithTerm"


@dataclass(frozen=True)
class SegEq:
    left: "SegTerm"
    right: "SegTerm"


@dataclass(frozen=True)
class EdgeA:
    """The (sub)graph consists of exactly the edge (src, seg, dst)."""

    src: str
    seg: "SegTerm"
    dst: str


@dataclass(frozen=True)
class PosEq:
    left: "PosTerm"
    right: "PosTerm"


@dataclass(frozen=True)
class RideA:
    frm: "PosTerm"
    seg: "SegTerm"
    to: "PosTerm"


@dataclass(frozen=True)
class DistEq:
    frm: "PosTerm"
    to: "PosTerm"
    num: "ArithTerm"


@dataclass(frozen=True)
class ObjEq:
    left: str
    right: str


@dataclass(frozen=True)
class RoadA:
    """road(r, x, s, y): r names a road from x to y labelled s."""

    road: str
    src: str
    seg: "SegTerm"
    dst: str


@dataclass(frozen=True)
class Meets:
    """Some ride from obj to other is a prefix of obj's itinerary of length dist."""

    obj: str
    dist: "ArithTerm"
    other: str


@dataclass(frozen=True)
class Inside:
    obj: str
    place: PlaceRef
    lane: Optional["ArithTerm"] = None


@dataclass(frozen=True)
class RightOf:
    x: str
    y: str
    place: PlaceRef


@dataclass(frozen=True)
class OppositeA:
    x: str
    y: str
    place: PlaceRef


@dataclass(frozen=True)
class Heading:
    """Itinerary shape at a junction: straight, right, or left turn."""

    obj: str
    place: PlaceRef
    kind: str  # "straight" | "right" | "left"


@dataclass(frozen=True)
class CentrifugalOk:
    """weight * sp^2 / r <= bound whenever the itinerary starts on an arc."""

    obj: str
    bound: "ArithTerm"


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Coalesce:
    """Split the edge set in two (possibly overlapping) covering parts."""

    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Closure:
    """C(f): f holds on some sub-edge-set."""

    body: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    sort: str  # real | seg | vertex | obj | road
    body: "Formula"

    def __post_init__(self):
        if self.sort not in ("real", "seg", "vertex", "obj", "road"):
            raise ValueError(f"bad sort {self.sort!r}")


Formula = Union[
    BoolConst, Leq, SegEq, EdgeA, PosEq, RideA, DistEq, ObjEq, RoadA,
    Meets, Inside, RightOf, OppositeA, Heading, CentrifugalOk,
    Not, And, Or, Implies, Coalesce, Closure, Exists,
]

# ---------------------------------------------------------------------------
# temporal layer


@dataclass(frozen=True)
class TState:
    formula: "Formula"


@dataclass(frozen=True)
class TNot:
    body: "Temporal"


@dataclass(frozen=True)
class TAnd:
    left: "Temporal"
    right: "Temporal"


@dataclass(frozen=True)
class TNext:
    body: "Temporal"


@dataclass(frozen=True)
class TUntil:
    left: "Temporal"
    right: "Temporal"


@dataclass(frozen=True)
class TExists:
    var: str
    body: "Temporal"


Temporal = Union[TState, TNot, TAnd, TNext, TUntil, TExists]


def t_true() -> Temporal:
    return TState(BoolConst(True))


def t_or(a: Temporal, b: Temporal) -> Temporal:
    return TNot(TAnd(TNot(a), TNot(b)))


def t_implies(a: Temporal, b: Temporal) -> Temporal:
    return TNot(TAnd(a, TNot(b)))


def eventually(f: Temporal) -> Temporal:
    return TUntil(t_true(), f)


def always(f: Temporal) -> Temporal:
    return TNot(TUntil(t_true(), TNot(f)))


# ---------------------------------------------------------------------------
# convenience constructors and traversals

def conj(*fs: Formula) -> Formula:
    out: Optional[Formula] = None
    for f in fs:
        out = f if out is None else And(out, f)
    return out if out is not None else BoolConst(True)


def disj(*fs: Formula) -> Formula:
    out: Optional[Formula] = None
    for f in fs:
        out = f if out is None else Or(out, f)
    return out if out is not None else BoolConst(False)


def coalesce_all(*fs: Formula) -> Formula:
    out: Optional[Formula] = None
    for f in fs:
        out = f if out is None else Coalesce(out, f)
    return out if out is not None else BoolConst(True)


def exists_many(pairs, body: Formula) -> Formula:
    """exists_many([("x", "vertex"), ...], body) nests Exists right-to-left."""
    out = body
    for var, sort in reversed(list(pairs)):
        out = Exists(var, sort, out)
    return out


def arith_eq(a: ArithTerm, b: ArithTerm) -> Formula:
    return And(Leq(a, b), Leq(b, a))


def num(x: float) -> Const:
    return Const(float(x))


def _children(f):
    """(sub-formulas, quantified var or None) of a formula node."""
    if isinstance(f, (Not, Closure)):
        return ([f.body], None)
    if isinstance(f, (And, Or, Implies, Coalesce)):
        return ([f.left, f.right], None)
    if isinstance(f, Exists):
        return ([f.body], f.var)
    return ([], None)


def formula_vars(f: Formula) -> set:
    """All variable names occurring in a formula (free or bound)."""
    seen: set[str] = set()

    def term(t):
        if isinstance(t, (Const, BoolConst)):
            return
        if isinstance(t, RVar):
            seen.add(t.name)
        elif isinstance(t, SVar):
            seen.add(t.name)
        elif isinstance(t, (Add, Sub, Mul)):
            term(t.left), term(t.right)
        elif isinstance(t, LenT):
            term(t.seg)
        elif isinstance(t, (AttrNum, AttrIt, AttrPos)):
            seen.add(t.obj)
        elif isinstance(t, LanesOf):
            seen.add(t.road)
        elif isinstance(t, SafeDist):
            seen.add(t.obj1), seen.add(t.obj2)
        elif isinstance(t, SegCtor):
            for a in t.args:
                term(a)
        elif isinstance(t, SegRegion):
            term(t.center), term(t.width)
        elif isinstance(t, SegConcat):
            term(t.left), term(t.right)
        elif isinstance(t, VertexP):
            seen.add(t.var)
        elif isinstance(t, FwdP):
            seen.add(t.vertex), term(t.seg), term(t.off)
        elif isinstance(t, BwdP):
            seen.add(t.vertex), term(t.seg), term(t.off)

    def walk(f):
        if isinstance(f, Leq):
            term(f.left), term(f.right)
        elif isinstance(f, SegEq):
            term(f.left), term(f.right)
        elif isinstance(f, EdgeA):
            seen.add(f.src), seen.add(f.dst), term(f.seg)
        elif isinstance(f, PosEq):
            term(f.left), term(f.right)
        elif isinstance(f, RideA):
            term(f.frm), term(f.seg), term(f.to)
        elif isinstance(f, DistEq):
            term(f.frm), term(f.to), term(f.num)
        elif isinstance(f, ObjEq):
            seen.add(f.left), seen.add(f.right)
        elif isinstance(f, RoadA):
            seen.update((f.road, f.src, f.dst)), term(f.seg)
        elif isinstance(f, Meets):
            seen.add(f.obj), seen.add(f.other), term(f.dist)
        elif isinstance(f, Inside):
            seen.add(f.obj)
            if isinstance(f.place, str):
                seen.add(f.place)
            if f.lane is not None:
                term(f.lane)
        elif isinstance(f, (RightOf, OppositeA)):
            seen.add(f.x), seen.add(f.y)
            if isinstance(f.place, str):
                seen.add(f.place)
        elif isinstance(f, Heading):
            seen.add(f.obj)
            if isinstance(f.place, str):
                seen.add(f.place)
        elif isinstance(f, CentrifugalOk):
            seen.add(f.obj), term(f.bound)
        else:
            subs, var = _children(f)
            if var is not None:
                seen.add(var)
            for s in subs:
                walk(s)

    walk(f)
    return seen


def has_universal_objects(f: Formula, neg: bool = False) -> bool:
    """Whether an object quantifier occurs under an odd number of negations."""
    if isinstance(f, Exists):
        if f.sort == "obj" and neg:
            return True
        return has_universal_objects(f.body, neg)
    if isinstance(f, Not):
        return has_universal_objects(f.body, not neg)
    if isinstance(f, Implies):
        return (has_universal_objects(f.left, not neg)
                or has_universal_objects(f.right, neg))
    subs, _ = _children(f)
    return any(has_universal_objects(s, neg) for s in subs)

"""Satisfiability for the decidable fragment of the map logic.

A *complete graph specification* fixes the number of vertices ``n`` and,
for every ordered vertex pair, a list of symbolic segment variables
("slots"), one per edge.  Any formula whose free vertex variables are
covered by the spec translates into a pure segment-logic residue; the
residue, lowered to linear real arithmetic, is equisatisfiable with the
original formula over metric graphs of that shape.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field

from .graph import Edge, MetricGraph
from .logic import ast as A
from .segments import Interval
from .slarith import SatResult, lower, solve
from .translate import COALESCE_EDGE_CAP, SymEdge, TransCtx, sand, snot, tr

__all__ = [
    "CompleteSpec",
    "free_vars",
    "close_free",
    "spec_edges",
    "side_conditions",
    "default_mu",
    "translate_complete",
    "mcl_sat",
    "entails",
    "sat_sweep",
    "enumerate_models",
    "brute_force_sat",
]


# ---------------------------------------------------------------------------
# complete graph specifications


@dataclass(frozen=True)
class CompleteSpec:
    """``n`` vertices (keys 1..n) plus one segment variable per edge slot.

    ``slots`` holds ``(i, j, name)`` triples: an edge from vertex ``i``
    to vertex ``j`` labelled by the segment variable ``name``.  Several
    slots may share a pair (parallel edges); their segments are then
    constrained to be pairwise distinct.
    """

    n: int
    slots: tuple[tuple[int, int, str], ...] = field(default=())

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a specification needs at least one vertex")
        names = [name for _, _, name in self.slots]
        if len(set(names)) != len(names):
            raise ValueError("duplicate segment variable in slots")
        for i, j, _ in self.slots:
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"slot ({i}, {j}) outside 1..{self.n}")

    @classmethod
    def complete(cls, n: int, m: int = 1) -> "CompleteSpec":
        """Every ordered pair (including self-loops) with ``m`` slots."""
        slots = [(i, j, f"s{i}_{j}_{h}")
                 for i in range(1, n + 1)
                 for j in range(1, n + 1)
                 for h in range(1, m + 1)]
        return cls(n, tuple(slots))

    @classmethod
    def parse(cls, text: str) -> "CompleteSpec":
        """Parse the plain-text spec format::

            vertices 2
            edge 1 2 s
            edge 2 1 t

        Blank lines and ``#`` comments are ignored.
        """
        n = None
        slots = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "vertices" and len(parts) == 2:
                n = int(parts[1])
            elif parts[0] == "edge" and len(parts) == 4:
                slots.append((int(parts[1]), int(parts[2]), parts[3]))
            else:
                raise ValueError(f"line {lineno}: cannot parse {raw!r}")
        if n is None:
            raise ValueError("missing 'vertices <n>' line")
        return cls(n, tuple(slots))

    def to_text(self) -> str:
        lines = [f"vertices {self.n}"]
        lines += [f"edge {i} {j} {name}" for i, j, name in self.slots]
        return "\n".join(lines) + "\n"


def spec_edges(spec: CompleteSpec) -> tuple[SymEdge, ...]:
    return tuple(SymEdge(i, j, A.SVar(name), name)
                 for i, j, name in spec.slots)


def side_conditions(spec: CompleteSpec) -> A.Formula:
    """Well-formedness of the symbolic graph: parallel slots carry
    distinct segments and every segment has positive length."""
    parts = []
    by_pair: dict[tuple[int, int], list[str]] = {}
    for i, j, name in spec.slots:
        by_pair.setdefault((i, j), []).append(name)
    for names in by_pair.values():
        for a, b in itertools.combinations(names, 2):
            parts.append(snot(A.SegEq(A.SVar(a), A.SVar(b))))
    for _, _, name in spec.slots:
        parts.append(snot(A.Leq(A.LenT(A.SVar(name)), A.num(0))))
    return sand(*parts)


def default_mu(spec: CompleteSpec) -> dict:
    """The canonical binding x1..xn -> 1..n."""
    return {f"x{i}": i for i in range(1, spec.n + 1)}


# ---------------------------------------------------------------------------
# free variables and existential closure


_BINDING = {
    "RVar": ("name", "real"),
    "SVar": ("name", "seg"),
}


def free_vars(f) -> dict:
    """Free variables of a formula as a name -> sort mapping."""
    out: dict[str, str] = {}

    def note(name, sort, bound):
        if name not in bound:
            prev = out.setdefault(name, sort)
            if prev != sort:
                raise ValueError(
                    f"variable {name!r} used at sorts {prev} and {sort}")

    def walk(t, bound):
        if t is None or isinstance(t, (bool, int, float, str, frozenset)):
            return
        if isinstance(t, A.RVar):
            note(t.name, "real", bound)
            return
        if isinstance(t, A.SVar):
            note(t.name, "seg", bound)
            return
        if isinstance(t, A.VertexP):
            note(t.var, "vertex", bound)
            return
        if isinstance(t, (A.FwdP, A.BwdP)):
            note(t.vertex, "vertex", bound)
            walk(t.seg, bound)
            walk(t.off, bound)
            return
        if isinstance(t, (A.AttrNum, A.AttrIt, A.AttrPos)):
            note(t.obj, "obj", bound)
            return
        if isinstance(t, A.Meets):
            note(t.obj, "obj", bound)
            note(t.other, "obj", bound)
            walk(t.dist, bound)
            return
        if isinstance(t, A.SafeDist):
            note(t.obj1, "obj", bound)
            note(t.obj2, "obj", bound)
            return
        if isinstance(t, A.Inside):
            note(t.obj, "obj", bound)
            if isinstance(t.place, str):
                note(t.place, "road", bound)
            walk(t.lane, bound)
            return
        if isinstance(t, (A.RightOf, A.OppositeA)):
            note(t.x, "vertex", bound)
            note(t.y, "vertex", bound)
            if isinstance(t.place, str):
                note(t.place, "road", bound)
            return
        if isinstance(t, A.Heading):
            note(t.obj, "obj", bound)
            if isinstance(t.place, str):
                note(t.place, "road", bound)
            return
        if isinstance(t, A.CentrifugalOk):
            note(t.obj, "obj", bound)
            walk(t.bound, bound)
            return
        if isinstance(t, A.TExists):
            walk(t.body, bound | {t.var})
            return
        if isinstance(t, A.LanesOf):
            note(t.road, "road", bound)
            return
        if isinstance(t, A.ObjEq):
            note(t.left, "obj", bound)
            note(t.right, "obj", bound)
            return
        if isinstance(t, A.EdgeA):
            note(t.src, "vertex", bound)
            note(t.dst, "vertex", bound)
            walk(t.seg, bound)
            return
        if isinstance(t, A.RoadA):
            note(t.road, "road", bound)
            note(t.src, "vertex", bound)
            note(t.dst, "vertex", bound)
            walk(t.seg, bound)
            return
        if isinstance(t, A.Exists):
            walk(t.body, bound | {t.var})
            return
        if isinstance(t, A.SegCtor):
            for a in t.args:
                walk(a, bound)
            return
        if dataclasses.is_dataclass(t):
            for fld in dataclasses.fields(t):
                walk(getattr(t, fld.name), bound)
            return
        raise TypeError(f"cannot scan {t!r}")

    walk(f, frozenset())
    return out


def close_free(f, keep=()) -> A.Formula:
    """Existentially close the free real/segment variables of ``f``,
    leaving the names in ``keep`` (and all vertex variables) free."""
    fv = free_vars(f)
    out = f
    for name in sorted(fv, reverse=True):
        sort = fv[name]
        if name in keep or sort not in ("real", "seg"):
            continue
        out = A.Exists(name, sort, out)
    return out


# ---------------------------------------------------------------------------
# translation and decision


def translate_complete(spec: CompleteSpec, f, mu: dict | None = None,
                       coalesce_cap: int = COALESCE_EDGE_CAP) -> A.Formula:
    """Segment-logic residue equisatisfiable with ``f`` over metric
    graphs of the spec's shape.  ``mu`` binds the free vertex variables
    of ``f`` to vertex keys 1..n (default: x1..xn -> 1..n)."""
    mu = default_mu(spec) if mu is None else dict(mu)
    fv = free_vars(f)
    missing = sorted(name for name, sort in fv.items()
                     if sort == "vertex" and name not in mu)
    if missing:
        raise ValueError(
            f"free vertex variables not covered by the binding: {missing}")
    bad = sorted(v for v in mu.values() if not (1 <= v <= spec.n))
    if bad:
        raise ValueError(f"vertex keys outside 1..{spec.n}: {bad}")
    edges = spec_edges(spec)
    ctx = TransCtx(range(1, spec.n + 1), edges, coalesce_cap=coalesce_cap)
    core = tr(ctx, frozenset(edges), mu, f)
    return sand(side_conditions(spec), core)


def mcl_sat(spec: CompleteSpec, f, mu: dict | None = None,
            coalesce_cap: int = COALESCE_EDGE_CAP,
            max_atoms: int | None = None) -> SatResult:
    """Decide satisfiability of ``f`` over metric graphs with the spec's
    shape (interval segments).  Free real/segment variables are read
    existentially."""
    resid = translate_complete(spec, f, mu, coalesce_cap=coalesce_cap)
    lowered = lower(resid, "iv")
    if max_atoms is None:
        return solve(lowered)
    return solve(lowered, max_atoms=max_atoms)


def entails(spec: CompleteSpec, f1, f2, mu: dict | None = None,
            **kwargs) -> bool:
    """``f1`` entails ``f2`` over the spec's graphs: f1 and not-f2 is
    unsatisfiable."""
    res = mcl_sat(spec, A.And(f1, A.Not(f2)), mu, **kwargs)
    if res.status == "unknown":
        raise RuntimeError(f"entailment undecided: {res.reason}")
    return not res.is_sat


def sat_sweep(f, max_n: int, m: int = 1, **kwargs):
    """Try complete specs with n = 1..max_n; return (n, SatResult) for
    the first satisfiable size, or (None, last result).

    A convenience only: the decision procedure is relative to a fixed
    vertex count, so an unsat sweep does not rule out larger models.
    """
    last = SatResult("unsat")
    for n in range(1, max_n + 1):
        spec = CompleteSpec.complete(n, m)
        last = mcl_sat(spec, f, **kwargs)
        if last.is_sat:
            return n, last
    return None, last


# ---------------------------------------------------------------------------
# brute-force model search (validation oracle)


def enumerate_models(spec: CompleteSpec, lengths):
    """All interval metric graphs of the spec's shape with slot lengths
    drawn from ``lengths`` (parallel slots must differ)."""
    names = [name for _, _, name in spec.slots]
    for combo in itertools.product(lengths, repeat=len(names)):
        by_pair: dict[tuple[int, int], set[float]] = {}
        ok = True
        for (i, j, _), ln in zip(spec.slots, combo):
            seen = by_pair.setdefault((i, j), set())
            if ln in seen:          # parallel edges must be distinct
                ok = False
                break
            seen.add(ln)
        if not ok:
            continue
        edges = tuple(Edge(i, j, Interval(float(ln)), name)
                      for (i, j, name), ln in zip(spec.slots, combo))
        yield MetricGraph(tuple(range(1, spec.n + 1)), edges)


def brute_force_sat(spec: CompleteSpec, f, lengths, mu: dict | None = None
                    ) -> bool:
    """Exhaustive search over ``enumerate_models``; the ground-truth
    oracle for ``mcl_sat`` on small instances."""
    from .checker import check
    mu = default_mu(spec) if mu is None else dict(mu)
    closed = close_free(f)
    return any(check(mu, g, closed) for g in enumerate_models(spec, lengths))

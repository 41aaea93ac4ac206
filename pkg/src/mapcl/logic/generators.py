"""Specification generators for the standard map shapes.

Each ``*_spec`` function produces the bottom-up formula of a shape: an
existential prefix over the participating vertices (and any symbolic
lengths) around a coalescing of edge atoms.  ``to_top_down`` and
``to_weak_top_down`` derive the conjunction-of-closures forms from any
bottom-up formula.
"""

from __future__ import annotations

import math
from typing import Optional

from ..graph import MetricGraph, path_segment
from ..maps import decompose_map
from ..segments import concat
from . import ast as A


def _len_arg(value: Optional[float], name: str, pairs: list) -> A.ArithTerm:
    """Ground constant if given, else a fresh existential real."""
    if value is not None:
        return A.num(value)
    pairs.append((name, "real"))
    return A.RVar(name)


def ring_spec(a: Optional[float] = None, r: Optional[float] = None,
              phi: Optional[float] = 0.0) -> A.Formula:
    """Ring of two straights (length a) and two U-turn arcs (radius r).

    Parameters left as ``None`` become existentially quantified reals.
    """
    pairs: list = []
    ta = _len_arg(a, "a", pairs)
    tr = _len_arg(r, "r", pairs)
    tphi = _len_arg(phi, "phi", pairs)
    pairs += [(f"x{i}", "vertex") for i in (1, 2, 3, 4)]
    pi = A.num(math.pi)
    body = A.coalesce_all(
        A.EdgeA("x1", A.SegCtor("line", (ta, tphi)), "x2"),
        A.EdgeA("x2", A.SegCtor("arc", (tr, tphi, pi)), "x3"),
        A.EdgeA("x3", A.SegCtor("line", (ta, A.Add(tphi, pi))), "x4"),
        A.EdgeA("x4", A.SegCtor("arc", (tr, A.Add(tphi, pi), pi)), "x1"),
    )
    return A.exists_many(pairs, body)


def roundabout_spec(n: int, radius: Optional[float] = None,
                    phi0: float = 0.0) -> A.Formula:
    """n entrances alternating with n exits on a circle of 2n arcs."""
    if n < 2:
        raise ValueError("roundabout needs n >= 2")
    pairs: list = []
    tr = _len_arg(radius, "r", pairs)
    verts = []
    for k in range(1, n + 1):
        verts += [f"ex{k}", f"en{k}"]
    pairs += [(v, "vertex") for v in verts]
    sweep = math.pi / n
    atoms = []
    for i, v in enumerate(verts):
        w = verts[(i + 1) % len(verts)]
        seg = A.SegCtor("arc", (tr, A.num(phi0 + i * sweep), A.num(sweep)))
        atoms.append(A.EdgeA(v, seg, w))
    return A.exists_many(pairs, A.coalesce_all(*atoms))


def intersection_spec(connections: dict, n: Optional[int] = None) -> A.Formula:
    """Junction with entrance k feeding exit j for each (k, j) in
    ``connections``; values are segment terms or None for a fresh
    symbolic interval length."""
    ks = sorted({k for k, _ in connections}) if n is None else range(1, n + 1)
    js = sorted({j for _, j in connections})
    pairs = [(f"en{k}", "vertex") for k in ks] + [(f"ex{j}", "vertex") for j in js]
    atoms = []
    for (k, j), seg in sorted(connections.items()):
        if seg is None:
            pairs.append((f"s_{k}_{j}", "real"))
            seg = A.SegCtor("iv", (A.RVar(f"s_{k}_{j}"),))
        atoms.append(A.EdgeA(f"en{k}", seg, f"ex{j}"))
    return A.exists_many(pairs, A.coalesce_all(*atoms))


def merger_spec(segs: list) -> A.Formula:
    """n entrances joined into a single exit."""
    return intersection_spec({(k + 1, 1): s for k, s in enumerate(segs)})


def fork_spec(segs: list) -> A.Formula:
    """Single entrance split into n exits."""
    conns = {(1, j + 1): s for j, s in enumerate(segs)}
    return intersection_spec(conns)


def road_spec(seg, en: str = "en", ex: str = "ex") -> A.Formula:
    """A single road: one edge from its entrance to its exit."""
    return A.exists_many([(en, "vertex"), (ex, "vertex")], A.EdgeA(en, seg, ex))


# ---------------------------------------------------------------------------
# bottom-up -> top-down transforms

def split_spec(zeta: A.Formula):
    """Split a bottom-up formula into (quantifier pairs, coalesced atoms)."""
    pairs = []
    body = zeta
    while isinstance(body, A.Exists):
        pairs.append((body.var, body.sort))
        body = body.body
    atoms = []

    def flatten(f):
        if isinstance(f, A.Coalesce):
            flatten(f.left)
            flatten(f.right)
        elif isinstance(f, (A.EdgeA, A.RoadA)):
            atoms.append(f)
        else:
            raise ValueError(
                "bottom-up specification must coalesce edge atoms, "
                f"found {type(f).__name__}")

    flatten(body)
    return pairs, atoms


def to_top_down(zeta: A.Formula) -> A.Formula:
    """Strongest top-down form: the conjunction of per-atom closures."""
    pairs, atoms = split_spec(zeta)
    return A.exists_many(pairs, A.conj(*[A.Closure(z) for z in atoms]))


def to_weak_top_down(zeta: A.Formula) -> A.Formula:
    """Cyclic-rule form: each closure implies the next one around."""
    pairs, atoms = split_spec(zeta)
    m = len(atoms)
    rules = [A.Implies(A.Closure(atoms[k]), A.Closure(atoms[(k + 1) % m]))
             for k in range(m)]
    return A.exists_many(pairs, A.conj(*rules))


def gen_bottom_up(g: MetricGraph) -> A.Formula:
    """Bottom-up specification of a decomposed map: one edge atom per road
    (with the road's full concatenated segment, entrance to exit) and one
    per junction edge.  Holds on the contraction of the map that keeps
    road endpoints and junction vertices."""
    struct = decompose_map(g)
    pairs_order: list[str] = []

    def vert(v: str) -> str:
        if v not in pairs_order:
            pairs_order.append(v)
        return v

    atoms = []
    for road in struct.roads:
        seg = None
        for eid in road.edges:
            e = next(e for e in g.edges if e.eid == eid)
            seg = e.seg if seg is None else concat(seg, e.seg)
            if seg is None:
                raise ValueError(f"road {road.name} segments do not concatenate")
        atoms.append(A.EdgeA(vert(road.entrance), A.SegConst(seg),
                             vert(road.exit)))
    for junc in struct.junctions:
        for eid in sorted(junc.edges):
            e = next(e for e in g.edges if e.eid == eid)
            atoms.append(A.EdgeA(vert(e.src), A.SegConst(e.seg), vert(e.dst)))
    if not atoms:
        raise ValueError("map has no roads or junction edges")
    return A.exists_many([(v, "vertex") for v in pairs_order],
                         A.coalesce_all(*atoms))

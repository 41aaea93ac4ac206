"""Metric graphs: directed multigraphs whose edges carry non-trivial segments.

Positions live on vertices or properly inside edges.  A ride is a forward
traversal between two positions; its label is the concatenation of the
partial and full segments along the way, and the travel distance between
positions is the length of a shortest ride (``math.inf`` when there is
none).  Paths are "acyclic" in the edge-simple sense: no edge twice,
vertices may repeat.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .segments import (
    Curve, Interval, Region, Segment,
    concat, endpoint, seg_length, segments_equal, split, variant,
    EMPTY_CURVE,
)

EdgeId = tuple[str, str, int]

#: tolerance for 2D addressing consistency
ADDRESS_TOL = 1e-6
#: tolerance for comparing offsets/lengths along edges
OFFSET_TOL = 1e-9


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    seg: Segment
    index: int = 0

    @property
    def eid(self) -> EdgeId:
        return (self.src, self.dst, self.index)

    @property
    def length(self) -> float:
        return seg_length(self.seg)


@dataclass(frozen=True)
class MetricGraph:
    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            raise ValueError("duplicate vertex names")
        kinds = set()
        seen_ids = set()
        for e in self.edges:
            if e.src not in vs or e.dst not in vs:
                raise ValueError(f"edge {e.eid} touches unknown vertex")
            if e.length <= 0:
                raise ValueError(f"edge {e.eid} has zero-length segment")
            if e.eid in seen_ids:
                raise ValueError(f"duplicate edge id {e.eid}")
            seen_ids.add(e.eid)
            kinds.add(variant(e.seg))
        if len(kinds) > 1:
            raise ValueError(f"mixed segment variants in one graph: {sorted(kinds)}")
        for a, b in itertools.combinations(self.edges, 2):
            if a.src == b.src and a.dst == b.dst and segments_equal(a.seg, b.seg):
                raise ValueError(
                    f"parallel edges {a.eid} and {b.eid} carry equal segments")

    @property
    def kind(self) -> Optional[str]:
        return variant(self.edges[0].seg) if self.edges else None

    def edge(self, eid: EdgeId) -> Edge:
        for e in self.edges:
            if e.eid == eid:
                return e
        raise KeyError(f"no edge {eid}")

    def out_edges(self, v: str) -> list[Edge]:
        return sorted((e for e in self.edges if e.src == v), key=lambda e: e.eid)

    def in_edges(self, v: str) -> list[Edge]:
        return sorted((e for e in self.edges if e.dst == v), key=lambda e: e.eid)


def mk_graph(vertices: Iterable[str], triples: Iterable[tuple[str, str, Segment]],
             meta: Optional[dict] = None) -> MetricGraph:
    """Build a graph from (src, dst, seg) triples, numbering parallel edges."""
    counts: dict[tuple[str, str], int] = {}
    edges = []
    for src, dst, seg in triples:
        i = counts.get((src, dst), 0)
        counts[(src, dst)] = i + 1
        edges.append(Edge(src, dst, seg, i))
    return MetricGraph(tuple(vertices), tuple(edges), meta or {})


# ---------------------------------------------------------------------------
# positions

@dataclass(frozen=True)
class AtVertex:
    vertex: str


@dataclass(frozen=True)
class OnEdge:
    edge: EdgeId
    offset: float


Position = Union[AtVertex, OnEdge]


def normalize_position(g: MetricGraph, p: Position) -> Position:
    """Snap edge offsets 0 and |s| to the incident vertices."""
    if isinstance(p, AtVertex):
        if p.vertex not in g.vertices:
            raise ValueError(f"unknown vertex {p.vertex!r}")
        return p
    e = g.edge(p.edge)
    if p.offset < -OFFSET_TOL or p.offset > e.length + OFFSET_TOL:
        raise ValueError(f"offset {p.offset} outside edge {e.eid} of length {e.length}")
    if p.offset <= OFFSET_TOL:
        return AtVertex(e.src)
    if p.offset >= e.length - OFFSET_TOL:
        return AtVertex(e.dst)
    return p


def positions_equal(g: MetricGraph, p: Position, q: Position) -> bool:
    p, q = normalize_position(g, p), normalize_position(g, q)
    if isinstance(p, AtVertex) and isinstance(q, AtVertex):
        return p.vertex == q.vertex
    if isinstance(p, OnEdge) and isinstance(q, OnEdge):
        return p.edge == q.edge and abs(p.offset - q.offset) <= OFFSET_TOL
    return False


# ---------------------------------------------------------------------------
# paths and rides

def acyclic_paths(g: MetricGraph, src: str, dst: str,
                  avoid: frozenset = frozenset(),
                  edge_ids: Optional[frozenset] = None) -> list[tuple[EdgeId, ...]]:
    """All non-empty edge-simple directed paths src -> dst, in lexicographic order."""
    pool = [e for e in g.edges if e.eid not in avoid
            and (edge_ids is None or e.eid in edge_ids)]
    out: dict[str, list[Edge]] = {}
    for e in sorted(pool, key=lambda e: e.eid):
        out.setdefault(e.src, []).append(e)
    found: list[tuple[EdgeId, ...]] = []
    used: set[EdgeId] = set()
    path: list[EdgeId] = []

    def walk(v: str):
        for e in out.get(v, ()):
            if e.eid in used:
                continue
            path.append(e.eid)
            used.add(e.eid)
            if e.dst == dst:
                found.append(tuple(path))
            walk(e.dst)
            used.discard(e.eid)
            path.pop()

    walk(src)
    return found


def path_segment(g: MetricGraph, path: Iterable[EdgeId]) -> Optional[Segment]:
    """Concatenated label of an edge path; None when undefined."""
    seg: Optional[Segment] = None
    for eid in path:
        e = g.edge(eid)
        seg = e.seg if seg is None else concat(seg, e.seg)
        if seg is None:
            return None
    return seg


@dataclass(frozen=True)
class Ride:
    """A forward traversal with its label and the edges it touches."""

    label: Segment
    steps: tuple[tuple[EdgeId, float, float], ...]  # (edge, from-offset, to-offset)


def _zero_segment(g: MetricGraph) -> Segment:
    k = g.kind
    if k == "interval":
        return Interval(0.0)
    if k == "region":
        return Region(EMPTY_CURVE, g.edges[0].seg.width)
    return EMPTY_CURVE


def rides(g: MetricGraph, p: Position, q: Position,
          edge_ids: Optional[frozenset] = None) -> list[Ride]:
    """All rides from p to q, by the five traversal shapes.

    (i) forward on one edge; (ii) around a self-loop; (iii) around via a
    path back to the same edge; (iv) two adjacent edges; (v) two edges
    joined by a path.  Labels with undefined concatenations are dropped.
    """
    in_pool = lambda eid: edge_ids is None or eid in edge_ids
    p, q = normalize_position(g, p), normalize_position(g, q)

    starts: list[tuple[Edge, float]] = []
    if isinstance(p, OnEdge):
        if in_pool(p.edge):
            starts.append((g.edge(p.edge), p.offset))
    else:
        starts.extend((e, 0.0) for e in g.out_edges(p.vertex) if in_pool(e.eid))
    ends: list[tuple[Edge, float]] = []
    if isinstance(q, OnEdge):
        if in_pool(q.edge):
            ends.append((g.edge(q.edge), q.offset))
    else:
        ends.extend((e, e.length) for e in g.in_edges(q.vertex) if in_pool(e.eid))

    found: list[Ride] = []
    seen: set = set()

    def emit(label: Optional[Segment], steps):
        if label is None:
            return
        key = tuple(steps)
        if key in seen:
            return
        seen.add(key)
        found.append(Ride(label, tuple(steps)))

    if positions_equal(g, p, q):
        emit(_zero_segment(g), ())

    for e, a in starts:
        suffix = split(e.seg, a, e.length)
        for e2, a2 in ends:
            prefix = split(e2.seg, 0.0, a2)
            if e.eid == e2.eid:
                if a <= a2 + OFFSET_TOL and a2 - a > OFFSET_TOL:
                    emit(split(e.seg, a, a2), [(e.eid, a, a2)])
                if a2 <= a + OFFSET_TOL:
                    if e.src == e.dst:  # (ii)
                        emit(_cat(suffix, prefix),
                             [(e.eid, a, e.length), (e.eid, 0.0, a2)])
                    for w in acyclic_paths(g, e.dst, e.src,
                                           avoid=frozenset({e.eid}), edge_ids=edge_ids):
                        mid = path_segment(g, w)
                        if mid is None:
                            continue
                        emit(_cat(_cat(suffix, mid), prefix),
                             [(e.eid, a, e.length)]
                             + [(eid, 0.0, g.edge(eid).length) for eid in w]
                             + [(e.eid, 0.0, a2)])
            else:
                if e.dst == e2.src:  # (iv)
                    emit(_cat(suffix, prefix),
                         [(e.eid, a, e.length), (e2.eid, 0.0, a2)])
                for w in acyclic_paths(g, e.dst, e2.src,
                                       avoid=frozenset({e.eid, e2.eid}),
                                       edge_ids=edge_ids):
                    mid = path_segment(g, w)
                    if mid is None:
                        continue
                    emit(_cat(_cat(suffix, mid), prefix),
                         [(e.eid, a, e.length)]
                         + [(eid, 0.0, g.edge(eid).length) for eid in w]
                         + [(e2.eid, 0.0, a2)])

    found.sort(key=lambda r: (seg_length(r.label), r.steps))
    return found


def _cat(s1: Optional[Segment], s2: Optional[Segment]) -> Optional[Segment]:
    if s1 is None or s2 is None:
        return None
    return concat(s1, s2)


def distance(g: MetricGraph, p: Position, q: Position,
             edge_ids: Optional[frozenset] = None) -> float:
    """Shortest travel distance from p to q; inf when unreachable.

    Interval graphs admit a shortest-path search; geometric graphs go
    through ride enumeration because concatenations may be undefined.
    """
    p, q = normalize_position(g, p), normalize_position(g, q)
    if positions_equal(g, p, q):
        return 0.0
    if g.kind != "interval":
        rs = rides(g, p, q, edge_ids=edge_ids)
        return min((seg_length(r.label) for r in rs), default=math.inf)

    in_pool = lambda eid: edge_ids is None or eid in edge_ids
    best = math.inf
    if isinstance(p, OnEdge) and isinstance(q, OnEdge) and p.edge == q.edge \
            and p.offset <= q.offset and in_pool(p.edge):
        best = q.offset - p.offset

    # seeds: distance to reach each vertex from p
    seeds: dict[str, float] = {}
    if isinstance(p, AtVertex):
        seeds[p.vertex] = 0.0
    elif in_pool(p.edge):
        e = g.edge(p.edge)
        seeds[e.dst] = e.length - p.offset
    sp = _dijkstra(g, seeds, edge_ids)
    if isinstance(q, AtVertex):
        best = min(best, sp.get(q.vertex, math.inf))
    elif in_pool(q.edge):
        e = g.edge(q.edge)
        best = min(best, sp.get(e.src, math.inf) + q.offset)
    return best


def _dijkstra(g: MetricGraph, seeds: dict[str, float],
              edge_ids: Optional[frozenset]) -> dict[str, float]:
    dist: dict[str, float] = {}
    heap = [(d, v) for v, d in seeds.items()]
    heapq.heapify(heap)
    while heap:
        d, v = heapq.heappop(heap)
        if v in dist:
            continue
        dist[v] = d
        for e in g.out_edges(v):
            if edge_ids is not None and e.eid not in edge_ids:
                continue
            if e.dst not in dist:
                heapq.heappush(heap, (d + e.length, e.dst))
    return dist


# ---------------------------------------------------------------------------
# contraction / refinement

def contract(g: MetricGraph, keep: frozenset = frozenset()) -> MetricGraph:
    """Least contraction: absorb every degree-(1,1) vertex whose two edges
    concatenate, except vertices listed in ``keep``."""
    verts = list(g.vertices)
    edges = list(g.edges)
    changed = True
    while changed:
        changed = False
        for v in sorted(verts):
            if v in keep:
                continue
            ins = [e for e in edges if e.dst == v]
            outs = [e for e in edges if e.src == v]
            if len(ins) != 1 or len(outs) != 1:
                continue
            e1, e2 = ins[0], outs[0]
            if e1.eid == e2.eid:  # a self-loop is not a chain
                continue
            if e1.src == v:  # self-loop plus nothing else
                continue
            s = concat(e1.seg, e2.seg)
            if s is None:
                continue
            if any(o.src == e1.src and o.dst == e2.dst and segments_equal(o.seg, s)
                   for o in edges if o.eid not in (e1.eid, e2.eid)):
                continue  # would collide with an existing edge
            idx = _next_index(edges, e1.src, e2.dst, exclude=(e1.eid, e2.eid))
            edges = [o for o in edges if o.eid not in (e1.eid, e2.eid)]
            edges.append(Edge(e1.src, e2.dst, s, idx))
            verts.remove(v)
            changed = True
            break
    return MetricGraph(tuple(verts), tuple(edges), dict(g.meta))


def _next_index(edges, src, dst, exclude=()) -> int:
    used = {e.index for e in edges if e.src == src and e.dst == dst and e.eid not in exclude}
    i = 0
    while i in used:
        i += 1
    return i


def refine(g: MetricGraph, eid: EdgeId, cuts: Iterable[float]) -> MetricGraph:
    """Split one edge at interior offsets, introducing fresh chain vertices."""
    e = g.edge(eid)
    cs = sorted(set(float(c) for c in cuts))
    if any(c <= OFFSET_TOL or c >= e.length - OFFSET_TOL for c in cs):
        raise ValueError(f"cuts {cs} must be strictly inside (0, {e.length})")
    if not cs:
        return g
    names = []
    existing = set(g.vertices)
    for i in range(len(cs)):
        base = f"{e.src}.{e.dst}.{e.index}.{i + 1}"
        name = base
        n = 0
        while name in existing:
            n += 1
            name = f"{base}_{n}"
        existing.add(name)
        names.append(name)
    bounds = [0.0] + cs + [e.length]
    chain = [e.src] + names + [e.dst]
    new_edges = [o for o in g.edges if o.eid != eid]
    for i in range(len(bounds) - 1):
        piece = split(e.seg, bounds[i], bounds[i + 1])
        idx = _next_index(new_edges, chain[i], chain[i + 1])
        new_edges.append(Edge(chain[i], chain[i + 1], piece, idx))
    return MetricGraph(tuple(g.vertices) + tuple(names), tuple(new_edges), dict(g.meta))


def is_contraction(fine: MetricGraph, coarse: MetricGraph) -> bool:
    """Whether ``coarse`` arises from ``fine`` by absorbing chain vertices."""
    if not set(coarse.vertices) <= set(fine.vertices):
        return False
    collapsed = contract(fine, keep=frozenset(coarse.vertices))
    if set(collapsed.vertices) != set(coarse.vertices):
        return False
    return _same_edge_multiset(collapsed.edges, coarse.edges)


def _same_edge_multiset(e1, e2) -> bool:
    rest = list(e2)
    if len(e1) != len(rest):
        return False
    for a in e1:
        for i, b in enumerate(rest):
            if a.src == b.src and a.dst == b.dst and segments_equal(a.seg, b.seg):
                del rest[i]
                break
        else:
            return False
    return True


# ---------------------------------------------------------------------------
# abstraction on whole graphs

def abstract_graph(g: MetricGraph, kind: str) -> MetricGraph:
    """Map every label through an abstraction; merges edges that collapse.

    ``kind`` is ``"ci"`` (curves to intervals) or ``"rc"`` (regions to
    curves).  Edge sets are sets: two parallel edges whose images coincide
    become one edge.
    """
    if kind == "ci":
        if g.kind not in (None, "curve"):
            raise ValueError(f"ci abstraction expects a curve graph, got {g.kind}")
        f = lambda s: Interval(seg_length(s))
    elif kind == "rc":
        if g.kind not in (None, "region"):
            raise ValueError(f"rc abstraction expects a region graph, got {g.kind}")
        f = lambda s: s.center
    else:
        raise ValueError(f"unknown abstraction {kind!r}")
    edges: list[Edge] = []
    for e in g.edges:
        s = f(e.seg)
        if any(o.src == e.src and o.dst == e.dst and segments_equal(o.seg, s)
               for o in edges):
            continue
        edges.append(Edge(e.src, e.dst, s, e.index))
    return MetricGraph(g.vertices, tuple(edges), dict(g.meta))


def abstract_position(g: MetricGraph, abstracted: MetricGraph, p: Position) -> Position:
    """Carry a position over to the abstracted graph (same edge id if it survived)."""
    if isinstance(p, AtVertex):
        return p
    try:
        abstracted.edge(p.edge)
        return p
    except KeyError:
        src, dst, _ = p.edge
        orig = g.edge(p.edge)
        for e in abstracted.edges:
            if e.src == src and e.dst == dst and abs(e.length - seg_length(orig.seg)) <= OFFSET_TOL:
                return OnEdge(e.eid, p.offset)
        raise


# ---------------------------------------------------------------------------
# 2D addressing

@dataclass(frozen=True)
class CircuitViolation:
    """An elementary circuit whose oriented displacements do not cancel."""

    circuit: tuple[EdgeId, ...]
    residual: tuple[float, float]


def _undirected_adj(g: MetricGraph, skip: Optional[EdgeId] = None):
    adj: dict[str, list[tuple[str, Edge, int]]] = {v: [] for v in g.vertices}
    for e in sorted(g.edges, key=lambda e: e.eid):
        if skip is not None and e.eid == skip:
            continue
        adj[e.src].append((e.dst, e, +1))
        adj[e.dst].append((e.src, e, -1))
    return adj


def weakly_connected_components(g: MetricGraph) -> list[frozenset]:
    adj = _undirected_adj(g)
    seen: set[str] = set()
    comps = []
    for v in sorted(g.vertices):
        if v in seen:
            continue
        comp = {v}
        stack = [v]
        seen.add(v)
        while stack:
            u = stack.pop()
            for w, _, _ in adj[u]:
                if w not in seen:
                    seen.add(w)
                    comp.add(w)
                    stack.append(w)
        comps.append(frozenset(comp))
    return comps


def _spanning_tree(g: MetricGraph, skip: Optional[EdgeId] = None):
    """BFS spanning forest; returns (chi, parent-edge map, tree edge ids)."""
    adj = _undirected_adj(g, skip=skip)
    chi: dict[str, tuple[float, float]] = {}
    parent: dict[str, tuple[str, Edge, int]] = {}
    tree: set[EdgeId] = set()
    for root in sorted(g.vertices):
        if root in chi:
            continue
        chi[root] = (0.0, 0.0)
        queue = [root]
        while queue:
            u = queue.pop(0)
            for w, e, sgn in adj[u]:
                if w in chi:
                    continue
                dx, dy = endpoint(e.seg)
                x, y = chi[u]
                chi[w] = (x + sgn * dx, y + sgn * dy)
                parent[w] = (u, e, sgn)
                tree.add(e.eid)
                queue.append(w)
    return chi, parent, tree


def _tree_path(parent, u: str, v: str) -> list[EdgeId]:
    """Edge ids on the tree path between u and v."""
    def chain(x):
        out = []
        while x in parent:
            p, e, _ = parent[x]
            out.append((x, e.eid))
            x = p
        return out

    cu, cv = chain(u), chain(v)
    su = {x for x, _ in cu}
    sv = {x for x, _ in cv}
    path = [eid for x, eid in cu if x not in sv] + [eid for x, eid in cv if x not in su]
    return path


def _edge_residual(chi, e: Edge) -> tuple[float, float]:
    dx, dy = endpoint(e.seg)
    x1, y1 = chi[e.src]
    x2, y2 = chi[e.dst]
    return (x1 + dx - x2, y1 + dy - y2)


def check_geometric_consistency(g: MetricGraph, tol: float = ADDRESS_TOL):
    """Planar addressing of a curve or region graph.

    Returns a dict vertex -> (x, y) when every elementary circuit closes
    up, else a CircuitViolation isolating the inconsistent edge (when one
    edge alone explains the failure) or the first failing basis circuit.
    Interval graphs carry no planar data and are rejected, as are graphs
    that fall apart into several weak components.
    """
    if g.kind == "interval":
        raise ValueError("interval graphs have no 2D addressing")
    comps = weakly_connected_components(g)
    if len(comps) > 1:
        raise ValueError(
            f"graph is not weakly connected: {[sorted(c) for c in comps]}")
    chi, parent, tree = _spanning_tree(g)
    bad: list[tuple[Edge, tuple[float, float]]] = []
    for e in sorted(g.edges, key=lambda e: e.eid):
        if e.eid in tree:
            continue
        rx, ry = _edge_residual(chi, e)
        if math.hypot(rx, ry) > tol:
            bad.append((e, (rx, ry)))
    if not bad:
        return chi

    # try to pin the failure on a single edge: rebuild the addressing
    # without it and see whether everything else closes up
    suspects: list[EdgeId] = []
    for e, _ in bad:
        suspects.append(e.eid)
        suspects.extend(_tree_path(parent, e.src, e.dst))
    for bid in sorted(set(suspects)):
        if len(weakly_connected_components(_drop_edge(g, bid))) > 1:
            continue
        chi2, parent2, tree2 = _spanning_tree(g, skip=bid)
        culprit = g.edge(bid)
        ok = all(math.hypot(*_edge_residual(chi2, e)) <= tol
                 for e in g.edges if e.eid != bid and e.eid not in tree2)
        if ok:
            circuit = tuple(_tree_path(parent2, culprit.src, culprit.dst)) + (bid,)
            return CircuitViolation(circuit, _edge_residual(chi2, culprit))
    e, res = bad[0]
    circuit = tuple(_tree_path(parent, e.src, e.dst)) + (e.eid,)
    return CircuitViolation(circuit, res)


def _drop_edge(g: MetricGraph, eid: EdgeId) -> MetricGraph:
    return MetricGraph(g.vertices, tuple(e for e in g.edges if e.eid != eid), {})


# ---------------------------------------------------------------------------
# isomorphism (used to state commutation results)

def _vertex_signature(g: MetricGraph, v: str):
    outs = sorted(round(e.length, 6) for e in g.out_edges(v))
    ins = sorted(round(e.length, 6) for e in g.in_edges(v))
    return (len(ins), len(outs), tuple(ins), tuple(outs))


def graphs_isomorphic(g1: MetricGraph, g2: MetricGraph) -> bool:
    """Vertex bijection preserving edges and segment labels."""
    if len(g1.vertices) != len(g2.vertices) or len(g1.edges) != len(g2.edges):
        return False
    sig1 = {v: _vertex_signature(g1, v) for v in g1.vertices}
    sig2 = {v: _vertex_signature(g2, v) for v in g2.vertices}
    if sorted(sig1.values()) != sorted(sig2.values()):
        return False
    order = sorted(g1.vertices, key=lambda v: (sig1[v], v))
    cands = {v: [w for w in g2.vertices if sig2[w] == sig1[v]] for v in g1.vertices}

    def consistent(mapping):
        for e in g1.edges:
            if e.src in mapping and e.dst in mapping:
                found = [o for o in g2.edges
                         if o.src == mapping[e.src] and o.dst == mapping[e.dst]
                         and segments_equal(o.seg, e.seg)]
                if not found:
                    return False
        return True

    def assign(i, mapping, used):
        if i == len(order):
            return _same_edge_multiset(
                [Edge(mapping[e.src], mapping[e.dst], e.seg, e.index) for e in g1.edges],
                list(g2.edges))
        v = order[i]
        for w in cands[v]:
            if w in used:
                continue
            mapping[v] = w
            if consistent(mapping) and assign(i + 1, mapping, used | {w}):
                return True
            del mapping[v]
        return False

    return assign(0, {}, set())

"""Road-map structure over metric graphs: roads, junctions, builders, JSON.

A vertex is a junction vertex when traffic can merge or branch there
(in-degree or out-degree above one).  Edges between two junction vertices
belong to a junction; every other edge belongs to a road, and roads are
the maximal chains of such edges.  Junctions are the weakly connected
components of the remaining subgraph.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .graph import Edge, EdgeId, MetricGraph, mk_graph
from .segments import (
    Arc, Curve, Line, Segment, seg_from_json, seg_to_json,
)


@dataclass(frozen=True)
class Road:
    name: str
    edges: tuple[EdgeId, ...]
    entrance: str
    exit: str
    lanes: int = 1


@dataclass(frozen=True)
class Junction:
    name: str
    vertices: frozenset[str]
    edges: tuple[EdgeId, ...]
    entrances: tuple[str, ...]
    exits: tuple[str, ...]


@dataclass(frozen=True)
class MapStructure:
    roads: tuple[Road, ...]
    junctions: tuple[Junction, ...]


def _is_junction_vertex(g: MetricGraph, v: str) -> bool:
    return len(g.in_edges(v)) > 1 or len(g.out_edges(v)) > 1


def decompose_map(g: MetricGraph) -> MapStructure:
    """Split a map into roads and junctions."""
    jverts = {v for v in g.vertices if _is_junction_vertex(g, v)}
    jedges = [e for e in g.edges if e.src in jverts and e.dst in jverts]
    road_edges = [e for e in g.edges if e.eid not in {x.eid for x in jedges}]

    # roads: chains of road edges glued at interior degree-(1,1) vertices
    roads: list[Road] = []
    assigned: set[EdgeId] = set()
    named = _named_roads(g)
    for e in sorted(road_edges, key=lambda e: e.eid):
        if e.eid in assigned:
            continue
        chain = [e]
        while True:  # extend backwards
            v = chain[0].src
            ins = g.in_edges(v)
            if v in jverts or len(ins) != 1 or len(g.out_edges(v)) != 1:
                break
            prev = ins[0]
            if prev.eid in {c.eid for c in chain}:
                break  # closed ring
            chain.insert(0, prev)
        while True:  # extend forwards
            v = chain[-1].dst
            outs = g.out_edges(v)
            if v in jverts or len(outs) != 1 or len(g.in_edges(v)) != 1:
                break
            nxt = outs[0]
            if nxt.eid in {c.eid for c in chain}:
                break
            chain.append(nxt)
        eids = tuple(c.eid for c in chain)
        assigned.update(eids)
        name = named.get(eids, f"r{len(roads) + 1}")
        lanes = _named_lanes(g, name)
        roads.append(Road(name, eids, chain[0].src, chain[-1].dst, lanes))

    junctions: list[Junction] = []
    for comp in _components(jverts, jedges):
        inside = [e for e in jedges if e.src in comp and e.dst in comp]
        has_in = {e.dst for e in inside}
        has_out = {e.src for e in inside}
        junctions.append(Junction(
            name=f"j{len(junctions) + 1}",
            vertices=frozenset(comp),
            edges=tuple(sorted(e.eid for e in inside)),
            entrances=tuple(sorted(v for v in comp if v not in has_in)),
            exits=tuple(sorted(v for v in comp if v not in has_out)),
        ))
    return MapStructure(tuple(roads), tuple(junctions))


def _components(verts: set[str], edges: list[Edge]) -> list[list[str]]:
    adj: dict[str, set[str]] = {v: set() for v in verts}
    for e in edges:
        adj[e.src].add(e.dst)
        adj[e.dst].add(e.src)
    seen: set[str] = set()
    comps = []
    for v in sorted(verts):
        if v in seen:
            continue
        comp = [v]
        seen.add(v)
        stack = [v]
        while stack:
            u = stack.pop()
            for w in sorted(adj[u]):
                if w not in seen:
                    seen.add(w)
                    comp.append(w)
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def _named_roads(g: MetricGraph) -> dict[tuple, str]:
    out = {}
    for r in g.meta.get("roads", []):
        out[tuple(tuple(e) for e in r["edges"])] = r["name"]
    return out


def _named_lanes(g: MetricGraph, name: str) -> int:
    for r in g.meta.get("roads", []):
        if r["name"] == name:
            return int(r.get("lanes", 1))
    return 1


def annotate(g: MetricGraph) -> MetricGraph:
    """Store the decomposition in the graph's meta block."""
    ms = decompose_map(g)
    meta = dict(g.meta)
    meta["roads"] = [
        {"name": r.name, "edges": [list(e) for e in r.edges],
         "en": r.entrance, "ex": r.exit, "lanes": r.lanes}
        for r in ms.roads]
    meta["junctions"] = [
        {"name": j.name, "vertices": sorted(j.vertices),
         "edges": [list(e) for e in j.edges],
         "en": list(j.entrances), "ex": list(j.exits)}
        for j in ms.junctions]
    return MetricGraph(g.vertices, g.edges, meta)


# ---------------------------------------------------------------------------
# builders

def build_road(entrance: str, seg: Segment, exit: str, name: str = "r",
               lanes: int = 1) -> MetricGraph:
    g = mk_graph([entrance, exit], [(entrance, exit, seg)])
    meta = {"roads": [{"name": name, "edges": [[entrance, exit, 0]],
                       "en": entrance, "ex": exit, "lanes": lanes}]}
    return MetricGraph(g.vertices, g.edges, meta)


def four_way_intersection(r: float = 1.0, d: float = 0.5,
                          approach: float = 0.0) -> MetricGraph:
    """Right-hand four-way junction: per entrance, a straight crossing, a
    tight right turn (radius r) and a wide left turn (radius r + d).

    ``approach`` > 0 additionally attaches straight approach and exit
    roads of that length to every entrance/exit.
    """
    if r <= 0 or d < 0:
        raise ValueError("need r > 0 and d >= 0")
    phis = {1: 0.0, 2: math.pi / 2, 3: math.pi, 4: -math.pi / 2}
    nxt = lambda k, i: (k - 1 + i) % 4 + 1
    verts = [f"u{k}" for k in range(1, 5)] + [f"v{k}" for k in range(1, 5)]
    triples: list[tuple[str, str, Segment]] = []
    for k in range(1, 5):
        phi = phis[k]
        triples.append((f"u{k}", f"v{nxt(k, 2)}", Curve((Line(2 * r + d, phi),))))
        triples.append((f"u{k}", f"v{nxt(k, 1)}", Curve((Arc(r, phi, -math.pi / 2),))))
        triples.append((f"u{k}", f"v{nxt(k, 3)}", Curve((Arc(r + d, phi, math.pi / 2),))))
    if approach > 0:
        for k in range(1, 5):
            verts += [f"w{k}", f"x{k}"]
            triples.append((f"w{k}", f"u{k}", Curve((Line(approach, phis[k]),))))
            out_phi = phis[nxt(k, 2)]
            triples.append((f"v{k}", f"x{k}", Curve((Line(approach, out_phi),))))
    return annotate(mk_graph(verts, triples))


def build_ring(a: float, r: float, phi: float = 0.0) -> MetricGraph:
    """Closed ring: two straights of length ``a`` joined by two U-arcs."""
    segs = [
        Curve((Line(a, phi),)),
        Curve((Arc(r, phi, math.pi),)),
        Curve((Line(a, phi + math.pi),)),
        Curve((Arc(r, phi + math.pi, math.pi),)),
    ]
    triples = [(f"x{i + 1}", f"x{(i + 1) % 4 + 1}", segs[i]) for i in range(4)]
    return annotate(mk_graph(["x1", "x2", "x3", "x4"], triples))


def build_roundabout(n: int, radius: float, phi0: float = 0.0) -> MetricGraph:
    """Circular roundabout with n entrances and n exits alternating on the
    ring; 2n arcs, each sweeping pi/n counterclockwise."""
    if n < 2:
        raise ValueError("roundabout needs n >= 2")
    verts = []
    for k in range(1, n + 1):
        verts += [f"ex{k}", f"en{k}"]
    triples = []
    sweep = math.pi / n
    for i, v in enumerate(verts):
        w = verts[(i + 1) % len(verts)]
        triples.append((v, w, Curve((Arc(radius, phi0 + i * sweep, sweep),))))
    return annotate(mk_graph(verts, triples))


def build_merger(segs: Iterable[Segment]) -> MetricGraph:
    segs = list(segs)
    verts = [f"en{k + 1}" for k in range(len(segs))] + ["ex"]
    return annotate(mk_graph(verts, [(f"en{k + 1}", "ex", s) for k, s in enumerate(segs)]))


def build_fork(segs: Iterable[Segment]) -> MetricGraph:
    segs = list(segs)
    verts = ["en"] + [f"ex{k + 1}" for k in range(len(segs))]
    return annotate(mk_graph(verts, [("en", f"ex{k + 1}", s) for k, s in enumerate(segs)]))


def build_intersection(n: int, connections: dict[tuple[int, int], Segment]) -> MetricGraph:
    """Junction template: entrance k feeds exit j for each (k, j) key."""
    verts = [f"en{k + 1}" for k in range(n)] + [f"ex{k + 1}" for k in range(n)]
    triples = [(f"en{k}", f"ex{j}", s) for (k, j), s in sorted(connections.items())]
    return annotate(mk_graph(verts, triples))


# ---------------------------------------------------------------------------
# serialization

def map_to_json(g: MetricGraph) -> dict:
    return {
        "vertices": list(g.vertices),
        "edges": [{"src": e.src, "dst": e.dst, "index": e.index,
                   "seg": seg_to_json(e.seg)} for e in g.edges],
        "meta": g.meta,
    }


def map_from_json(d: dict) -> MetricGraph:
    try:
        verts = [str(v) for v in d["vertices"]]
        counts: dict[tuple[str, str], int] = {}
        edges = []
        for e in d["edges"]:
            src, dst = str(e["src"]), str(e["dst"])
            if "index" in e:
                idx = int(e["index"])
            else:
                idx = counts.get((src, dst), 0)
            counts[(src, dst)] = max(counts.get((src, dst), 0), idx + 1)
            edges.append(Edge(src, dst, seg_from_json(e["seg"]), idx))
        meta = d.get("meta", {})
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bad map JSON: {exc}") from exc
    return MetricGraph(tuple(verts), tuple(edges), meta)


def load_map(path: str) -> MetricGraph:
    with open(path) as fh:
        return map_from_json(json.load(fh))


def save_map(g: MetricGraph, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(map_to_json(g), fh, indent=2)
        fh.write("\n")

"""Metric graphs: positions, rides, quasi-metric distances, refinement,
contraction, abstraction and 2D-geometric consistency.

Distance oracle: a test-local Dijkstra over vertices, extended to edge
interiors by hand, independent of the library's search.
"""

import heapq
import math

import pytest
from hypothesis import given, settings, strategies as st

from mapcl.graph import (
    AtVertex,
    CircuitViolation,
    MetricGraph,
    OnEdge,
    abstract_graph,
    abstract_position,
    acyclic_paths,
    check_geometric_consistency,
    contract,
    distance,
    graphs_isomorphic,
    is_contraction,
    mk_graph,
    normalize_position,
    path_segment,
    positions_equal,
    refine,
    rides,
    weakly_connected_components,
)
from mapcl.segments import Arc, Interval, Line, Region, curve, seg_length, split


def iv(x: float) -> Interval:
    return Interval(x)


def line_graph():
    return mk_graph(["u", "v", "w"],
                    [("u", "v", iv(2.0)), ("v", "w", iv(3.0))])


def cycle_graph():
    return mk_graph(["u", "v", "w"],
                    [("u", "v", iv(1.0)), ("v", "w", iv(2.0)),
                     ("w", "u", iv(3.0))])


# --- construction -----------------------------------------------------------


def test_mk_graph_basics():
    g = line_graph()
    assert g.vertices == ("u", "v", "w")
    assert [e.eid for e in g.edges] == [("u", "v", 0), ("v", "w", 0)]
    assert g.kind == "interval"


def test_mk_graph_rejects_zero_length():
    with pytest.raises(ValueError):
        mk_graph(["u", "v"], [("u", "v", iv(0.0))])


def test_mk_graph_rejects_equal_parallel_edges():
    with pytest.raises(ValueError):
        mk_graph(["u", "v"], [("u", "v", iv(2.0)), ("u", "v", iv(2.0))])
    # distinct parallel segments are fine and get distinct indices
    g = mk_graph(["u", "v"], [("u", "v", iv(2.0)), ("u", "v", iv(3.0))])
    assert sorted(e.eid for e in g.edges) == [("u", "v", 0), ("u", "v", 1)]


def test_mk_graph_rejects_unknown_endpoint():
    with pytest.raises(ValueError):
        mk_graph(["u"], [("u", "x", iv(1.0))])


def test_kind_of_mixed_graph_rejected():
    with pytest.raises(ValueError):
        mk_graph(["u", "v"], [("u", "v", iv(1.0)),
                              ("v", "u", curve(Line(1.0, 0.0)))])


# --- positions --------------------------------------------------------------


def test_normalize_position_endpoints():
    g = line_graph()
    assert normalize_position(g, OnEdge(("u", "v", 0), 0.0)) == AtVertex("u")
    assert normalize_position(g, OnEdge(("u", "v", 0), 2.0)) == AtVertex("v")
    p = OnEdge(("u", "v", 0), 1.0)
    assert normalize_position(g, p) == p


def test_positions_equal():
    g = line_graph()
    assert positions_equal(g, OnEdge(("u", "v", 0), 2.0), AtVertex("v"))
    assert not positions_equal(g, AtVertex("u"), AtVertex("v"))


# --- rides ------------------------------------------------------------------


def test_ride_shapes_on_a_line():
    g = line_graph()
    # vertex to vertex through an intermediate vertex
    rs = rides(g, AtVertex("u"), AtVertex("w"))
    assert len(rs) == 1
    assert seg_length(rs[0].label) == pytest.approx(5.0)
    # interior to interior on one edge
    rs = rides(g, OnEdge(("u", "v", 0), 0.5), OnEdge(("u", "v", 0), 1.5))
    assert len(rs) == 1 and seg_length(rs[0].label) == pytest.approx(1.0)
    # interior to interior across the junction vertex
    rs = rides(g, OnEdge(("u", "v", 0), 1.5), OnEdge(("v", "w", 0), 1.0))
    assert len(rs) == 1 and seg_length(rs[0].label) == pytest.approx(1.5)
    # no ride against the direction
    assert rides(g, AtVertex("w"), AtVertex("u")) == []


def test_zero_length_ride_exists():
    g = line_graph()
    rs = rides(g, AtVertex("v"), AtVertex("v"))
    assert len(rs) >= 1
    assert min(seg_length(r.label) for r in rs) == 0.0


def test_rides_with_edge_restriction():
    g = cycle_graph()
    all_rides = rides(g, AtVertex("u"), AtVertex("w"))
    assert len(all_rides) == 1
    restricted = rides(g, AtVertex("u"), AtVertex("w"),
                       edge_ids=frozenset([("u", "v", 0)]))
    assert restricted == []


def test_parallel_edges_give_parallel_rides():
    g = mk_graph(["u", "v"], [("u", "v", iv(2.0)), ("u", "v", iv(3.0))])
    rs = rides(g, AtVertex("u"), AtVertex("v"))
    assert sorted(seg_length(r.label) for r in rs) == pytest.approx([2.0, 3.0])


# --- distances --------------------------------------------------------------


def test_distance_is_asymmetric_on_cycle():
    g = cycle_graph()
    assert distance(g, AtVertex("u"), AtVertex("v")) == pytest.approx(1.0)
    assert distance(g, AtVertex("v"), AtVertex("u")) == pytest.approx(5.0)


def test_distance_unreachable_is_inf():
    g = line_graph()
    assert distance(g, AtVertex("w"), AtVertex("u")) == math.inf


def _oracle_vertex_dist(g, s, t):
    dist = {v: math.inf for v in g.vertices}
    dist[s] = 0.0
    pq = [(0.0, s)]
    while pq:
        d, v = heapq.heappop(pq)
        if d > dist[v]:
            continue
        for e in g.edges:
            if e.src == v:
                nd = d + seg_length(e.seg)
                if nd < dist[e.dst]:
                    dist[e.dst] = nd
                    heapq.heappush(pq, (nd, e.dst))
    return dist[t]


def _oracle_dist(g, p, q):
    """Edge-interior extension of the vertex oracle."""
    def as_edge(p):
        return p if isinstance(p, OnEdge) else None

    segs = {e.eid: e.seg for e in g.edges}
    best = math.inf
    pe, qe = as_edge(p), as_edge(q)
    if pe is not None and qe is not None and pe.edge == qe.edge \
            and pe.offset <= qe.offset:
        best = qe.offset - pe.offset
    if pe is None and qe is None:
        return min(best, _oracle_vertex_dist(g, p.vertex, q.vertex))
    starts = ([(p.vertex, 0.0)] if pe is None
              else [(pe.edge[1], seg_length(segs[pe.edge]) - pe.offset)])
    ends = ([(q.vertex, 0.0)] if qe is None
            else [(qe.edge[0], qe.offset)])
    for sv, sc in starts:
        for ev, ec in ends:
            best = min(best, sc + _oracle_vertex_dist(g, sv, ev) + ec)
    return best


@st.composite
def graphs(draw):
    n = draw(st.integers(min_value=2, max_value=5))
    verts = [f"n{i}" for i in range(n)]
    m = draw(st.integers(min_value=1, max_value=7))
    triples = []
    for k in range(m):
        src = draw(st.sampled_from(verts))
        dst = draw(st.sampled_from(verts))
        base = draw(st.floats(min_value=0.5, max_value=5.0))
        # index-dependent nudge keeps parallel segments distinct
        triples.append((src, dst, iv(base + k * 1e-3)))
    return mk_graph(verts, triples)


@st.composite
def graph_and_positions(draw):
    g = draw(graphs())
    def pos():
        if draw(st.booleans()):
            return AtVertex(draw(st.sampled_from(list(g.vertices))))
        e = draw(st.sampled_from(list(g.edges)))
        frac = draw(st.floats(min_value=0.1, max_value=0.9))
        return OnEdge(e.eid, frac * seg_length(e.seg))
    return g, pos(), pos()


@settings(max_examples=120, deadline=None)
@given(graph_and_positions())
def test_distance_matches_oracle(gpq):
    g, p, q = gpq
    got = distance(g, p, q)
    want = _oracle_dist(g, p, q)
    if want == math.inf:
        assert got == math.inf
    else:
        assert got == pytest.approx(want, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(graph_and_positions())
def test_distance_is_min_over_rides(gpq):
    g, p, q = gpq
    rs = rides(g, p, q)
    got = distance(g, p, q)
    if not rs:
        assert got == math.inf
    else:
        assert got == pytest.approx(min(seg_length(r.label) for r in rs),
                                    abs=1e-9)


# --- refinement and contraction ---------------------------------------------


def test_refine_splits_an_edge():
    g = line_graph()
    r = refine(g, ("u", "v", 0), [0.5])
    assert len(r.edges) == 3
    assert distance(r, AtVertex("u"), AtVertex("v")) == pytest.approx(2.0)
    # the cut vertex sits at offset 0.5 from u
    new = [v for v in r.vertices if v not in g.vertices]
    assert len(new) == 1
    assert distance(r, AtVertex("u"), AtVertex(new[0])) == pytest.approx(0.5)


def test_refine_rejects_bad_cut():
    g = line_graph()
    with pytest.raises(ValueError):
        refine(g, ("u", "v", 0), [2.5])
    with pytest.raises(ValueError):
        refine(g, ("u", "v", 0), [0.0])


def test_contract_merges_chain():
    g = line_graph()  # v has one in, one out: contractible
    c = contract(g)
    assert len(c.edges) == 1 and len(c.vertices) == 2
    assert seg_length(c.edges[0].seg) == pytest.approx(5.0)
    assert is_contraction(g, c)


def test_contract_keep():
    g = line_graph()
    c = contract(g, keep=frozenset(["v"]))
    assert graphs_isomorphic(c, g)


@settings(max_examples=80, deadline=None)
@given(graphs(), st.data())
def test_refine_contract_round_trip(g, data):
    e = data.draw(st.sampled_from(list(g.edges)))
    frac = data.draw(st.floats(min_value=0.2, max_value=0.8))
    cut = frac * seg_length(e.seg)
    r = refine(g, e.eid, [cut])
    back = contract(r, keep=frozenset(g.vertices))
    assert graphs_isomorphic(back, g)
    # isometry on the surviving vertices
    for a in g.vertices:
        for b in g.vertices:
            d0 = distance(g, AtVertex(a), AtVertex(b))
            d1 = distance(r, AtVertex(a), AtVertex(b))
            if d0 == math.inf:
                assert d1 == math.inf
            else:
                assert d1 == pytest.approx(d0, abs=1e-9)


# --- abstraction ------------------------------------------------------------


def curve_line_graph():
    return mk_graph(["u", "v", "w"],
                    [("u", "v", curve(Line(2.0, 0.0))),
                     ("v", "w", curve(Arc(1.0, 0.0, math.pi / 2)))])


def test_abstract_graph_lengths():
    g = curve_line_graph()
    a = abstract_graph(g, "ci")
    assert a.kind == "interval"
    for e, f in zip(g.edges, a.edges):
        assert e.eid == f.eid
        assert seg_length(f.seg) == pytest.approx(seg_length(e.seg))


def test_abstract_region_graph_to_curves():
    g = mk_graph(["u", "v"],
                 [("u", "v", Region(curve(Line(2.0, 0.0)), 1.0))])
    a = abstract_graph(g, "rc")
    assert a.kind == "curve"
    assert a.edges[0].seg == curve(Line(2.0, 0.0))


def test_abstract_position_and_ride_simulation():
    g = curve_line_graph()
    a = abstract_graph(g, "ci")
    p = OnEdge(("u", "v", 0), 0.5)
    q = OnEdge(("v", "w", 0), 1.0)
    pa = abstract_position(g, a, p)
    qa = abstract_position(g, a, q)
    fine = rides(g, p, q)
    coarse = rides(a, pa, qa)
    assert sorted(seg_length(r.label) for r in fine) == \
        pytest.approx(sorted(seg_length(r.label) for r in coarse))


# --- geometric consistency --------------------------------------------------


def s_curve(width_r: float = 1.0):
    """An S-shaped curve from (0,0) to (4,0) with flat entry and exit."""
    return curve(Arc(width_r, 0.0, -math.pi / 2),
                 Arc(width_r, -math.pi / 2, math.pi),
                 Arc(width_r, math.pi / 2, -math.pi / 2))


def test_s_curve_lands_where_the_line_does():
    from mapcl.segments import endpoint
    assert endpoint(s_curve()) == pytest.approx((4.0, 0.0))


def test_consistent_parallel_pair_gets_addressing():
    g = mk_graph(["u", "v"],
                 [("u", "v", curve(Line(4.0, 0.0))), ("u", "v", s_curve())])
    chi = check_geometric_consistency(g)
    assert isinstance(chi, dict)
    dx = chi["v"][0] - chi["u"][0]
    dy = chi["v"][1] - chi["u"][1]
    assert (dx, dy) == pytest.approx((4.0, 0.0))


def test_inconsistent_pair_reports_violation():
    g = mk_graph(["u", "v"],
                 [("u", "v", curve(Line(5.0, 0.0))), ("u", "v", s_curve())])
    out = check_geometric_consistency(g)
    assert isinstance(out, CircuitViolation)
    assert abs(abs(out.residual[0]) - 1.0) <= 1e-9
    assert abs(out.residual[1]) <= 1e-9
    eids = {("u", "v", 0), ("u", "v", 1)}
    assert set(out.circuit) <= eids and out.circuit


def test_consistency_rejects_interval_graphs():
    with pytest.raises(ValueError):
        check_geometric_consistency(line_graph())


def test_consistency_rejects_disconnected_graphs():
    g = mk_graph(["a", "b", "c", "d"],
                 [("a", "b", curve(Line(1.0, 0.0))),
                  ("c", "d", curve(Line(1.0, 0.0)))])
    assert len(weakly_connected_components(g)) == 2
    with pytest.raises(ValueError):
        check_geometric_consistency(g)


# --- paths ------------------------------------------------------------------


def test_acyclic_paths_and_path_segment():
    g = cycle_graph()
    paths = acyclic_paths(g, "u", "w")
    assert paths == [(("u", "v", 0), ("v", "w", 0))]
    seg = path_segment(g, paths[0])
    assert seg_length(seg) == pytest.approx(3.0)


def test_path_segment_none_on_tangent_break():
    g = mk_graph(["u", "v", "w"],
                 [("u", "v", curve(Line(1.0, 0.0))),
                  ("v", "w", curve(Line(1.0, 1.0)))])
    assert path_segment(g, [("u", "v", 0), ("v", "w", 0)]) is None

"""Map structure: road/junction decomposition, the built-in map
patterns, geometric addressing and serialization."""

import math

import pytest

from mapcl.graph import AtVertex, check_geometric_consistency, distance
from mapcl.maps import (
    Junction,
    Road,
    build_fork,
    build_intersection,
    build_merger,
    build_ring,
    build_road,
    build_roundabout,
    decompose_map,
    four_way_intersection,
    load_map,
    map_from_json,
    map_to_json,
    save_map,
)
from mapcl.predicates import opposite, right_of
from mapcl.segments import Interval, Line, curve, seg_length

from helpers import highway


# --- decomposition ----------------------------------------------------------


def test_highway_decomposes_to_one_road():
    g = highway(lanes=2)
    ms = decompose_map(g)
    assert ms.junctions == ()
    assert len(ms.roads) == 1
    road = ms.roads[0]
    assert road == Road("r", (("u", "v", 0),), "u", "v", 2)


def test_four_way_decomposes_to_junction():
    g = four_way_intersection(1.0, 0.5)
    ms = decompose_map(g)
    assert ms.roads == ()
    assert len(ms.junctions) == 1
    j = ms.junctions[0]
    assert j.entrances == ("u1", "u2", "u3", "u4")
    assert j.exits == ("v1", "v2", "v3", "v4")
    assert j.vertices == frozenset(j.entrances) | frozenset(j.exits)
    assert len(j.edges) == 12


def test_four_way_with_approaches_adds_roads():
    g = four_way_intersection(1.0, 0.5, approach=50.0)
    ms = decompose_map(g)
    assert len(ms.junctions) == 1
    assert len(ms.roads) == 8
    ends = {(r.entrance, r.exit) for r in ms.roads}
    assert ("w1", "u1") in ends and ("v1", "x1") in ends


def test_four_way_geometry_is_consistent():
    g = four_way_intersection(1.0, 0.5)
    chi = check_geometric_consistency(g)
    assert isinstance(chi, dict)
    assert set(chi) == set(g.vertices)


def test_four_way_relative_placement():
    g = four_way_intersection(1.0, 0.5)
    J = decompose_map(g).junctions[0].vertices
    # the entrance one quarter turn clockwise is on your right
    assert right_of(g, "u2", "u1", J)
    assert right_of(g, "u3", "u2", J)
    assert right_of(g, "u1", "u4", J)
    assert not right_of(g, "u1", "u2", J)
    assert not right_of(g, "u3", "u1", J)
    # facing entrances
    assert opposite(g, "u1", "u3", J)
    assert opposite(g, "u3", "u1", J)
    assert opposite(g, "u2", "u4", J)
    assert not opposite(g, "u1", "u2", J)


# --- builders ---------------------------------------------------------------


def test_build_road_metadata():
    g = build_road("a", Interval(7.0), "b", name="main", lanes=3)
    road = decompose_map(g).roads[0]
    assert road.name == "main" and road.lanes == 3
    assert road.entrance == "a" and road.exit == "b"


def test_build_ring_distances():
    g = build_ring(10.0, 2.0)
    assert len(g.vertices) == 4 and len(g.edges) == 4
    # straights a then U-arcs pi*r, alternating
    lens = [seg_length(e.seg) for e in g.edges]
    assert lens == pytest.approx([10.0, 2 * math.pi, 10.0, 2 * math.pi])
    assert distance(g, AtVertex("x1"), AtVertex("x3")) == \
        pytest.approx(10.0 + 2 * math.pi, abs=1e-9)
    # going the other way around costs the rest of the circumference
    assert distance(g, AtVertex("x3"), AtVertex("x1")) == \
        pytest.approx(10.0 + 2 * math.pi, abs=1e-9)
    assert isinstance(check_geometric_consistency(g), dict)


def test_build_roundabout_shape():
    g = build_roundabout(4, 6.0)
    assert len(g.edges) == 8
    for e in g.edges:
        assert seg_length(e.seg) == pytest.approx(6.0 * math.pi / 4)
    assert isinstance(check_geometric_consistency(g), dict)
    # one full loop brings you back
    circumference = sum(seg_length(e.seg) for e in g.edges)
    assert circumference == pytest.approx(2 * math.pi * 6.0)


def test_build_roundabout_rejects_tiny():
    with pytest.raises(ValueError):
        build_roundabout(1, 5.0)


def test_build_merger_and_fork():
    m = build_merger([Interval(5.0), Interval(5.0), Interval(7.0)])
    assert len(m.edges) == 3
    assert all(e.dst == "ex" for e in m.edges)
    assert sorted(e.src for e in m.edges) == ["en1", "en2", "en3"]
    f = build_fork([Interval(4.0), Interval(6.0)])
    assert all(e.src == "en" for e in f.edges)
    assert sorted(e.dst for e in f.edges) == ["ex1", "ex2"]


def test_build_intersection_template():
    seg = curve(Line(3.0, 0.0))
    g = build_intersection(2, {(1, 2): seg, (2, 1): curve(Line(3.0, math.pi))})
    assert len(g.edges) == 2
    assert {(e.src, e.dst) for e in g.edges} == {("en1", "ex2"), ("en2", "ex1")}


def test_annotate_stores_decomposition():
    g = four_way_intersection(1.0, 0.5)
    assert "roads" in g.meta or "junctions" in g.meta


# --- serialization ----------------------------------------------------------


def test_map_json_round_trip():
    g = four_way_intersection(1.0, 0.5, approach=50.0)
    back = map_from_json(map_to_json(g))
    assert back.vertices == g.vertices
    assert back.edges == g.edges
    assert back.meta == g.meta


def test_map_json_round_trip_interval():
    g = build_merger([Interval(5.0), Interval(5.0)])
    back = map_from_json(map_to_json(g))
    assert back.edges == g.edges


def test_save_and_load(tmp_path):
    g = build_ring(10.0, 2.0)
    path = str(tmp_path / "ring.json")
    save_map(g, path)
    back = load_map(path)
    assert back.vertices == g.vertices and back.edges == g.edges


def test_map_from_json_rejects_garbage():
    with pytest.raises((ValueError, KeyError)):
        map_from_json({"vertices": ["a"]})

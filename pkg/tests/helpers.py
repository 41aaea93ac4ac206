"""Shared builders for maps, world states and runs used across the suite."""

from __future__ import annotations

import math

from mapcl.graph import AtVertex, OnEdge
from mapcl.maps import Junction, build_road, decompose_map, four_way_intersection
from mapcl.segments import Line, curve, seg_length, split
from mapcl.world import GREEN, LIGHT, SIGN, VEHICLE, ObjState, Run, WorldState, step

HW_LEN = 2000.0
HW_SEG = curve(Line(HW_LEN, 0.0))


def highway(lanes: int = 2):
    """Straight two-kilometre road u -> v named "r"."""
    return build_road("u", HW_SEG, "v", name="r", lanes=lanes)


def hw_pos(x: float):
    """Position x metres from u on the highway."""
    if x == 0.0:
        return AtVertex("u")
    if x == HW_LEN:
        return AtVertex("v")
    return OnEdge(("u", "v", 0), x)


def hw_it(x: float):
    """Rest-of-road itinerary starting x metres from u."""
    return split(HW_SEG, x, HW_LEN)


def hw_car(uid: float, x: float, sp: float, ln: float = 1.0, **kw) -> ObjState:
    return ObjState(uid, VEHICLE, hw_pos(x), hw_it(x), sp=sp, ln=ln, **kw)


def hw_sign(uid: float, x: float) -> ObjState:
    return ObjState(uid, SIGN, hw_pos(x), None)


def hw_light(uid: float, x: float, cl: float = GREEN) -> ObjState:
    return ObjState(uid, LIGHT, hw_pos(x), None, cl=cl)


def drive(g, initial: WorldState, dt: float, n: int) -> Run:
    """n uncontrolled steps from ``initial``."""
    states = [initial]
    for _ in range(n):
        states.append(step(g, states[-1], dt))
    return Run(g, states)


def mk_run(g, objs_by_t: list[dict], t0: float = 0.0, dt: float = 1.0) -> Run:
    """Hand-built run: one object dict per time step."""
    states = [WorldState(objs, t0 + i * dt) for i, objs in enumerate(objs_by_t)]
    return Run(g, states)


def seg_of(g, eid):
    for e in g.edges:
        if e.eid == eid:
            return e.seg
    raise KeyError(eid)


# --- four-way junction fixtures --------------------------------------------


def junction_map(approach: float = 50.0):
    """Example junction with approach and exit roads; returns (g, junction)."""
    g = four_way_intersection(1.0, 0.5, approach=approach)
    j = decompose_map(g).junctions[0]
    return g, j


def at_entrance(uid: float, v: str, it, sp: float = 0.0, **kw) -> ObjState:
    return ObjState(uid, VEHICLE, AtVertex(v), it, sp=sp, **kw)


def vertex_sign(uid: float, v: str) -> ObjState:
    return ObjState(uid, SIGN, AtVertex(v), None)


def vertex_light(uid: float, v: str, cl: float = GREEN) -> ObjState:
    return ObjState(uid, LIGHT, AtVertex(v), None, cl=cl)


# --- Fig.-8-style overtaking setup -----------------------------------------

from mapcl.logic import ast as A  # noqa: E402
from mapcl.monitor import Scene  # noqa: E402

EGO, C1, C2 = 1.0, 2.0, 3.0


def overtake_state() -> WorldState:
    """Three vehicles on the two-lane highway: ego trails c1 on lane 1,
    c2 closes in on lane 2."""
    return WorldState({
        "ego": hw_car(EGO, 500.0, 100.0, ln=1.0),
        "c1": hw_car(C1, 584.0, 100.0, ln=1.0),
        "c2": hw_car(C2, 400.0, 110.0, ln=2.0),
    }, 0.0)


def overtaken_state() -> WorldState:
    """The same vehicles twelve seconds later, c2 back on lane 1."""
    return WorldState({
        "ego": hw_car(EGO, 1700.0, 100.0, ln=1.0),
        "c1": hw_car(C1, 1784.0, 100.0, ln=1.0),
        "c2": hw_car(C2, 1720.0, 110.0, ln=1.0),
    }, 12.0)


def eqn(a, b) -> A.Formula:
    return A.And(A.Leq(a, b), A.Leq(b, a))


def overtake_scenes() -> tuple[Scene, Scene]:
    """Before/after scenes of the overtaking manoeuvre on the highway."""
    psi_map = A.And(A.RoadA("r", "x", A.SVar("s"), "y"),
                    eqn(A.LanesOf("r"), A.Const(2.0)))

    def psi_add(c2_lane: float) -> A.Formula:
        return A.conj(A.Inside("ego", "r", A.Const(1.0)),
                      A.Inside("c1", "r", A.Const(1.0)),
                      A.Inside("c2", "r", A.Const(c2_lane)))

    dyn1 = A.And(A.Meets("ego", A.Const(84.0), "c1"),
                 A.Meets("c2", A.Const(100.0), "ego"))
    dyn2 = A.And(A.Meets("ego", A.Const(20.0), "c2"),
                 A.Meets("c2", A.Const(64.0), "c1"))
    return (Scene(psi_map, psi_add(2.0), dyn1),
            Scene(psi_map, psi_add(1.0), dyn2))

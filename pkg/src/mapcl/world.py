"""Discrete-step traffic worlds: states, dynamics, and guarded scenarios.

A world state holds, per object (vehicle, sign, or light), a graph
position, a remaining itinerary segment, and scalar attributes (speed,
waiting time, lane, weight, light color).  ``step`` advances all
vehicles by one time quantum; ``run_scenario`` drives a run from
guarded command rules whose guards are scene formulas evaluated by the
model checker.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from . import predicates as P
from .checker import check_m2cl
from .graph import AtVertex, MetricGraph, OnEdge, Position, normalize_position
from .logic import ast as A
from .sat import free_vars
from .segments import Segment, seg_from_json, seg_length, seg_to_json, split, segments_equal
from .slarith import UnsupportedFragment

__all__ = [
    "VEHICLE", "SIGN", "LIGHT", "GREEN", "RED",
    "ObjState", "WorldState", "Run",
    "MoveAt", "MoveTo", "SetLane", "Rule", "LightSchedule", "Scenario",
    "advance_position", "step", "run_scenario",
    "pos_to_json", "pos_from_json", "state_to_json", "state_from_json",
    "load_state", "save_run", "load_run", "scenario_from_json",
    "load_scenario",
]

VEHICLE = 0.0
SIGN = 1.0
LIGHT = 2.0
GREEN = 1.0
RED = 0.0

_KIND_NAMES = {"vehicle": VEHICLE, "sign": SIGN, "light": LIGHT}
_KIND_LABELS = {v: k for k, v in _KIND_NAMES.items()}

EXHAUST_TOL = 1e-9
DEFAULT_ACCEL_MAX = 6.0


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class ObjState:
    """One object of the world.  ``kind`` is numeric so formulas can
    guard on it (vehicle 0, sign 1, light 2); ``cl`` is the light color
    (green 1, red 0); ``it`` is the remaining itinerary or None once
    exhausted."""

    uid: float
    kind: float = VEHICLE
    pos: Optional[Position] = None
    it: Optional[Segment] = None
    sp: float = 0.0
    wt: float = 0.0
    ln: float = 1.0
    weight: float = 1500.0
    cl: float = GREEN
    parked: bool = False


@dataclass(frozen=True)
class WorldState:
    objects: dict
    t: float = 0.0

    def with_obj(self, oid, **changes) -> "WorldState":
        objs = dict(self.objects)
        objs[oid] = replace(objs[oid], **changes)
        return replace(self, objects=objs)


@dataclass
class Run:
    g: MetricGraph
    states: list
    events: list = field(default_factory=list)

    def __post_init__(self):
        ts = [s.t for s in self.states]
        if any(b - a <= 0 for a, b in zip(ts, ts[1:])):
            raise ValueError("timestamps must be strictly increasing")
        ids = {frozenset(s.objects) for s in self.states}
        if len(ids) > 1:
            raise ValueError("object id set must be constant along the run")


# ---------------------------------------------------------------------------
# kinematics


def advance_position(g: MetricGraph, pos: Position, it: Segment,
                     delta: float) -> Position:
    """The position reached by following the itinerary ``it`` from
    ``pos`` for distance ``delta``.

    At a vertex the next edge is the out-edge whose segment agrees with
    the itinerary's current prefix; ties break on the smallest edge id
    (interval maps cannot distinguish equal-length alternatives).
    """
    total = seg_length(it)
    if delta > total + EXHAUST_TOL:
        raise ValueError(f"cannot advance {delta} along an itinerary of "
                         f"length {total}")
    cur = normalize_position(g, pos)
    remaining = min(delta, total)
    for _ in range(len(g.edges) * 2 + 2):
        if remaining <= EXHAUST_TOL:
            return cur
        if isinstance(cur, OnEdge):
            e = g.edge(cur.edge)
            room = e.length - cur.offset
            if remaining < room - EXHAUST_TOL:
                return OnEdge(cur.edge, cur.offset + remaining)
            cur = AtVertex(e.dst)
            remaining -= room
            remaining = max(remaining, 0.0)
            continue
        walked = min(delta, total) - remaining
        it_here = split(it, walked, total)
        cands = []
        for e in sorted(g.out_edges(cur.vertex), key=lambda e: str(e.eid)):
            probe = min(e.length, seg_length(it_here))
            if probe <= EXHAUST_TOL:
                continue
            if segments_equal(split(e.seg, 0.0, probe),
                              split(it_here, 0.0, probe)):
                cands.append(e)
        if not cands:
            raise ValueError(
                f"itinerary does not follow the map at vertex {cur.vertex!r}")
        cur = OnEdge(cands[0].eid, 0.0)
    raise ValueError("itinerary advance did not terminate")


def step(g: MetricGraph, state: WorldState, dt: float,
         controls: Optional[dict] = None,
         lane_sets: Optional[dict] = None) -> WorldState:
    """One time quantum: every vehicle accelerates by its control and
    travels old-speed x dt along its itinerary.

    Waiting time accumulates while the vehicle stays stopped and resets
    when it starts moving; a vehicle whose itinerary runs out parks at
    its end.  ``lane_sets`` applies instantaneous lane changes.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    controls = controls or {}
    lane_sets = lane_sets or {}
    objs = {}
    for oid, ob in state.objects.items():
        if ob.kind != VEHICLE:
            objs[oid] = ob
            continue
        ctrl = float(controls.get(oid, 0.0))
        sp2 = max(0.0, ob.sp + ctrl * dt)
        dist = ob.sp * dt
        pos, it, parked = ob.pos, ob.it, ob.parked
        if it is None or parked:
            sp2 = 0.0
        elif dist > seg_length(it) - EXHAUST_TOL:
            pos = advance_position(g, pos, it, seg_length(it))
            it, parked, sp2 = None, True, 0.0
        elif dist > 0.0:
            pos = advance_position(g, pos, it, dist)
            it = split(it, dist, seg_length(it))
        if sp2 > 0.0:
            wt = 0.0
        elif ob.sp == 0.0:
            wt = ob.wt + dt
        else:
            wt = ob.wt
        ln = float(lane_sets.get(oid, ob.ln))
        objs[oid] = replace(ob, pos=pos, it=it, sp=sp2, wt=wt, ln=ln,
                            parked=parked)
    return WorldState(objs, state.t + dt)


# ---------------------------------------------------------------------------
# scenario actions


@dataclass(frozen=True)
class MoveAt:
    """Reach a speed in ``cnt`` exactly ``d`` meters ahead, with constant
    acceleration.  ``d`` may name a real variable bound by the guard."""

    cnt: tuple
    d: Union[float, str]


@dataclass(frozen=True)
class MoveTo:
    """Travel to position ``p`` holding the speed within ``cnt``."""

    cnt: tuple
    p: Position


@dataclass(frozen=True)
class SetLane:
    """Instantaneous lane change."""

    ln: float


Action = Union[MoveAt, MoveTo, SetLane]


@dataclass(frozen=True)
class Rule:
    """Guarded command: when the guard scene starts to hold for some
    binding of its free variables, each listed vehicle gets its action.
    Vehicle references name guard variables (resolved to object ids) or
    object ids directly."""

    name: str
    guard: A.Formula
    commands: tuple


@dataclass(frozen=True)
class LightSchedule:
    light: object
    green: float
    red: float
    offset: float = 0.0

    def color(self, t: float) -> float:
        period = self.green + self.red
        if period <= 0:
            return GREEN
        phase = (t + self.offset) % period
        return GREEN if phase < self.green else RED


@dataclass(frozen=True)
class Scenario:
    rules: tuple = ()
    schedules: tuple = ()


# --- guard witness enumeration ---------------------------------------------


def _meets_anchors(f, var: str):
    """Meets/dist atoms whose distance slot is exactly the variable."""
    out = []

    def walk(t):
        if isinstance(t, A.Meets) and isinstance(t.dist, A.RVar) \
                and t.dist.name == var:
            out.append(("meets", t.obj, t.other))
        if isinstance(t, A.DistEq) and isinstance(t.num, A.RVar) \
                and t.num.name == var:
            out.append(("dist", t.frm, t.to))
        if dataclasses.is_dataclass(t) and not isinstance(t, str):
            for fld in dataclasses.fields(t):
                v = getattr(t, fld.name)
                if dataclasses.is_dataclass(v):
                    walk(v)
                elif isinstance(v, tuple):
                    for x in v:
                        if dataclasses.is_dataclass(x):
                            walk(x)

    walk(f)
    return out


def _real_candidates(g, state, f, var, binding):
    """Candidate values for a guard real variable: the distances of
    itinerary-prefix rides between the objects its meets atoms relate.
    Off these candidates every meets atom is false, so the candidates
    cover the satisfying values exactly."""
    anchors = [(a, b) for kind, a, b in _meets_anchors(f, var)
               if kind == "meets"]
    if not anchors:
        raise UnsupportedFragment(
            f"guard variable {var!r} has no meets atom to bind it")
    vals = []
    for a, b in anchors:
        ca = state.objects.get(binding.get(a))
        cb = state.objects.get(binding.get(b))
        if ca is None or cb is None or ca.it is None:
            continue
        if ca.pos is None or cb.pos is None:
            continue
        vals.extend(P.meets_distances(g, ca.pos, ca.it, cb.pos))
    uniq = []
    for v in sorted(vals):
        if not any(abs(v - u) <= P.PREFIX_TOL for u in uniq):
            uniq.append(v)
    return uniq


def guard_assignments(g: MetricGraph, state: WorldState, guard: A.Formula):
    """All bindings of the guard's free object/real variables that make
    it hold.  Real variables must be anchored by a meets atom."""
    fv = free_vars(guard)
    obj_vars = sorted(n for n, s in fv.items() if s == "obj")
    real_vars = sorted(n for n, s in fv.items() if s == "real")
    other = sorted(n for n, s in fv.items()
                   if s not in ("obj", "real", "vertex"))
    if other:
        raise UnsupportedFragment(
            f"guard has free variables of unsupported sorts: {other}")
    oids = sorted(state.objects)
    out = []

    def assign_reals(binding, todo):
        if not todo:
            if check_m2cl(binding, g, state, guard):
                out.append(dict(binding))
            return
        var, rest = todo[0], todo[1:]
        cands = _real_candidates(g, state, guard, var, binding)
        for v in cands:
            binding[var] = v
            assign_reals(binding, rest)
        binding.pop(var, None)

    def assign_objs(binding, todo):
        if not todo:
            assign_reals(binding, real_vars)
            return
        var, rest = todo[0], todo[1:]
        for oid in oids:
            binding[var] = oid
            assign_objs(binding, rest)
        binding.pop(var, None)

    assign_objs({}, obj_vars)
    return out


# --- goal tracking ----------------------------------------------------------


class _AtGoal:
    """Constant-acceleration plan: land exactly ``d`` ahead after N
    whole steps, then clamp the speed to the target."""

    def __init__(self, sp0: float, vt: float, d: float, dt: float):
        self.vt = vt
        if sp0 == 0.0 and vt == 0.0:
            self.steps = 0          # already standing; nothing to do
            self.accel = 0.0
            self.err = 0.0
        elif d <= max(sp0 * dt, EXHAUST_TOL):
            self.steps = 1
            self.accel = (vt - sp0) / dt
            self.err = abs(d - sp0 * dt)
        else:
            # solve N*dt*sp0 + a*dt^2*N(N-1)/2 = d with a=(vt-sp0)/(N dt)
            if abs(vt - sp0) <= 1e-12:
                n_star = d / max(sp0 * dt, 1e-12)
            else:
                # N*sp0*dt + (vt-sp0)*dt*(N-1)/2 = d
                n_star = (d / dt + (vt - sp0) / 2) / (sp0 + (vt - sp0) / 2) \
                    if abs(sp0 + (vt - sp0) / 2) > 1e-12 else 1.0
            self.steps = max(2, round(n_star))
            n = self.steps
            self.accel = 2.0 * (d - n * dt * sp0) / (dt * dt * n * (n - 1))
            self.err = 0.0

    def control(self, ob: ObjState, dt: float):
        if self.steps > 0:
            self.steps -= 1
            return self.accel, False
        return (self.vt - ob.sp) / dt, True


class _ToGoal:
    """Hold the speed inside ``cnt`` until the target distance is
    consumed."""

    def __init__(self, lo: float, hi: float, remaining: float,
                 accel_max: float):
        self.lo, self.hi = lo, hi
        self.remaining = remaining
        self.accel_max = accel_max

    def control(self, ob: ObjState, dt: float):
        done = self.remaining <= EXHAUST_TOL
        self.remaining = max(0.0, self.remaining - ob.sp * dt)
        if ob.sp < self.lo:
            return min(self.accel_max, (self.lo - ob.sp) / dt), done
        if ob.sp > self.hi:
            return max(-self.accel_max, (self.hi - ob.sp) / dt), done
        return 0.0, done


# --- the engine -------------------------------------------------------------


def _apply_schedules(state: WorldState, schedules) -> WorldState:
    for sch in schedules:
        if sch.light in state.objects:
            want = sch.color(state.t)
            if state.objects[sch.light].cl != want:
                state = state.with_obj(sch.light, cl=want)
    return state


def _resolve_vehicle(ref, binding, state):
    oid = binding.get(ref, ref)
    if oid not in state.objects:
        return None
    if state.objects[oid].kind != VEHICLE:
        return None
    return oid


def _plan(g, state, oid, action, binding, dt, accel_max, events, t):
    ob = state.objects[oid]
    if isinstance(action, SetLane):
        return ("lane", float(action.ln))
    if isinstance(action, MoveAt):
        d = binding.get(action.d, action.d) if isinstance(action.d, str) \
            else action.d
        if not isinstance(d, (int, float)):
            events.append({"t": t, "event": "violation", "vehicle": oid,
                           "reason": f"unbound distance {action.d!r}"})
            return ("goal", _Braker(accel_max))
        lo, hi = action.cnt
        vt = min(max(ob.sp, lo), hi)
        goal = _AtGoal(ob.sp, vt, float(d), dt)
        if abs(goal.accel) > accel_max + 1e-9:
            events.append({"t": t, "event": "violation", "vehicle": oid,
                           "reason": f"required acceleration {goal.accel:.2f} "
                                     f"exceeds bound {accel_max}"})
            return ("goal", _Braker(accel_max))
        return ("goal", goal)
    if isinstance(action, MoveTo):
        lo, hi = action.cnt
        if ob.it is None or ob.pos is None:
            events.append({"t": t, "event": "violation", "vehicle": oid,
                           "reason": "no itinerary to follow"})
            return ("goal", _Braker(accel_max))
        dists = P.meets_distances(g, ob.pos, ob.it, action.p)
        if not dists:
            events.append({"t": t, "event": "violation", "vehicle": oid,
                           "reason": f"target position {action.p!r} is not "
                                     "on the itinerary"})
            return ("goal", _Braker(accel_max))
        return ("goal", _ToGoal(lo, hi, min(dists), accel_max))
    raise TypeError(f"unknown action {action!r}")


class _Braker:
    """Maximal braking until standstill (the infeasible-command fallback)."""

    def __init__(self, accel_max):
        self.accel_max = accel_max

    def control(self, ob: ObjState, dt: float):
        if ob.sp <= 0:
            return 0.0, True
        return max(-self.accel_max, -ob.sp / dt), False


def run_scenario(g: MetricGraph, initial: WorldState, scenario: Scenario,
                 dt: float, horizon: float,
                 accel_max: float = DEFAULT_ACCEL_MAX) -> Run:
    """Drive a run: each cycle updates light colors, fires rules whose
    guards newly hold (first-listed rule wins per vehicle), pursues the
    active goals, and steps the dynamics."""
    state = _apply_schedules(initial, scenario.schedules)
    states = [state]
    events: list = []
    goals: dict = {}
    latched: set = set()
    n_steps = max(1, round(horizon / dt))
    for _ in range(n_steps):
        state = states[-1]
        now_active = set()
        commanded = set()
        lane_sets = {}
        for ridx, rule in enumerate(scenario.rules):
            try:
                assignments = guard_assignments(g, state, rule.guard)
            except UnsupportedFragment:
                raise
            for binding in assignments:
                key = (ridx, tuple(sorted(
                    (k, v) for k, v in binding.items()
                    if not isinstance(v, (int, float)))))
                now_active.add(key)
                if key in latched:
                    continue
                for ref, action in rule.commands:
                    oid = _resolve_vehicle(ref, binding, state)
                    if oid is None or oid in commanded:
                        continue
                    kind, payload = _plan(g, state, oid, action, binding,
                                          dt, accel_max, events, state.t)
                    if kind == "lane":
                        lane_sets[oid] = payload
                    else:
                        goals[oid] = payload
                    commanded.add(oid)
                events.append({"t": state.t, "event": "fired",
                               "rule": rule.name,
                               "binding": {k: v for k, v in binding.items()}})
        latched = now_active
        controls = {}
        for oid, goal in list(goals.items()):
            ob = state.objects.get(oid)
            if ob is None or ob.parked:
                del goals[oid]
                continue
            ctrl, done = goal.control(ob, dt)
            controls[oid] = ctrl
            if done:
                del goals[oid]
        nxt = step(g, state, dt, controls, lane_sets)
        nxt = _apply_schedules(nxt, scenario.schedules)
        states.append(nxt)
    return Run(g, states, events)


# ---------------------------------------------------------------------------
# serialization


def pos_to_json(p: Optional[Position]):
    if p is None:
        return None
    if isinstance(p, AtVertex):
        return {"vertex": p.vertex}
    return {"edge": list(p.edge), "offset": p.offset}


def pos_from_json(d) -> Optional[Position]:
    if d is None:
        return None
    if "vertex" in d:
        return AtVertex(str(d["vertex"]))
    src, dst, idx = d["edge"]
    return OnEdge((str(src), str(dst), int(idx)), float(d["offset"]))


def _obj_to_json(ob: ObjState) -> dict:
    return {
        "id": ob.uid,
        "kind": _KIND_LABELS.get(ob.kind, ob.kind),
        "pos": pos_to_json(ob.pos),
        "it": None if ob.it is None else seg_to_json(ob.it),
        "sp": ob.sp, "wt": ob.wt, "ln": ob.ln,
        "weight": ob.weight, "cl": ob.cl, "parked": ob.parked,
    }


def _obj_from_json(d: dict, uid_default: float) -> ObjState:
    kind = d.get("kind", "vehicle")
    if isinstance(kind, str):
        kind = _KIND_NAMES[kind]
    return ObjState(
        uid=float(d.get("id", uid_default)),
        kind=float(kind),
        pos=pos_from_json(d.get("pos")),
        it=None if d.get("it") is None else seg_from_json(d["it"]),
        sp=float(d.get("sp", 0.0)),
        wt=float(d.get("wt", 0.0)),
        ln=float(d.get("ln", 1.0)),
        weight=float(d.get("weight", 1500.0)),
        cl=float(d.get("cl", GREEN)),
        parked=bool(d.get("parked", False)),
    )


def state_to_json(state: WorldState) -> dict:
    return {"t": state.t,
            "objects": {str(k): _obj_to_json(v)
                        for k, v in sorted(state.objects.items())}}


def state_from_json(d: dict) -> WorldState:
    objs = {}
    for i, (oid, od) in enumerate(d.get("objects", {}).items()):
        objs[str(oid)] = _obj_from_json(od, float(i + 1))
    return WorldState(objs, float(d.get("t", 0.0)))


def load_state(path: str) -> WorldState:
    with open(path) as fh:
        return state_from_json(json.load(fh))


def save_run(run: Run, path: str) -> None:
    """Trace as JSON Lines, one state per line."""
    with open(path, "w") as fh:
        for s in run.states:
            fh.write(json.dumps(state_to_json(s)) + "\n")


def load_run(g: MetricGraph, path: str) -> Run:
    states = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                states.append(state_from_json(json.loads(line)))
    if not states:
        raise ValueError(f"empty trace {path!r}")
    return Run(g, states)


def _action_from_json(d: dict) -> Action:
    kind = d["type"]
    if kind == "move_at":
        dd = d["d"]
        return MoveAt(tuple(float(x) for x in d["cnt"]),
                      dd if isinstance(dd, str) else float(dd))
    if kind == "move_to":
        return MoveTo(tuple(float(x) for x in d["cnt"]),
                      pos_from_json(d["p"]))
    if kind == "set_lane":
        return SetLane(float(d["ln"]))
    raise ValueError(f"unknown action type {kind!r}")


def scenario_from_json(d: dict) -> Scenario:
    from .logic import parse_formula
    rules = []
    for rd in d.get("rules", []):
        guard = parse_formula(rd["guard"], scope=rd.get("scope"))
        commands = tuple((cd["vehicle"], _action_from_json(cd["action"]))
                         for cd in rd.get("commands", []))
        rules.append(Rule(rd.get("name", f"rule{len(rules) + 1}"),
                          guard, commands))
    schedules = tuple(
        LightSchedule(sd["light"], float(sd["green"]), float(sd["red"]),
                      float(sd.get("offset", 0.0)))
        for sd in d.get("schedules", []))
    return Scenario(tuple(rules), schedules)


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        return scenario_from_json(json.load(fh))

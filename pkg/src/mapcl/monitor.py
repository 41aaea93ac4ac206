"""Finite-trace monitoring of temporal formulas over simulation runs.

The monitor evaluates a temporal formula against a recorded :class:`Run`
(a strictly increasing sequence of world states).  State formulas are
delegated to the model checker; temporal operators follow the usual
recursive semantics over suffixes, adapted to finite traces:

* ``N phi`` on the last state has no successor.  Under the default
  *strong* semantics it is False; under the *three-valued* semantics it
  is Unknown, and unknowns propagate by Kleene logic.
* ``phi U psi`` requires a witness index inside the trace in both modes;
  the trace is treated as complete, so running past the end is a
  definitive failure, not an unknown.
* ``exists obj c. phi`` ranges over the run's (constant) object set.

Unknown therefore arises only from ``N`` truncation.  A consequence
worth knowing: ``!N phi`` on the last state is True under strong
semantics but Unknown under three-valued semantics, so the refinement
"strong True implies three-valued True" holds for negation-free
temporal structure only.

The module also provides scene checking (a scene is a map part, an
addressing part and a dynamic part, all existential) and a built-in
library of twelve traffic rules.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Optional

from .logic import ast as A
from .logic.ast import always, eventually, t_implies
from .checker import check_m2cl, UnsupportedFragment
from .graph import MetricGraph
from .maps import Junction, decompose_map, Road
from .predicates import (
    B_MAX, T_REACT,
    right_of, opposite, meets, inside, go_straight, turn_right, turn_left,
    safe_dist, centrifugal_ok,
)
from .sat import free_vars
from .world import Run, WorldState, VEHICLE, SIGN, LIGHT, GREEN

__all__ = [
    "TRUE", "FALSE", "UNKNOWN", "Verdict", "RuleSpec", "Scene",
    "monitor", "monitor_rule", "check_scene", "rule_library",
    "verdict_to_json",
    # re-exported derived predicates
    "right_of", "opposite", "meets", "inside", "go_straight",
    "turn_right", "turn_left", "safe_dist", "centrifugal_ok",
]

TRUE = "true"
FALSE = "false"
UNKNOWN = "unknown"

D_MIN = 30.0    # proximity that triggers sign / light rules (m)
D_LEFT = 50.0   # yielding distance inside a roundabout (m)
C_BOUND = 5000.0  # default centrifugal-force bound (N)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a monitor or scene check.

    ``witness`` binds quantified variables that substantiate the
    verdict (satisfying bindings for True, violating bindings for
    False); ``t_violation`` is the timestamp of the first violating
    state when the formula has always-shape.
    """

    value: str
    witness: dict = field(default_factory=dict)
    t_violation: Optional[float] = None
    notes: str = ""

    def __bool__(self) -> bool:
        return self.value == TRUE


@dataclass(frozen=True)
class RuleSpec:
    """A named, fully instantiated temporal rule ready for monitoring."""

    name: str
    formula: object
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Scene:
    """A scene: map part, addressing part and dynamic part, sharing
    free object variables, all existential."""

    psi_map: object
    psi_add: object
    psi_dyn: object


# ---------------------------------------------------------------------------
# Kleene three-valued connectives (values True / False / None)

def _k_not(v):
    return None if v is None else (not v)


def _k_and(a, b):
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def _k_or(a, b):
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


# ---------------------------------------------------------------------------
# temporal evaluation over run suffixes

class _MonitorCtx:
    def __init__(self, g: MetricGraph, run: Run, trunc, cfg: dict):
        self.g = g
        self.states = run.states
        self.trunc = trunc          # value of N past the end of the trace
        self.cfg = cfg
        self.oids = sorted(run.states[0].objects)
        self.memo: dict = {}


def _envkey(env: dict) -> tuple:
    return tuple(sorted(env.items(), key=lambda kv: kv[0]))


def _ev_t(mc: _MonitorCtx, f, i: int, env: dict):
    key = (id(f), i, _envkey(env))
    hit = mc.memo.get(key, key)
    if hit is not key:
        return hit
    if isinstance(f, A.TState):
        out = bool(check_m2cl(env, mc.g, mc.states[i], f.formula, **mc.cfg))
    elif isinstance(f, A.TNot):
        out = _k_not(_ev_t(mc, f.body, i, env))
    elif isinstance(f, A.TAnd):
        left = _ev_t(mc, f.left, i, env)
        out = False if left is False else _k_and(left, _ev_t(mc, f.right, i, env))
    elif isinstance(f, A.TNext):
        out = _ev_t(mc, f.body, i + 1, env) if i + 1 < len(mc.states) else mc.trunc
    elif isinstance(f, A.TUntil):
        out = _until(mc, f, i, env)
    elif isinstance(f, A.TExists):
        out = False
        for oid in mc.oids:
            out = _k_or(out, _ev_t(mc, f.body, i, {**env, f.var: oid}))
            if out is True:
                break
    else:
        raise TypeError(f"not a temporal formula: {f!r}")
    mc.memo[key] = out
    return out


def _until(mc: _MonitorCtx, f: A.TUntil, i: int, env: dict):
    """Backward evaluation of U over the suffix starting at i.  The
    trace is complete: the continuation beyond the last state is a
    definitive False, so U demands a witness index inside the trace."""
    ek = _envkey(env)
    n = len(mc.states)
    j = i
    while j < n and (id(f), j, ek) not in mc.memo:
        j += 1
    acc = mc.memo[(id(f), j, ek)] if j < n else False
    for k in range(j - 1, i - 1, -1):
        r = _ev_t(mc, f.right, k, env)
        if r is True:
            acc = True
        else:
            acc = _k_or(r, _k_and(_ev_t(mc, f.left, k, env), acc))
        mc.memo[(id(f), k, ek)] = acc
    return acc


# ---------------------------------------------------------------------------
# shape analysis for diagnostics

def _peel_forall(phi):
    """Split ``!exists v1..vk. !core`` into ([v1..vk], core); other
    shapes come back as ([], phi)."""
    if isinstance(phi, A.TNot) and isinstance(phi.body, A.TExists):
        names = []
        node = phi.body
        while isinstance(node, A.TExists):
            names.append(node.var)
            node = node.body
        if isinstance(node, A.TNot):
            return names, node.body
    return [], phi


def _always_body(phi):
    """Body of an always-shaped formula ``![true U !body]``, else None."""
    if (isinstance(phi, A.TNot) and isinstance(phi.body, A.TUntil)
            and isinstance(phi.body.left, A.TState)
            and isinstance(phi.body.left.formula, A.BoolConst)
            and phi.body.left.formula.value
            and isinstance(phi.body.right, A.TNot)):
        return phi.body.right.body
    return None


def _find_witness(mc: _MonitorCtx, f, i: int, env: dict):
    """Bindings for a leading TExists chain making f true at index i,
    or None when f is false there."""
    if isinstance(f, A.TExists):
        for oid in mc.oids:
            sub = _find_witness(mc, f.body, i, {**env, f.var: oid})
            if sub is not None:
                return {f.var: oid, **sub}
        return None
    return {} if _ev_t(mc, f, i, env) is True else None


# ---------------------------------------------------------------------------
# public monitoring entry points

def monitor(g: MetricGraph, run: Run, phi, env: Optional[dict] = None,
            three_valued: bool = False, **cfg) -> Verdict:
    """Evaluate a temporal formula over a run.

    Returns a Verdict whose witness binds the outermost quantified
    object variables: the satisfying bindings when the formula is an
    existential chain that holds, or the violating bindings (plus the
    first violating timestamp) when a universally quantified always-
    shaped formula fails.
    """
    if not run.states:
        raise ValueError("run must contain at least one state")
    env = dict(env or {})
    mc = _MonitorCtx(g, run, None if three_valued else False, cfg)
    v = _ev_t(mc, phi, 0, env)
    value = TRUE if v is True else (FALSE if v is False else UNKNOWN)
    witness: dict = {}
    t_violation = None
    notes = ""
    if v is True and isinstance(phi, A.TExists):
        found = _find_witness(mc, phi, 0, env)
        if found:
            witness = found
    elif v is False:
        names, core = _peel_forall(phi)
        binding = env
        if names:
            for combo in itertools.product(mc.oids, repeat=len(names)):
                trial = {**env, **dict(zip(names, combo))}
                if _ev_t(mc, core, 0, trial) is False:
                    binding = trial
                    witness = dict(zip(names, combo))
                    break
        body = _always_body(core)
        if body is not None:
            for i in range(len(mc.states)):
                if _ev_t(mc, body, i, binding) is False:
                    t_violation = mc.states[i].t
                    if isinstance(body, A.TNot):
                        extra = _find_witness(mc, body.body, i, binding)
                        if extra:
                            witness = {**witness, **extra}
                    break
    elif v is None:
        notes = "verdict truncated by end of trace"
    return Verdict(value, witness, t_violation, notes)


def monitor_rule(g: MetricGraph, run: Run, rule: RuleSpec,
                 three_valued: bool = False, env: Optional[dict] = None,
                 **cfg) -> Verdict:
    """Monitor a library rule; the rule's braking constants are applied
    unless explicitly overridden."""
    merged = dict(cfg)
    for k in ("b_max", "t_react"):
        if k in rule.params:
            merged.setdefault(k, rule.params[k])
    return monitor(g, run, rule.formula, env=env,
                   three_valued=three_valued, **merged)


def verdict_to_json(rule: str, verdict: Verdict) -> dict:
    witness = {k: (v.name if isinstance(v, Road) else v)
               for k, v in verdict.witness.items()}
    out = {"rule": rule, "verdict": verdict.value, "witness": witness,
           "t_violation": verdict.t_violation}
    if verdict.notes:
        out["notes"] = verdict.notes
    return out


# ---------------------------------------------------------------------------
# scene checking

_ENUMERATED_SORTS = ("obj", "road", "vertex")


def _close_rest(f, frees: dict, skip) -> object:
    out = f
    for name, sort in sorted(frees.items()):
        if name not in skip and sort not in _ENUMERATED_SORTS:
            out = A.Exists(name, sort, out)
    return out


def _domains(g: MetricGraph, state: WorldState, frees: dict) -> list:
    structure = decompose_map(g)
    doms = []
    for name, sort in sorted(frees.items()):
        if sort == "obj":
            doms.append((name, sorted(state.objects)))
        elif sort == "road":
            doms.append((name, list(structure.roads)))
        elif sort == "vertex":
            doms.append((name, list(g.vertices)))
    return doms


def check_scene(g: MetricGraph, state: WorldState, scene: Scene,
                top_down: bool = False, env: Optional[dict] = None,
                **cfg) -> Verdict:
    """Check a scene against a single world state.

    The bottom-up reading is the conjunction of the three parts; the
    top-down reading asserts that whenever the map part covers the
    whole graph, the addressing and dynamic parts follow.  Free
    object, road and vertex variables are enumerated to produce a
    witness; remaining free variables are closed existentially.
    """
    env = dict(env or {})
    if top_down:
        phi = A.Implies(A.Closure(scene.psi_map),
                        A.And(scene.psi_add, scene.psi_dyn))
    else:
        phi = A.And(scene.psi_map, A.And(scene.psi_add, scene.psi_dyn))
    frees = {k: s for k, s in free_vars(phi).items() if k not in env}
    doms = _domains(g, state, frees)
    closed = _close_rest(phi, frees, {n for n, _ in doms})
    for combo in itertools.product(*[vals for _, vals in doms]):
        trial = {**env, **{n: v for (n, _), v in zip(doms, combo)}}
        if check_m2cl(trial, g, state, closed, **cfg):
            witness = {n: (v.name if isinstance(v, Road) else v)
                       for (n, _), v in zip(doms, combo)}
            return Verdict(TRUE, witness)
    failing = []
    for label, part in (("psi_map", scene.psi_map),
                        ("psi_add", scene.psi_add),
                        ("psi_dyn", scene.psi_dyn)):
        pf = {k: s for k, s in free_vars(part).items() if k not in env}
        pd = _domains(g, state, pf)
        pc = _close_rest(part, pf, {n for n, _ in pd})
        if not any(check_m2cl({**env, **{n: v for (n, _), v in zip(pd, c)}},
                              g, state, pc, **cfg)
                   for c in itertools.product(*[vals for _, vals in pd])):
            failing.append(label)
    notes = ("failing parts: " + ", ".join(failing)) if failing \
        else "parts hold separately but share no joint witness"
    return Verdict(FALSE, {}, None, notes)


# ---------------------------------------------------------------------------
# rule library

def _eqn(a, b):
    return A.And(A.Leq(a, b), A.Leq(b, a))


def _kind_is(c: str, kind: float):
    return _eqn(A.AttrNum(c, "kind"), A.Const(kind))


def _veh(c):
    return _kind_is(c, VEHICLE)


def _sign(c):
    return _kind_is(c, SIGN)


def _light(c):
    return _kind_is(c, LIGHT)


def _distinct(a, b):
    return A.Not(A.ObjEq(a, b))


def _forall_objs(names, body):
    ex = A.TNot(body)
    for name in reversed(names):
        ex = A.TExists(name, ex)
    return A.TNot(ex)


def _always_state(f):
    return always(A.TState(f))


def _in_junction(c: str, J: frozenset, EN: frozenset):
    """Strictly past the entrance line: in the junction's vertex set but
    not standing at an entrance."""
    return A.And(A.Inside(c, J), A.Not(A.Inside(c, EN)))


def _no_other_vehicle_inside(c: str, J: frozenset, EN: frozenset,
                             other: str = "cx"):
    return A.Not(A.Exists(other, "obj", A.conj(
        _veh(other), _distinct(other, c), _in_junction(other, J, EN))))


def _approach(c: str, o: str, limit: float, var: str = "d"):
    """Some ride of length at most ``limit`` from c to o."""
    return A.Exists(var, "real", A.And(
        A.Meets(c, A.RVar(var), o), A.Leq(A.RVar(var), A.Const(limit))))


def _entrance_pairs(junction: Junction):
    ens = junction.entrances
    return [(a, b) for a in ens for b in ens if a != b]


def rule_library(junction: Optional[Junction] = None,
                 d_min: float = D_MIN, d_left: float = D_LEFT,
                 c_bound: float = C_BOUND,
                 b_max: float = B_MAX, t_react: float = T_REACT) -> list:
    """The twelve built-in traffic rules, fully instantiated.

    Junction-relative rules (entering on a stop sign, right of way,
    crossing order, roundabout yielding, traffic lights at entrances)
    take their entrance and junction vertex sets from ``junction``;
    without one those sets are empty and the rules are vacuous.
    """
    EN = frozenset(junction.entrances) if junction else frozenset()
    J = junction.vertices if junction else frozenset()
    pairs = _entrance_pairs(junction) if junction else []
    consts = {"d_min": d_min, "d_left": d_left, "c_bound": c_bound,
              "b_max": b_max, "t_react": t_react}
    if junction:
        consts["junction"] = junction.name
    rules = []

    def add(name, names, body):
        rules.append(RuleSpec(name, _forall_objs(names, body), dict(consts)))

    # (1) keep a safe distance to the vehicle ahead on the same lane
    add("safe-distance", ["c1", "c2"], _always_state(A.Not(
        A.Exists("d", "real", A.conj(
            A.Meets("c1", A.RVar("d"), "c2"),
            _veh("c1"), _veh("c2"), _distinct("c1", "c2"),
            _eqn(A.AttrNum("c1", "ln"), A.AttrNum("c2", "ln")),
            A.Not(A.Leq(A.SafeDist("c1", "c2"), A.RVar("d"))))))))

    # (2) keep a safe braking distance when approaching a stop sign
    add("sign-safe-distance", ["c", "st"], _always_state(A.Not(
        A.Exists("d", "real", A.conj(
            A.Meets("c", A.RVar("d"), "st"), _veh("c"), _sign("st"),
            A.Not(A.Leq(A.SafeDist("c", "st"), A.RVar("d"))))))))

    # (3) centrifugal force stays below the bound on curved stretches
    add("centrifugal", ["c"], _always_state(A.Implies(
        _veh("c"), A.CentrifugalOk("c", A.Const(c_bound)))))

    # (4) at a stop sign with an empty junction, the driver proceeds
    add("sign-proceed", ["c", "st"], always(t_implies(
        A.TState(A.conj(
            A.Inside("st", EN), _sign("st"), _veh("c"), A.Inside("c", EN),
            _no_other_vehicle_inside("c", J, EN))),
        eventually(A.TState(_in_junction("c", J, EN))))))

    # (5) near a stop sign, stay out of the junction until it clears
    add("sign-wait", ["c", "st"], always(t_implies(
        A.TState(A.conj(
            A.Inside("st", EN), _sign("st"), _veh("c"),
            _approach("c", "st", d_min))),
        A.TUntil(A.TState(A.Not(_in_junction("c", J, EN))),
                 A.TState(_no_other_vehicle_inside("c", J, EN))))))

    # (6) equal waits: the vehicle coming from the right goes first
    parts6 = [t_implies(
        A.TState(A.conj(
            A.Inside("c", frozenset({en})), A.Inside("c2", frozenset({en2})),
            _veh("c"), _veh("c2"), _distinct("c", "c2"),
            _eqn(A.AttrNum("c", "wt"), A.AttrNum("c2", "wt")),
            A.RightOf(en, en2, J))),
        A.TUntil(A.TState(A.Inside("c2", frozenset({en2}))),
                 A.TState(_in_junction("c", J, EN))))
        for en, en2 in pairs]
    body6 = parts6[0] if parts6 else A.TState(A.BoolConst(True))
    for p in parts6[1:]:
        body6 = A.TAnd(body6, p)
    add("right-of-way", ["c", "c2"], always(body6))

    # (7) facing vehicles both going straight cross together; a turning
    #     vehicle lets the straight-going one proceed
    def _opp_cond(extra):
        return A.disj(*[A.conj(
            A.Inside("c", frozenset({en})), A.Inside("c2", frozenset({en2})),
            A.OppositeA(en, en2, J), *extra(en, en2))
            for en, en2 in pairs])

    def _no_car_right(en, en2):
        return A.Not(A.Exists("c3", "obj", A.And(_veh("c3"), A.disj(*[
            A.conj(A.Inside("c3", frozenset({en3})),
                   A.Or(A.RightOf(en3, en, J), A.RightOf(en3, en2, J)))
            for en3 in (junction.entrances if junction else [])]))))

    part7a = t_implies(
        A.TState(A.conj(
            _veh("c"), _veh("c2"), _distinct("c", "c2"),
            _opp_cond(lambda en, en2: [
                A.Heading("c", J, "straight"), A.Heading("c2", J, "straight"),
                _eqn(A.AttrNum("c", "wt"), A.Const(0.0)),
                _eqn(A.AttrNum("c2", "wt"), A.Const(0.0)),
                _no_car_right(en, en2)]))),
        eventually(A.TState(A.And(_in_junction("c", J, EN),
                                  _in_junction("c2", J, EN)))))
    part7b = t_implies(
        A.TState(A.conj(
            _veh("c"), _veh("c2"), _distinct("c", "c2"),
            _opp_cond(lambda en, en2: [
                A.Heading("c", J, "straight"),
                A.Not(A.Heading("c2", J, "straight"))]))),
        eventually(A.TState(_in_junction("c", J, EN))))
    add("opposite-straight", ["c", "c2"], always(A.TAnd(part7a, part7b)))

    # (8) a right-turning vehicle proceeds before the facing left turner
    add("left-turn-yield", ["c", "c2"], always(t_implies(
        A.TState(A.conj(
            _veh("c"), _veh("c2"), _distinct("c", "c2"),
            _opp_cond(lambda en, en2: [
                A.Heading("c", J, "right"), A.Heading("c2", J, "left"),
                _eqn(A.AttrNum("c", "wt"), A.Const(0.0)),
                _eqn(A.AttrNum("c2", "wt"), A.Const(0.0))]))),
        eventually(A.TState(_in_junction("c", J, EN))))))

    # (9) yield to traffic already in the roundabout that is close on
    #     the left; (10) enter once nobody blocks
    blocked = A.Exists("c2", "obj", A.Exists("d", "real", A.conj(
        _veh("c2"), _distinct("c2", "c"), _in_junction("c2", J, EN),
        A.Meets("c2", A.RVar("d"), "c"), A.Leq(A.RVar("d"), A.Const(d_left)))))
    add("roundabout-yield", ["c"], always(t_implies(
        A.TState(A.And(_veh("c"), A.Inside("c", EN))),
        A.TUntil(A.TState(A.Inside("c", EN)), A.TState(A.Not(blocked))))))
    add("roundabout-enter", ["c"], always(t_implies(
        A.TState(A.conj(_veh("c"), A.Inside("c", EN), A.Not(blocked))),
        eventually(A.TState(_in_junction("c", J, EN))))))

    # (11) keep a safe braking distance when close to a traffic light
    add("light-safe-distance", ["c", "lt"], _always_state(A.Not(
        A.Exists("d", "real", A.conj(
            _veh("c"), _light("lt"), A.Meets("c", A.RVar("d"), "lt"),
            A.Leq(A.RVar("d"), A.Const(d_min)),
            A.Not(A.Leq(A.SafeDist("c", "lt"), A.RVar("d"))))))))

    # (12) enter the junction while the nearby entrance light is green
    add("green-light-enter", ["c", "lt"], always(t_implies(
        A.TState(A.conj(
            _veh("c"), _light("lt"), _approach("c", "lt", d_min),
            A.Inside("lt", EN), _eqn(A.AttrNum("lt", "cl"), A.Const(GREEN)))),
        eventually(A.TState(_in_junction("c", J, EN))))))

    return rules

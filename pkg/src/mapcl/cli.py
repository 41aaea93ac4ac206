"""Command-line interface.

Subcommands: ``check-map`` (geometric consistency and planar
addressing), ``model-check`` (state-formula verdicts against a map and
optional world state), ``sat`` (satisfiability over complete graph
specifications, with SMT-LIB export), ``simulate`` (scenario runs to
JSON Lines traces), ``monitor`` (temporal rules over traces) and
``gen`` (map patterns plus matching specification formulas).

Exit codes: 0 true/ok/sat, 1 false/unsat, 2 map violation,
3 unsupported fragment or undecided, 4 usage or input errors.
Errors are reported as JSON objects on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import config as C
from .checker import UnsupportedFragment, check, check_m2cl
from .graph import CircuitViolation, check_geometric_consistency
from .logic.generators import (
    fork_spec, gen_bottom_up, merger_spec, ring_spec, roundabout_spec,
    to_top_down, to_weak_top_down,
)
from .logic.parser import ParseError, parse_formula, parse_temporal
from .logic.printer import pretty
from .maps import (
    annotate, build_fork, build_merger, build_ring, build_roundabout,
    decompose_map, four_way_intersection, load_map, save_map,
)
from .monitor import monitor, monitor_rule, rule_library, verdict_to_json
from .sat import CompleteSpec, mcl_sat, sat_sweep, translate_complete
from .segments import Interval
from .slarith import export_smtlib, lower
from .world import load_run, load_scenario, load_state, run_scenario, save_run

__all__ = ["main"]


def _out(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _err(kind: str, message: str) -> None:
    print(json.dumps({"error": {"kind": kind, "message": message}},
                     sort_keys=True), file=sys.stderr)


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_config(args) -> C.Config:
    lines = []
    for item in getattr(args, "set", []) or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        lines.append(f"{key} = {val}")
    overrides = C.parse_config_text("\n".join(lines))
    return C.load_config(getattr(args, "config", None), **overrides)


def _check_cfg(cfg: C.Config) -> dict:
    return {"b_max": cfg.b_max, "t_react": cfg.t_react,
            "coalesce_cap": cfg.coalesce_cap}


# ---------------------------------------------------------------------------
# subcommands

def cmd_check_map(args, cfg: C.Config) -> int:
    g = load_map(args.map)
    if g.kind == "interval":
        _out({"kind": "interval", "addressing": None,
              "vertices": len(g.vertices), "edges": len(g.edges)})
        return 0
    res = check_geometric_consistency(g, tol=cfg.point_tol)
    if isinstance(res, CircuitViolation):
        _out({"violation": {"circuit": [list(e) for e in res.circuit],
                            "residual": list(res.residual)}})
        return 2
    _out({"kind": g.kind,
          "addressing": {v: [x, y] for v, (x, y) in sorted(res.items())}})
    return 0


def cmd_model_check(args, cfg: C.Config) -> int:
    g = load_map(args.map)
    f = parse_formula(_read(args.formula))
    if args.state:
        state = load_state(args.state)
        verdict = check_m2cl({}, g, state, f, **_check_cfg(cfg))
    else:
        verdict = check({}, g, f, **_check_cfg(cfg))
    _out({"verdict": bool(verdict)})
    return 0 if verdict else 1


def cmd_sat(args, cfg: C.Config) -> int:
    f = parse_formula(_read(args.formula))
    spec = CompleteSpec.parse(_read(args.spec)) if args.spec else None
    if spec is None and not args.n_sweep:
        raise ValueError("sat needs --spec or --n-sweep")
    if args.n_sweep:
        n, res = sat_sweep(f, max_n=args.n_sweep, m=args.slots,
                           coalesce_cap=cfg.coalesce_cap,
                           max_atoms=cfg.fm_atom_cap)
        payload = {"mode": "sweep", "max_n": args.n_sweep, "n": n}
    else:
        res = mcl_sat(spec, f, coalesce_cap=cfg.coalesce_cap,
                      max_atoms=cfg.fm_atom_cap)
        payload = {"mode": "spec", "n": spec.n}
    if args.emit_smt:
        if spec is None:
            raise ValueError("--emit-smt needs --spec")
        resid = translate_complete(spec, f, coalesce_cap=cfg.coalesce_cap)
        with open(args.emit_smt, "w", encoding="utf-8") as fh:
            fh.write(export_smtlib(lower(resid, "iv")))
        payload["smt"] = args.emit_smt
    payload.update({
        "status": res.status,
        "witness": {k: str(v) for k, v in sorted((res.witness or {}).items())},
        "reason": res.reason or ""})
    _out(payload)
    return {"sat": 0, "unsat": 1}.get(res.status, 3)


def cmd_simulate(args, cfg: C.Config) -> int:
    g = load_map(args.map)
    initial = load_state(args.init)
    scenario = load_scenario(args.scenario)
    run = run_scenario(g, initial, scenario,
                       dt=args.dt if args.dt is not None else cfg.dt,
                       horizon=args.horizon, accel_max=cfg.accel_max)
    save_run(run, args.output)
    _out({"trace": args.output, "states": len(run.states),
          "events": run.events})
    return 0


def cmd_monitor(args, cfg: C.Config) -> int:
    g = load_map(args.map)
    run = load_run(g, args.trace)
    if args.rule:
        structure = decompose_map(g)
        junction = None
        if args.junction:
            junction = next((j for j in structure.junctions
                             if j.name == args.junction), None)
            if junction is None:
                raise ValueError(f"no junction named {args.junction!r}; "
                                 f"map has {[j.name for j in structure.junctions]}")
        elif structure.junctions:
            junction = structure.junctions[0]
        lib = rule_library(junction, d_min=cfg.d_min, d_left=cfg.d_left,
                           c_bound=cfg.c_bound, b_max=cfg.b_max,
                           t_react=cfg.t_react)
        rule = next((r for r in lib if r.name == args.rule), None)
        if rule is None:
            raise ValueError(f"unknown rule {args.rule!r}; available: "
                             f"{[r.name for r in lib]}")
        verdict = monitor_rule(g, run, rule, three_valued=args.three_valued,
                               coalesce_cap=cfg.coalesce_cap)
        _out(verdict_to_json(rule.name, verdict))
    else:
        f = parse_temporal(_read(args.formula))
        verdict = monitor(g, run, f, three_valued=args.three_valued,
                          **_check_cfg(cfg))
        _out(verdict_to_json("formula", verdict))
    return {"true": 0, "false": 1}.get(verdict.value, 3)


_GEN_DEFAULTS = {
    "ring": {"a": 10.0, "r": 2.0},
    "intersection": {"r": 1.0, "d": 0.5},
    "roundabout": {"n": 4, "radius": 6.0, "phi0": 0.0},
    "merger": {"n": 3, "len": 5.0},
    "fork": {"n": 3, "len": 5.0},
}


def _gen_params(pattern: str, text: Optional[str]) -> dict:
    params = dict(_GEN_DEFAULTS[pattern])
    for item in (text.split(",") if text else []):
        key, sep, val = item.partition("=")
        key = key.strip()
        if not sep or key not in params:
            raise ValueError(f"bad parameter {item!r}; {pattern} takes "
                             f"{sorted(params)}")
        params[key] = type(params[key])(val)
    return params


def cmd_gen(args, cfg: C.Config) -> int:
    p = _gen_params(args.pattern, args.params)
    if args.pattern == "ring":
        g, zeta = build_ring(p["a"], p["r"]), ring_spec(p["a"], p["r"])
    elif args.pattern == "intersection":
        g = four_way_intersection(p["r"], p["d"])
        zeta = gen_bottom_up(g)
    elif args.pattern == "roundabout":
        g = build_roundabout(p["n"], p["radius"], p["phi0"])
        zeta = roundabout_spec(p["n"], p["radius"])
    elif args.pattern == "merger":
        segs = [Interval(p["len"]) for _ in range(p["n"])]
        g, zeta = build_merger(segs), merger_spec(segs)
    else:
        segs = [Interval(p["len"]) for _ in range(p["n"])]
        g, zeta = build_fork(segs), fork_spec(segs)
    g = annotate(g)
    os.makedirs(args.output, exist_ok=True)
    files = {"map": os.path.join(args.output, "map.json")}
    save_map(g, files["map"])
    for name, formula in (("bottom_up", zeta),
                          ("top_down", to_top_down(zeta)),
                          ("top_down_weak", to_weak_top_down(zeta))):
        path = os.path.join(args.output, f"{name}.mcl")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(pretty(formula) + "\n")
        files[name] = path
    _out({"pattern": args.pattern, "params": p, "files": files,
          "vertices": len(g.vertices), "edges": len(g.edges)})
    return 0


# ---------------------------------------------------------------------------
# argument parsing

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mapcl",
        description="Metric-graph road maps: checking, satisfiability, "
                    "simulation and monitoring.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="config file (key = value lines); "
                        "also read from $MAPCL_CONFIG")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config entry")

    sp = sub.add_parser("check-map", help="geometric consistency + addressing")
    sp.add_argument("map")
    common(sp)
    sp.set_defaults(func=cmd_check_map)

    sp = sub.add_parser("model-check", help="check a closed state formula")
    sp.add_argument("map")
    sp.add_argument("formula", help="file with a closed formula")
    sp.add_argument("--state", help="world state JSON (enables object atoms)")
    common(sp)
    sp.set_defaults(func=cmd_model_check)

    sp = sub.add_parser("sat", help="satisfiability over complete graph specs")
    sp.add_argument("--spec", help="complete specification file")
    sp.add_argument("--formula", required=True)
    sp.add_argument("--emit-smt", metavar="OUT.smt2",
                    help="also export the lowered formula as SMT-LIB")
    sp.add_argument("--n-sweep", type=int, metavar="N",
                    help="try complete specs of size 1..N instead of --spec")
    sp.add_argument("--slots", type=int, default=1,
                    help="edges per ordered vertex pair in the sweep")
    common(sp)
    sp.set_defaults(func=cmd_sat)

    sp = sub.add_parser("simulate", help="run a guarded-command scenario")
    sp.add_argument("map")
    sp.add_argument("init", help="initial world state JSON")
    sp.add_argument("scenario", help="scenario JSON (rules + schedules)")
    sp.add_argument("--dt", type=float, help="time step (default from config)")
    sp.add_argument("--horizon", type=float, required=True)
    sp.add_argument("-o", "--output", default="trace.jsonl")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("monitor", help="monitor a rule or formula on a trace")
    sp.add_argument("map")
    sp.add_argument("trace", help="JSON Lines trace from simulate")
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--rule", help="built-in rule name")
    group.add_argument("--formula", help="file with a closed temporal formula")
    sp.add_argument("--junction", help="junction name for junction rules "
                    "(default: first junction of the map)")
    sp.add_argument("--three-valued", action="store_true",
                    help="report unknown instead of deciding truncations")
    common(sp)
    sp.set_defaults(func=cmd_monitor)

    sp = sub.add_parser("gen", help="generate a map pattern + specifications")
    sp.add_argument("--pattern", required=True, choices=sorted(_GEN_DEFAULTS))
    sp.add_argument("--params", help="comma-separated k=v pairs, e.g. "
                    "r=1,d=0.5")
    sp.add_argument("-o", "--output", default=".", help="output directory")
    common(sp)
    sp.set_defaults(func=cmd_gen)
    return ap


def main(argv: Optional[list] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        return args.func(args, cfg)
    except ParseError as e:
        _err("parse", str(e))
        return 4
    except UnsupportedFragment as e:
        _err("unsupported", str(e))
        return 3
    except FileNotFoundError as e:
        _err("io", str(e))
        return 4
    except (ValueError, KeyError, json.JSONDecodeError) as e:
        _err("input", str(e))
        return 4


if __name__ == "__main__":
    sys.exit(main())

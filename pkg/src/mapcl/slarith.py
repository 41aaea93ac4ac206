"""Linear real arithmetic over exact rationals, and the lowering of
segment-level residues into it.

The solver works on a small formula language (``LAtom``/``LAnd``/``LOr``/
``LNot``/``LExists``) whose atoms are linear constraints
``sum(c_i * v_i) + k  op  0`` with rational coefficients.  Satisfiability
uses Fourier-Motzkin elimination: quantifier alternation is removed by
full quantifier elimination (innermost first), the rest is decided per
DNF branch, and satisfying branches yield exact rational witnesses by
back-substitution.

``tr1``/``lower`` translate residue formulas (arithmetic + segment
equalities, the output of the graph-level translation) into this
language.  For interval segments a segment is its length, so segment
variables become nonnegative length variables.  For curve/region
segments only structural equalities against constructor chains are
supported: angles are compared modulo 2*pi within a small slack window,
everything else exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Union

from .segments import (
    Arc, Curve, Interval, Line, Region, Segment,
    concat, curve, seg_length, segments_equal,
)
from .logic import ast as A

TWO_PI = 2 * Fraction(math.pi)
ANGLE_SLACK = Fraction(1, 10 ** 9)
ANGLE_WINDOW = (0, 1, -1, 2, -2)  # multiples of 2*pi tried in angle equality
DEFAULT_MAX_ATOMS = 10 ** 6


class UnsupportedFragment(Exception):
    """The input lies outside the decidable fragment handled here."""


class ResourceLimit(Exception):
    """Formula expansion exceeded the configured budget."""


def fr(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


# ---------------------------------------------------------------------------
# formulas


@dataclass(frozen=True)
class LAtom:
    """sum(coeff * var) + const  op  0, op in {"<=", "<", "="}."""

    coeffs: tuple  # sorted ((var, Fraction), ...)
    const: Fraction
    op: str


@dataclass(frozen=True)
class LAnd:
    parts: tuple


@dataclass(frozen=True)
class LOr:
    parts: tuple


@dataclass(frozen=True)
class LNot:
    body: "LFormula"


@dataclass(frozen=True)
class LExists:
    var: str
    body: "LFormula"


LFormula = Union[LAtom, LAnd, LOr, LNot, LExists]

L_TRUE = LAnd(())
L_FALSE = LOr(())


def latom(coeffs: dict, const, op: str) -> LFormula:
    const = fr(const)
    clean = {v: fr(c) for v, c in coeffs.items() if c != 0}
    if not clean:
        ok = {"<=": const <= 0, "<": const < 0, "=": const == 0}[op]
        return L_TRUE if ok else L_FALSE
    return LAtom(tuple(sorted(clean.items())), const, op)


def land(*parts) -> LFormula:
    out = []
    for p in parts:
        if p == L_TRUE:
            continue
        if p == L_FALSE:
            return L_FALSE
        if isinstance(p, LAnd):
            out.extend(p.parts)
        else:
            out.append(p)
    if len(out) == 1:
        return out[0]
    return LAnd(tuple(out))


def lor(*parts) -> LFormula:
    out = []
    for p in parts:
        if p == L_FALSE:
            continue
        if p == L_TRUE:
            return L_TRUE
        if isinstance(p, LOr):
            out.extend(p.parts)
        else:
            out.append(p)
    if len(out) == 1:
        return out[0]
    return LOr(tuple(out))


def lnot(f: LFormula) -> LFormula:
    if f == L_TRUE:
        return L_FALSE
    if f == L_FALSE:
        return L_TRUE
    if isinstance(f, LNot):
        return f.body
    return LNot(f)


def lexists(var: str, body: LFormula) -> LFormula:
    if body in (L_TRUE, L_FALSE):
        return body
    return LExists(var, body)


def lformula_vars(f: LFormula, free_only: bool = True) -> set:
    """Variable names occurring in f (free ones only by default)."""
    if isinstance(f, LAtom):
        return {v for v, _ in f.coeffs}
    if isinstance(f, (LAnd, LOr)):
        out: set = set()
        for p in f.parts:
            out |= lformula_vars(p, free_only)
        return out
    if isinstance(f, LNot):
        return lformula_vars(f.body, free_only)
    if isinstance(f, LExists):
        inner = lformula_vars(f.body, free_only)
        return inner - {f.var} if free_only else inner | {f.var}
    raise TypeError(f"not an LRA formula: {f!r}")


# ---------------------------------------------------------------------------
# normal forms

def _negate_atom(a: LAtom) -> LFormula:
    neg = {v: -c for v, c in a.coeffs}
    if a.op == "<=":               # not(e <= 0)  ==  -e < 0
        return latom(neg, -a.const, "<")
    if a.op == "<":                # not(e < 0)   ==  -e <= 0
        return latom(neg, -a.const, "<=")
    pos = dict(a.coeffs)           # not(e = 0)   ==  e < 0 or -e < 0
    return lor(latom(pos, a.const, "<"), latom(neg, -a.const, "<"))


def nnf(f: LFormula) -> LFormula:
    """Push negations to atoms; input must be quantifier-free."""
    if isinstance(f, LAtom):
        return f
    if isinstance(f, LAnd):
        return land(*[nnf(p) for p in f.parts])
    if isinstance(f, LOr):
        return lor(*[nnf(p) for p in f.parts])
    if isinstance(f, LNot):
        g = f.body
        if isinstance(g, LAtom):
            return _negate_atom(g)
        if isinstance(g, LAnd):
            return lor(*[nnf(lnot(p)) for p in g.parts])
        if isinstance(g, LOr):
            return land(*[nnf(lnot(p)) for p in g.parts])
        if isinstance(g, LNot):
            return nnf(g.body)
        raise TypeError(f"quantifier under negation in nnf: {g!r}")
    raise TypeError(f"quantifier in nnf: {f!r}")


class _Budget:
    def __init__(self, limit: int):
        self.left = limit

    def spend(self, n: int = 1):
        self.left -= n
        if self.left < 0:
            raise ResourceLimit("formula expansion exceeded the atom budget")


def dnf_iter(f: LFormula, budget: _Budget):
    """Yield conjuncts (tuples of LAtom) of the DNF of an NNF formula."""
    if isinstance(f, LAtom):
        budget.spend()
        yield (f,)
    elif isinstance(f, LOr):
        for p in f.parts:
            yield from dnf_iter(p, budget)
    elif isinstance(f, LAnd):
        if not f.parts:
            yield ()
            return

        def cross(parts):
            if not parts:
                yield ()
                return
            for head in dnf_iter(parts[0], budget):
                for tail in cross(parts[1:]):
                    budget.spend(len(head))
                    yield head + tail

        yield from cross(f.parts)
    else:
        raise TypeError(f"dnf expects NNF input, got {f!r}")


# ---------------------------------------------------------------------------
# Fourier-Motzkin

def _atom_split(a: LAtom, v: str):
    """(coeff of v, remaining coeffs dict)."""
    rest = dict(a.coeffs)
    c = rest.pop(v, Fraction(0))
    return c, rest


def _combine(lo: LAtom, lo_c: Fraction, hi: LAtom, hi_c: Fraction, v: str) -> LFormula:
    """Eliminate v from lower bound lo (coeff < 0) and upper bound hi (> 0)."""
    _, lo_rest = _atom_split(lo, v)
    _, hi_rest = _atom_split(hi, v)
    coeffs: dict = {}
    for var, c in lo_rest.items():
        coeffs[var] = coeffs.get(var, Fraction(0)) + hi_c * c
    for var, c in hi_rest.items():
        coeffs[var] = coeffs.get(var, Fraction(0)) + (-lo_c) * c
    const = hi_c * lo.const + (-lo_c) * hi.const
    op = "<" if lo.op == "<" or hi.op == "<" else "<="
    return latom(coeffs, const, op)


def _subst(a: LAtom, v: str, expr_coeffs: dict, expr_const: Fraction) -> LFormula:
    """Replace v by the linear expression (coeffs, const) inside atom a."""
    c, rest = _atom_split(a, v)
    if c == 0:
        return a
    coeffs = dict(rest)
    for var, ec in expr_coeffs.items():
        coeffs[var] = coeffs.get(var, Fraction(0)) + c * ec
    return latom(coeffs, a.const + c * expr_const, a.op)


def _atom_key(a: LAtom):
    return (a.op, a.coeffs, a.const)


def _pick_order(atoms, restrict=None):
    """Elimination order: occurrence count, then name."""
    count: dict = {}
    for a in atoms:
        for v, _ in a.coeffs:
            if restrict is None or v in restrict:
                count[v] = count.get(v, 0) + 1
    return sorted(count, key=lambda v: (count[v], v))


def _eliminate_one(atoms: list, v: str):
    """One FM step; returns (new atoms, trail entry) or (None, None) if the
    conjunct became infeasible."""
    zero, eqs, lowers, uppers = [], [], [], []
    for a in atoms:
        c, _ = _atom_split(a, v)
        if c == 0:
            zero.append(a)
        elif a.op == "=":
            eqs.append((a, c))
        elif c > 0:
            uppers.append((a, c))
        else:
            lowers.append((a, c))
    if eqs:
        eqs.sort(key=lambda ac: _atom_key(ac[0]))
        eq, c = eqs[0]
        _, rest = _atom_split(eq, v)
        expr_coeffs = {var: -cc / c for var, cc in rest.items()}
        expr_const = -eq.const / c
        out = []
        for a in atoms:
            if a is eq:
                continue
            r = _subst(a, v, expr_coeffs, expr_const)
            if r == L_FALSE:
                return None, None
            if r != L_TRUE:
                out.append(r)
        return out, ("eq", v, expr_coeffs, expr_const)
    out = list(zero)
    for lo, lo_c in lowers:
        for hi, hi_c in uppers:
            r = _combine(lo, lo_c, hi, hi_c, v)
            if r == L_FALSE:
                return None, None
            if r != L_TRUE:
                out.append(r)
    trail = ("fm", v,
             tuple((a, c) for a, c in lowers),
             tuple((a, c) for a, c in uppers))
    return out, trail


def _expr_value(coeffs, const, wit: dict) -> Fraction:
    total = fr(const)
    for var, c in (coeffs.items() if isinstance(coeffs, dict) else coeffs):
        total += fr(c) * wit[var]
    return total


def _back_substitute(trail) -> dict:
    wit: dict = {}
    for entry in reversed(trail):
        if entry[0] == "eq":
            _, v, coeffs, const = entry
            wit[v] = _expr_value(coeffs, const, wit)
            continue
        _, v, lowers, uppers = entry
        lo_best: Optional[Fraction] = None
        for a, c in lowers:       # c < 0:  v >= -(rest + const)/c
            _, rest = _atom_split(a, v)
            bound = -_expr_value(rest, a.const, wit) / c
            lo_best = bound if lo_best is None else max(lo_best, bound)
        hi_best: Optional[Fraction] = None
        for a, c in uppers:
            _, rest = _atom_split(a, v)
            bound = -_expr_value(rest, a.const, wit) / c
            hi_best = bound if hi_best is None else min(hi_best, bound)
        if lo_best is None and hi_best is None:
            wit[v] = Fraction(0)
        elif lo_best is None:
            wit[v] = hi_best - 1
        elif hi_best is None:
            wit[v] = lo_best + 1
        else:
            wit[v] = (lo_best + hi_best) / 2
    return wit


def solve_conjunct(atoms: Iterable[LAtom]) -> Optional[dict]:
    """Exact witness for a conjunction of atoms, or None if infeasible."""
    work = list(dict.fromkeys(atoms))
    for a in work:
        if a == L_FALSE:
            return None
    trail = []
    while True:
        order = _pick_order(work)
        if not order:
            break
        work, entry = _eliminate_one(work, order[0])
        if work is None:
            return None
        trail.append(entry)
    return _back_substitute(trail)


def _project_conjunct(atoms: list, v: str) -> Optional[list]:
    """Eliminate only v (used by quantifier elimination)."""
    out, _ = _eliminate_one(atoms, v)
    return out


# ---------------------------------------------------------------------------
# quantifier elimination and solving

def qe(f: LFormula, budget: Optional[_Budget] = None) -> LFormula:
    """Replace every quantifier by its FM projection, innermost first."""
    budget = budget or _Budget(DEFAULT_MAX_ATOMS)
    if isinstance(f, LAtom):
        return f
    if isinstance(f, LAnd):
        return land(*[qe(p, budget) for p in f.parts])
    if isinstance(f, LOr):
        return lor(*[qe(p, budget) for p in f.parts])
    if isinstance(f, LNot):
        return lnot(qe(f.body, budget))
    if isinstance(f, LExists):
        body = nnf(qe(f.body, budget))
        branches = []
        for conj in dnf_iter(body, budget):
            projected = _project_conjunct(list(dict.fromkeys(conj)), f.var)
            if projected is None:
                continue
            branches.append(land(*projected))
        return lor(*branches)
    raise TypeError(f"not an LRA formula: {f!r}")


@dataclass(frozen=True)
class SatResult:
    status: str  # "sat" | "unsat" | "unknown"
    witness: Optional[dict] = None
    reason: Optional[str] = None

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"


def strip_exists(f: LFormula):
    """Peel the outer existential prefix, hoisting quantifiers out of
    conjunctions when the variable is not free elsewhere (so witnesses
    cover the whole prefix, not just the syntactically outermost part)."""
    evars = []
    while True:
        if isinstance(f, LExists):
            if f.var in evars:
                break
            evars.append(f.var)
            f = f.body
            continue
        if isinstance(f, LAnd):
            hoisted = False
            for i, p in enumerate(f.parts):
                if not isinstance(p, LExists) or p.var in evars:
                    continue
                others = f.parts[:i] + f.parts[i + 1:]
                if any(p.var in lformula_vars(o) for o in others):
                    continue
                evars.append(p.var)
                f = land(p.body, *others)
                hoisted = True
                break
            if hoisted:
                continue
        break
    return evars, f


def solve(f: LFormula, max_atoms: int = DEFAULT_MAX_ATOMS) -> SatResult:
    """Decide an LRA formula; free variables are treated existentially.

    A sat verdict carries an exact rational witness for the free and
    outermost existential variables.
    """
    budget = _Budget(max_atoms)
    try:
        evars, body = strip_exists(f)
        body = qe(body, budget)
        body = nnf(body)
        keep = set(evars) | lformula_vars(body)
        for conj in dnf_iter(body, budget):
            wit = solve_conjunct(conj)
            if wit is not None:
                for v in keep:
                    wit.setdefault(v, Fraction(0))
                return SatResult("sat", {v: wit[v] for v in sorted(keep)})
        return SatResult("unsat")
    except ResourceLimit as e:
        return SatResult("unknown", reason=str(e))


def eval_lformula(f: LFormula, env: dict) -> bool:
    """Evaluate a quantifier-free formula under a rational assignment."""
    if isinstance(f, LAtom):
        val = _expr_value(f.coeffs, f.const, env)
        return {"<=": val <= 0, "<": val < 0, "=": val == 0}[f.op]
    if isinstance(f, LAnd):
        return all(eval_lformula(p, env) for p in f.parts)
    if isinstance(f, LOr):
        return any(eval_lformula(p, env) for p in f.parts)
    if isinstance(f, LNot):
        return not eval_lformula(f.body, env)
    raise TypeError(f"cannot evaluate {f!r}")


# ---------------------------------------------------------------------------
# SMT-LIB export

def _smt_num(x: Fraction) -> str:
    if x < 0:
        return f"(- {_smt_num(-x)})"
    if x.denominator == 1:
        return f"{x.numerator}.0"
    return f"(/ {x.numerator}.0 {x.denominator}.0)"


def _smt_expr(coeffs, const) -> str:
    terms = [f"(* {_smt_num(fr(c))} {v})" for v, c in coeffs]
    terms.append(_smt_num(fr(const)))
    if len(terms) == 1:
        return terms[0]
    return "(+ " + " ".join(terms) + ")"


def _smt_formula(f: LFormula) -> str:
    if f == L_TRUE:
        return "true"
    if f == L_FALSE:
        return "false"
    if isinstance(f, LAtom):
        return f"({f.op} {_smt_expr(f.coeffs, f.const)} 0.0)"
    if isinstance(f, LAnd):
        return "(and " + " ".join(_smt_formula(p) for p in f.parts) + ")"
    if isinstance(f, LOr):
        return "(or " + " ".join(_smt_formula(p) for p in f.parts) + ")"
    if isinstance(f, LNot):
        return f"(not {_smt_formula(f.body)})"
    if isinstance(f, LExists):
        return f"(exists (({f.var} Real)) {_smt_formula(f.body)})"
    raise TypeError(f"not an LRA formula: {f!r}")


def export_smtlib(f: LFormula) -> str:
    """SMT-LIB 2 script for the formula; byte-stable for identical input."""
    lines = ["(set-logic LRA)"]
    for v in sorted(lformula_vars(f)):
        lines.append(f"(declare-const {v} Real)")
    lines.append(f"(assert {_smt_formula(f)})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# lowering of residues: arithmetic terms

def fold_arith(t) -> Optional[Fraction]:
    """Exact constant value of an arithmetic term, or None if symbolic."""
    if isinstance(t, A.Const):
        return fr(t.value)
    if isinstance(t, A.Add):
        a, b = fold_arith(t.left), fold_arith(t.right)
        return None if a is None or b is None else a + b
    if isinstance(t, A.Sub):
        a, b = fold_arith(t.left), fold_arith(t.right)
        return None if a is None or b is None else a - b
    if isinstance(t, A.Mul):
        a, b = fold_arith(t.left), fold_arith(t.right)
        return None if a is None or b is None else a * b
    if isinstance(t, A.LenT):
        s = fold_seg(t.seg)
        if s is None or s is INVALID_SEG:
            return None
        return fr(seg_length(s))
    return None


#: sentinel for ground terms that denote no segment (invalid constructor
#: arguments or an undefined concatenation)
INVALID_SEG = object()


def fold_seg(t):
    """Concrete segment denoted by a ground segment term; None when the
    term is symbolic; INVALID_SEG when it is ground but denotes nothing."""
    if isinstance(t, A.SegConst):
        return t.value
    if isinstance(t, A.SegCtor):
        args = [fold_arith(a) for a in t.args]
        if any(a is None for a in args):
            return None
        vals = [float(a) for a in args]
        try:
            if t.kind == "iv":
                return Interval(vals[0])
            if t.kind == "line":
                return curve(Line(vals[0], vals[1]))
            return curve(Arc(vals[0], vals[1], vals[2]))
        except ValueError:
            return INVALID_SEG
    if isinstance(t, A.SegRegion):
        center = fold_seg(t.center)
        width = fold_arith(t.width)
        if center is None or width is None:
            return None
        if center is INVALID_SEG or not isinstance(center, Curve):
            return INVALID_SEG
        try:
            return Region(center, float(width))
        except ValueError:
            return INVALID_SEG
    if isinstance(t, A.SegConcat):
        a, b = fold_seg(t.left), fold_seg(t.right)
        if a is None or b is None:
            return None
        if a is INVALID_SEG or b is INVALID_SEG:
            return INVALID_SEG
        joined = concat(a, b)
        return INVALID_SEG if joined is None else joined
    return None


# Branched linear expression: list of (guard atoms, coeffs dict, const).
# Guards arise from sign case-splits (arc sweep variables).

def _br_const(c: Fraction):
    return [((), {}, c)]


def _br_var(v: str):
    return [((), {v: Fraction(1)}, Fraction(0))]


def _br_add(a, b, sign=1):
    out = []
    for ga, ca, ka in a:
        for gb, cb, kb in b:
            coeffs = dict(ca)
            for v, c in cb.items():
                coeffs[v] = coeffs.get(v, Fraction(0)) + sign * c
            out.append((ga + gb, coeffs, ka + sign * kb))
    return out


def _br_scale(a, factor: Fraction):
    return [(g, {v: factor * c for v, c in cs.items()}, factor * k)
            for g, cs, k in a]


def _seg_len_var(name: str) -> str:
    return f"{name}.len"


def lin_arith(t, variant: str):
    """Lower an arithmetic term to a branched linear expression."""
    c = fold_arith(t)
    if c is not None:
        return _br_const(c)
    if isinstance(t, A.RVar):
        return _br_var(t.name)
    if isinstance(t, A.Add):
        return _br_add(lin_arith(t.left, variant), lin_arith(t.right, variant))
    if isinstance(t, A.Sub):
        return _br_add(lin_arith(t.left, variant), lin_arith(t.right, variant), -1)
    if isinstance(t, A.Mul):
        lc, rc = fold_arith(t.left), fold_arith(t.right)
        if lc is not None:
            return _br_scale(lin_arith(t.right, variant), lc)
        if rc is not None:
            return _br_scale(lin_arith(t.left, variant), rc)
        raise UnsupportedFragment(
            f"nonlinear multiplication of symbolic terms: {t!r}")
    if isinstance(t, A.LenT):
        return lin_seg_len(t.seg, variant)
    raise UnsupportedFragment(f"term outside the arithmetic fragment: {t!r}")


def lin_seg_len(s, variant: str):
    """Branched linear expression for the length of a segment term."""
    if isinstance(s, A.SegConst):
        return _br_const(fr(seg_length(s.value)))
    if isinstance(s, A.SVar):
        return _br_var(_seg_len_var(s.name))
    if isinstance(s, A.SegConcat):
        return _br_add(lin_seg_len(s.left, variant),
                       lin_seg_len(s.right, variant))
    if isinstance(s, A.SegRegion):
        return lin_seg_len(s.center, variant)
    if isinstance(s, A.SegCtor):
        if s.kind in ("iv", "line"):
            return lin_arith(s.args[0], variant)
        r, _, theta = s.args
        tc = fold_arith(theta)
        if tc is not None:
            return _br_scale(lin_arith(r, variant), abs(tc))
        rc = fold_arith(r)
        if rc is None:
            raise UnsupportedFragment(
                "arc length r*|theta| with both r and theta symbolic")
        # sign case-split on the symbolic sweep
        th = lin_arith(theta, variant)
        out = []
        for g, cs, k in th:
            pos_guard = latom({v: -c for v, c in cs.items()}, -k, "<")
            neg_guard = latom(dict(cs), k, "<")
            if isinstance(pos_guard, LAtom):
                out.append((g + (pos_guard,),
                            {v: rc * c for v, c in cs.items()}, rc * k))
            if isinstance(neg_guard, LAtom):
                out.append((g + (neg_guard,),
                            {v: -rc * c for v, c in cs.items()}, -rc * k))
        if not out:
            raise UnsupportedFragment("arc sweep term folded inconsistently")
        return out
    raise UnsupportedFragment(f"segment term outside the fragment: {s!r}")


def _branched_cmp(lhs, rhs, op: str, variant: str) -> LFormula:
    """lhs op rhs over branched linear expressions."""
    diff = _br_add(lhs, rhs, -1)
    parts = []
    for guards, coeffs, const in diff:
        parts.append(land(*guards, latom(coeffs, const, op)))
    return lor(*parts)


# ---------------------------------------------------------------------------
# lowering of residues: segment equalities

def _angle_eq(e1, e2) -> LFormula:
    """e1 == e2 modulo 2*pi, within ANGLE_SLACK, window +/- 2 turns."""
    branches = []
    for guards, coeffs, const in _br_add(e1, e2, -1):
        for k in ANGLE_WINDOW:
            hi = latom(dict(coeffs), const - k * TWO_PI - ANGLE_SLACK, "<=")
            lo = latom({v: -c for v, c in coeffs.items()},
                       -(const - k * TWO_PI) - ANGLE_SLACK, "<=")
            branches.append(land(*guards, hi, lo))
    return lor(*branches)


@dataclass(frozen=True)
class _Prim:
    """Descriptor of one curve primitive with branched-linear parameters."""

    kind: str  # "line" | "arc"
    params: tuple  # line: (length, angle); arc: (radius, angle, sweep)
    ground: bool

    @property
    def start_angle(self):
        return self.params[1]

    @property
    def end_angle(self):
        if self.kind == "line":
            return self.params[1]
        return _br_add(self.params[1], self.params[2])


def _prim_descriptors(s, variant: str):
    """Flatten a curve-sorted term into primitive descriptors.

    Raises UnsupportedFragment when an opaque segment variable occurs.
    """
    if isinstance(s, A.SegConst):
        value = s.value
        if isinstance(value, Region):
            raise TypeError("region constant in curve position")
        if isinstance(value, Interval):
            raise TypeError("interval constant in curve position")
        out = []
        for p in value.prims:
            if isinstance(p, Line):
                out.append(_Prim("line", (_br_const(fr(p.length)),
                                          _br_const(fr(p.phi))), True))
            else:
                out.append(_Prim("arc", (_br_const(fr(p.radius)),
                                         _br_const(fr(p.phi)),
                                         _br_const(fr(p.theta))), True))
        return out
    if isinstance(s, A.SegCtor):
        if s.kind == "iv":
            raise TypeError("interval constructor in curve position")
        ground = all(fold_arith(a) is not None for a in s.args)
        if s.kind == "line":
            return [_Prim("line", (lin_arith(s.args[0], variant),
                                   lin_arith(s.args[1], variant)), ground)]
        return [_Prim("arc", (lin_arith(s.args[0], variant),
                              lin_arith(s.args[1], variant),
                              lin_arith(s.args[2], variant)), ground)]
    if isinstance(s, A.SegConcat):
        return (_prim_descriptors(s.left, variant)
                + _prim_descriptors(s.right, variant))
    if isinstance(s, A.SVar):
        raise UnsupportedFragment(
            f"curve-sorted segment variable {s.name!r} in structural equality")
    raise UnsupportedFragment(f"segment term outside the fragment: {s!r}")


def _match_prim(p: _Prim, q: _Prim, variant: str) -> LFormula:
    if p.kind != q.kind:
        return L_FALSE
    if p.kind == "line":
        return land(_branched_cmp(p.params[0], q.params[0], "=", variant),
                    _angle_eq(p.params[1], q.params[1]))
    return land(_branched_cmp(p.params[0], q.params[0], "=", variant),
                _angle_eq(p.params[1], q.params[1]),
                _branched_cmp(p.params[2], q.params[2], "=", variant))


def _mergeable_neighbours(prims) -> bool:
    return any(prims[i].kind == prims[i + 1].kind
               for i in range(len(prims) - 1))


def _joint_constraints(prims) -> list:
    """Slope continuity across adjacent primitives; ground-ground joints
    were already validated when the constant curve was built."""
    out = []
    for a, b in zip(prims, prims[1:]):
        if not (a.ground and b.ground):
            out.append(_angle_eq(a.end_angle, b.start_angle))
    return out


def _eq_curve(s1, s2, variant: str) -> LFormula:
    p1 = _prim_descriptors(s1, variant)
    p2 = _prim_descriptors(s2, variant)
    if len(p1) != len(p2):
        if not _mergeable_neighbours(p1) and not _mergeable_neighbours(p2):
            return L_FALSE
        raise UnsupportedFragment(
            "curve equality between chains of different primitive counts")
    parts = [_match_prim(p, q, variant) for p, q in zip(p1, p2)]
    parts += _joint_constraints(p1) + _joint_constraints(p2)
    return land(*parts)


def _eq_seg(s1, s2, variant: str) -> LFormula:
    g1, g2 = fold_seg(s1), fold_seg(s2)
    if g1 is INVALID_SEG or g2 is INVALID_SEG:
        return L_FALSE  # a term denoting no segment satisfies no atom
    if g1 is not None and g2 is not None:
        return L_TRUE if segments_equal(g1, g2) else L_FALSE
    if variant == "iv":
        return _branched_cmp(lin_seg_len(s1, variant),
                             lin_seg_len(s2, variant), "=", variant)
    if variant == "region":
        def split_region(s):
            if isinstance(s, A.SegRegion):
                return s.center, s.width
            if isinstance(s, A.SegConst) and isinstance(s.value, Region):
                return (A.SegConst(s.value.center), A.num(s.value.width))
            raise UnsupportedFragment(
                f"region equality needs region-shaped terms, got {s!r}")
        c1, w1 = split_region(s1)
        c2, w2 = split_region(s2)
        return land(_eq_curve(c1, c2, "curve"),
                    _branched_cmp(lin_arith(w1, variant),
                                  lin_arith(w2, variant), "=", variant))
    return _eq_curve(s1, s2, variant)


# ---------------------------------------------------------------------------
# ground-equation propagation for segment variables

def _subst_seg(f, name: str, value: Segment):
    """Substitute a ground segment for a segment variable inside a residue."""
    sub = lambda g: _subst_seg(g, name, value)

    def term(t):
        if isinstance(t, A.SVar) and t.name == name:
            return A.SegConst(value)
        if isinstance(t, A.SegConcat):
            return A.SegConcat(term(t.left), term(t.right))
        if isinstance(t, A.SegRegion):
            return A.SegRegion(term(t.center), arith(t.width))
        return t

    def arith(t):
        if isinstance(t, (A.Add, A.Sub, A.Mul)):
            return type(t)(arith(t.left), arith(t.right))
        if isinstance(t, A.LenT):
            return A.LenT(term(t.seg))
        return t

    if isinstance(f, A.BoolConst):
        return f
    if isinstance(f, A.Leq):
        return A.Leq(arith(f.left), arith(f.right))
    if isinstance(f, A.SegEq):
        return A.SegEq(term(f.left), term(f.right))
    if isinstance(f, A.Not):
        return A.Not(sub(f.body))
    if isinstance(f, (A.And, A.Or, A.Implies)):
        return type(f)(sub(f.left), sub(f.right))
    if isinstance(f, A.Exists):
        if f.var == name and f.sort == "seg":
            return f
        return A.Exists(f.var, f.sort, sub(f.body))
    raise TypeError(f"unexpected node in residue: {f!r}")


def _shallow_dnf(f, cap: int = 4096):
    """Disjuncts of positive and/or structure; opaque nodes stay leaves."""
    if isinstance(f, A.Or):
        left = _shallow_dnf(f.left, cap)
        right = _shallow_dnf(f.right, cap)
        if left is None or right is None or len(left) + len(right) > cap:
            return None
        return left + right
    if isinstance(f, A.And):
        left = _shallow_dnf(f.left, cap)
        right = _shallow_dnf(f.right, cap)
        if left is None or right is None or len(left) * len(right) > cap:
            return None
        return [a + b for a in left for b in right]
    return [[f]]


def propagate_segments(f, variant: str):
    """Push seg-quantifiers through disjunctions and substitute variables
    that are pinned to a ground segment by a positive equation."""
    if isinstance(f, (A.BoolConst, A.Leq, A.SegEq)):
        return f
    if isinstance(f, A.Not):
        return A.Not(propagate_segments(f.body, variant))
    if isinstance(f, (A.And, A.Or, A.Implies)):
        return type(f)(propagate_segments(f.left, variant),
                       propagate_segments(f.right, variant))
    if isinstance(f, A.Exists):
        body = propagate_segments(f.body, variant)
        if f.sort != "seg":
            return A.Exists(f.var, f.sort, body)
        disjuncts = _shallow_dnf(body)
        if disjuncts is None:
            return A.Exists(f.var, f.sort, body)
        out = []
        for leaves in disjuncts:
            pinned: Optional[Segment] = None
            for leaf in leaves:
                if isinstance(leaf, A.SegEq):
                    for mine, other in ((leaf.left, leaf.right),
                                        (leaf.right, leaf.left)):
                        if isinstance(mine, A.SVar) and mine.name == f.var:
                            ground = fold_seg(other)
                            if ground is not None:
                                pinned = ground
                                break
                if pinned is not None:
                    break
            branch = A.conj(*leaves)
            if pinned is not None:
                out.append(_subst_seg(branch, f.var, pinned))
            else:
                out.append(A.Exists(f.var, "seg", branch))
        return A.disj(*out)
    raise TypeError(f"unexpected node in residue: {f!r}")


# ---------------------------------------------------------------------------
# tr1: residue -> linear real arithmetic

def tr1(f, variant: str) -> LFormula:
    """Translate a residue formula into linear real arithmetic.

    Residues contain arithmetic comparisons, segment equalities, boolean
    structure, and real/segment quantifiers only.
    """
    if isinstance(f, A.BoolConst):
        return L_TRUE if f.value else L_FALSE
    if isinstance(f, A.Leq):
        return _branched_cmp(lin_arith(f.left, variant),
                             lin_arith(f.right, variant), "<=", variant)
    if isinstance(f, A.SegEq):
        return _eq_seg(f.left, f.right, variant)
    if isinstance(f, A.Not):
        return lnot(tr1(f.body, variant))
    if isinstance(f, A.And):
        return land(tr1(f.left, variant), tr1(f.right, variant))
    if isinstance(f, A.Or):
        return lor(tr1(f.left, variant), tr1(f.right, variant))
    if isinstance(f, A.Implies):
        return lor(lnot(tr1(f.left, variant)), tr1(f.right, variant))
    if isinstance(f, A.Exists):
        if f.sort == "real":
            return lexists(f.var, tr1(f.body, variant))
        if f.sort == "seg":
            if variant != "iv":
                raise UnsupportedFragment(
                    f"{variant}-sorted segment variable {f.var!r} under a "
                    "quantifier (only interval segment variables are decidable)")
            k = _seg_len_var(f.var)
            return lexists(k, land(latom({k: Fraction(-1)}, 0, "<="),
                                   tr1(f.body, variant)))
        raise UnsupportedFragment(
            f"{f.sort} quantifier present in residue (variable {f.var!r})")
    raise TypeError(f"not a residue formula: {f!r}")


def lower(f, variant: str) -> LFormula:
    """Full lowering: ground-segment propagation, then tr1."""
    return tr1(propagate_segments(f, variant), variant)

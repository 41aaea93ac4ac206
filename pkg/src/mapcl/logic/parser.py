"""Concrete syntax for state and temporal formulas.

Connectives, tightest first: ``!``, ``&&``, ``++`` (edge-set coalescing),
``||``, ``=>``.  Quantifiers (``exists``/``forall`` sort names ``.``)
extend maximally to the right; ``forall`` is sugar for negated ``exists``.
Comparisons dispatch on the sorts of their operands, which are known
because every variable is introduced by a sorted quantifier; unbound
names are scope errors.

Temporal syntax wraps state formulas in brackets::

    always [ meets(c, 5.0, st) ] => eventually [ inside(c, {u1}) ]
"""

from __future__ import annotations

import math

from ..segments import EMPTY_CURVE
from . import ast as A

KEYWORDS = {
    "exists", "forall", "real", "seg", "vertex", "obj", "road",
    "true", "false", "edge", "ride", "dist", "len", "fwd", "bwd", "C",
    "iv", "line", "arc", "region", "eps", "meets", "inside", "rightof",
    "opposite", "straight", "turnright", "turnleft", "centrifugal",
    "safedist", "pi", "green", "red",
    "next", "until", "always", "eventually",
}

_PUNCT = ["++", "&&", "||", "=>", "<=", ">=", "!=", "=", "<", ">", "!",
          "(", ")", "[", "]", "{", "}", ",", ".", "+", "-", "*"]


class ParseError(ValueError):
    def __init__(self, msg: str, pos: int = -1):
        super().__init__(f"{msg}" + (f" (at offset {pos})" if pos >= 0 else ""))
        self.pos = pos


def _tokenize(text: str):
    toks = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c == "#":  # comment to end of line
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] in ".eE"
                             or (text[j] in "+-" and j > i and text[j - 1] in "eE")):
                j += 1
            # don't swallow a trailing '.' that isn't part of the number
            while text[i:j].endswith(".") and text[i:j].count(".") > 1:
                j -= 1
            try:
                val = float(text[i:j])
            except ValueError:
                raise ParseError(f"bad number {text[i:j]!r}", i)
            toks.append(("num", val, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            toks.append(("kw" if word in KEYWORDS else "id", word, i))
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(("op", p, i))
                i += len(p)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", i)
    toks.append(("eof", "", n))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.scope: dict[str, str] = {}

    # -- token helpers ---------------------------------------------------
    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, kind, value=None) -> bool:
        k, v, _ = self.peek()
        return k == kind and (value is None or v == value)

    def eat(self, kind, value=None):
        k, v, p = self.peek()
        if k != kind or (value is not None and v != value):
            want = value if value is not None else kind
            raise ParseError(f"expected {want!r}, found {v!r}", p)
        return self.next()

    def ident(self) -> str:
        k, v, p = self.peek()
        if k != "id":
            raise ParseError(f"expected identifier, found {v!r}", p)
        self.next()
        return v

    def sort_of(self, name: str, pos: int) -> str:
        if name not in self.scope:
            raise ParseError(f"unbound variable {name!r}", pos)
        return self.scope[name]

    # -- state formulas --------------------------------------------------
    def formula(self) -> A.Formula:
        f = self.orf()
        if self.at("op", "=>"):
            self.next()
            return A.Implies(f, self.formula())
        return f

    def orf(self) -> A.Formula:
        f = self.coalf()
        while self.at("op", "||"):
            self.next()
            f = A.Or(f, self.coalf())
        return f

    def coalf(self) -> A.Formula:
        f = self.andf()
        while self.at("op", "++"):
            self.next()
            f = A.Coalesce(f, self.andf())
        return f

    def andf(self) -> A.Formula:
        f = self.unary()
        while self.at("op", "&&"):
            self.next()
            f = A.And(f, self.unary())
        return f

    def unary(self) -> A.Formula:
        if self.at("op", "!"):
            self.next()
            return A.Not(self.unary())
        if self.at("kw", "exists") or self.at("kw", "forall"):
            return self.quantifier()
        return self.atom()

    def quantifier(self) -> A.Formula:
        _, which, p = self.next()
        k, sort, sp = self.peek()
        if k != "kw" or sort not in ("real", "seg", "vertex", "obj", "road"):
            raise ParseError(f"expected a sort after {which!r}", sp)
        self.next()
        names = [self.ident()]
        while self.at("op", ","):
            self.next()
            names.append(self.ident())
        self.eat("op", ".")
        saved = dict(self.scope)
        for nm in names:
            if nm in self.scope:
                raise ParseError(f"variable {nm!r} shadows an outer binding", p)
            self.scope[nm] = sort
        body = self.formula()
        self.scope = saved
        out = body if which == "exists" else A.Not(body)
        for nm in reversed(names):
            out = A.Exists(nm, sort, out)
        return out if which == "exists" else A.Not(out)

    def atom(self) -> A.Formula:
        k, v, p = self.peek()
        if k == "kw":
            if v == "true":
                self.next()
                return A.BoolConst(True)
            if v == "false":
                self.next()
                return A.BoolConst(False)
            if v == "C":
                self.next()
                self.eat("op", "(")
                f = self.formula()
                self.eat("op", ")")
                return A.Closure(f)
            if v == "edge":
                self.next()
                self.eat("op", "(")
                x = self.vertex_name()
                self.eat("op", ",")
                s = self.seg_term()
                self.eat("op", ",")
                y = self.vertex_name()
                self.eat("op", ")")
                return A.EdgeA(x, s, y)
            if v == "road":
                self.next()
                self.eat("op", "(")
                r = self.ident()
                if self.sort_of(r, p) != "road":
                    raise ParseError(f"{r!r} is not a road variable", p)
                self.eat("op", ",")
                x = self.vertex_name()
                self.eat("op", ",")
                s = self.seg_term()
                self.eat("op", ",")
                y = self.vertex_name()
                self.eat("op", ")")
                return A.RoadA(r, x, s, y)
            if v == "ride":
                self.next()
                self.eat("op", "(")
                frm = self.pos_term()
                self.eat("op", ",")
                s = self.seg_term()
                self.eat("op", ",")
                to = self.pos_term()
                self.eat("op", ")")
                return A.RideA(frm, s, to)
            if v == "dist":
                self.next()
                self.eat("op", "(")
                frm = self.pos_term()
                self.eat("op", ",")
                to = self.pos_term()
                self.eat("op", ")")
                self.eat("op", "=")
                t = self.arith()
                return A.DistEq(frm, to, t)
            if v == "meets":
                self.next()
                self.eat("op", "(")
                o = self.obj_name()
                self.eat("op", ",")
                d = self.arith()
                self.eat("op", ",")
                o2 = self.obj_name()
                self.eat("op", ")")
                return A.Meets(o, d, o2)
            if v == "inside":
                self.next()
                self.eat("op", "(")
                o = self.obj_name()
                self.eat("op", ",")
                place = self.place_ref()
                lane = None
                if self.at("op", ","):
                    self.next()
                    lane = self.arith()
                self.eat("op", ")")
                return A.Inside(o, place, lane)
            if v in ("rightof", "opposite"):
                self.next()
                self.eat("op", "(")
                x = self.vertex_name()
                self.eat("op", ",")
                y = self.vertex_name()
                self.eat("op", ",")
                place = self.place_ref()
                self.eat("op", ")")
                return (A.RightOf if v == "rightof" else A.OppositeA)(x, y, place)
            if v in ("straight", "turnright", "turnleft"):
                self.next()
                self.eat("op", "(")
                o = self.obj_name()
                self.eat("op", ",")
                place = self.place_ref()
                self.eat("op", ")")
                kind = {"straight": "straight", "turnright": "right",
                        "turnleft": "left"}[v]
                return A.Heading(o, place, kind)
            if v == "centrifugal":
                self.next()
                self.eat("op", "(")
                o = self.obj_name()
                self.eat("op", ",")
                b = self.arith()
                self.eat("op", ")")
                return A.CentrifugalOk(o, b)
        if self.at("op", "(") or k in ("id", "num") or (
                k == "kw" and v in ("len", "fwd", "bwd", "iv", "line", "arc",
                                    "region", "eps", "pi", "green", "red",
                                    "safedist")):
            return self.comparison()
        raise ParseError(f"expected an atom, found {v!r}", p)

    def comparison(self) -> A.Formula:
        save = self.i
        try:
            sort1, t1 = self.term()
            k, op, p = self.peek()
            if k != "op" or op not in ("<=", ">=", "<", ">", "=", "!="):
                raise ParseError("expected comparison operator", p)
            self.next()
            sort2, t2 = self.term()
        except ParseError:
            self.i = save
            self.eat("op", "(")
            f = self.formula()
            self.eat("op", ")")
            return f
        if sort1 != sort2:
            raise ParseError(f"cannot compare {sort1} with {sort2}", p)
        if sort1 == "real":
            table = {
                "<=": lambda: A.Leq(t1, t2),
                ">=": lambda: A.Leq(t2, t1),
                "<": lambda: A.Not(A.Leq(t2, t1)),
                ">": lambda: A.Not(A.Leq(t1, t2)),
                "=": lambda: A.arith_eq(t1, t2),
                "!=": lambda: A.Not(A.arith_eq(t1, t2)),
            }
            return table[op]()
        if op not in ("=", "!="):
            raise ParseError(f"{sort1} terms admit only = and !=", p)
        if sort1 == "seg":
            eq: A.Formula = A.SegEq(t1, t2)
        elif sort1 == "pos":
            eq = A.PosEq(t1, t2)
        elif sort1 == "obj":
            eq = A.ObjEq(t1, t2)
        else:
            raise ParseError(f"{sort1} terms cannot be compared", p)
        return eq if op == "=" else A.Not(eq)

    # -- terms -----------------------------------------------------------
    def term(self):
        """Returns (sort, ast); sort in real | seg | pos | obj."""
        sort, t = self.term_factor()
        while self.at("op", "+") or self.at("op", "-") or self.at("op", "*"):
            _, op, p = self.next()
            sort2, t2 = self.term_factor()
            if op == "*" and sort == "seg" and sort2 == "seg":
                t = A.SegConcat(t, t2)
            elif sort == "real" and sort2 == "real":
                t = {"+": A.Add, "-": A.Sub, "*": A.Mul}[op](t, t2)
            else:
                raise ParseError(f"cannot apply {op!r} to {sort}/{sort2}", p)
        return sort, t

    def arith(self) -> A.ArithTerm:
        k, v, p = self.peek()
        sort, t = self.term()
        if sort != "real":
            raise ParseError(f"expected a numeric term, got {sort}", p)
        return t

    def seg_term(self) -> A.SegTerm:
        k, v, p = self.peek()
        sort, t = self.term()
        if sort != "seg":
            raise ParseError(f"expected a segment term, got {sort}", p)
        return t

    def pos_term(self) -> A.PosTerm:
        k, v, p = self.peek()
        sort, t = self.term()
        if sort != "pos":
            raise ParseError(f"expected a position term, got {sort}", p)
        return t

    def term_factor(self):
        k, v, p = self.peek()
        if self.at("op", "("):
            self.next()
            sort, t = self.term()
            self.eat("op", ")")
            return sort, t
        if self.at("op", "-"):
            self.next()
            sort, t = self.term_factor()
            if sort != "real":
                raise ParseError("unary minus applies to numbers", p)
            if isinstance(t, A.Const):
                return "real", A.Const(-t.value)
            return "real", A.Sub(A.Const(0.0), t)
        if k == "num":
            self.next()
            return "real", A.Const(v)
        if k == "kw":
            if v == "pi":
                self.next()
                return "real", A.Const(math.pi)
            if v == "green":
                self.next()
                return "real", A.Const(1.0)
            if v == "red":
                self.next()
                return "real", A.Const(0.0)
            if v == "len":
                self.next()
                self.eat("op", "(")
                s = self.seg_term()
                self.eat("op", ")")
                return "real", A.LenT(s)
            if v == "safedist":
                self.next()
                self.eat("op", "(")
                o1 = self.obj_name()
                self.eat("op", ",")
                o2 = self.obj_name()
                self.eat("op", ")")
                return "real", A.SafeDist(o1, o2)
            if v == "eps":
                self.next()
                return "seg", A.SegConst(EMPTY_CURVE)
            if v in ("iv", "line", "arc"):
                self.next()
                self.eat("op", "(")
                args = [self.arith()]
                while self.at("op", ","):
                    self.next()
                    args.append(self.arith())
                self.eat("op", ")")
                return "seg", A.SegCtor(v, tuple(args))
            if v == "region":
                self.next()
                self.eat("op", "(")
                c = self.seg_term()
                self.eat("op", ",")
                w = self.arith()
                self.eat("op", ")")
                return "seg", A.SegRegion(c, w)
            if v == "fwd":
                self.next()
                self.eat("op", "(")
                x = self.vertex_name()
                self.eat("op", ",")
                s = self.seg_term()
                self.eat("op", ",")
                t = self.arith()
                self.eat("op", ")")
                return "pos", A.FwdP(x, s, t)
            if v == "bwd":
                self.next()
                self.eat("op", "(")
                t = self.arith()
                self.eat("op", ",")
                s = self.seg_term()
                self.eat("op", ",")
                x = self.vertex_name()
                self.eat("op", ")")
                return "pos", A.BwdP(t, s, x)
        if k == "id":
            name = self.ident()
            sort = self.sort_of(name, p)
            if self.at("op", "."):
                self.next()
                attr = self.attr_name()
                if sort == "obj":
                    if attr == "pos":
                        return "pos", A.AttrPos(name)
                    if attr == "it":
                        return "seg", A.AttrIt(name)
                    if attr in ("sp", "wt", "ln", "weight", "cl", "id", "kind"):
                        return "real", A.AttrNum(name, attr)
                    raise ParseError(f"unknown object attribute {attr!r}", p)
                if sort == "road" and attr == "lanes":
                    return "real", A.LanesOf(name)
                raise ParseError(f"{sort} variables have no attribute {attr!r}", p)
            if sort == "real":
                return "real", A.RVar(name)
            if sort == "seg":
                return "seg", A.SVar(name)
            if sort == "vertex":
                return "pos", A.VertexP(name)
            if sort == "obj":
                return "obj", name
            raise ParseError(f"{sort} variable {name!r} is not a term", p)
        raise ParseError(f"expected a term, found {v!r}", p)

    def attr_name(self) -> str:
        k, v, p = self.peek()
        if k in ("id", "kw"):
            self.next()
            return v
        raise ParseError(f"expected attribute name, found {v!r}", p)

    def vertex_name(self) -> str:
        # Vertex slots resolve binding-first-then-literal at evaluation
        # time, so an unbound name here is a literal vertex name.
        k, v, p = self.peek()
        name = self.ident()
        if name in self.scope and self.scope[name] != "vertex":
            raise ParseError(f"{name!r} is not a vertex variable", p)
        return name

    def obj_name(self) -> str:
        k, v, p = self.peek()
        name = self.ident()
        if self.sort_of(name, p) != "obj":
            raise ParseError(f"{name!r} is not an object variable", p)
        return name

    def place_ref(self):
        if self.at("op", "{"):
            self.next()
            names = []
            if not self.at("op", "}"):
                names.append(self.ident())
                while self.at("op", ","):
                    self.next()
                    names.append(self.ident())
            self.eat("op", "}")
            return frozenset(names)
        k, v, p = self.peek()
        name = self.ident()
        if self.sort_of(name, p) != "road":
            raise ParseError(f"{name!r} is not a road variable or vertex set", p)
        return name

    # -- temporal --------------------------------------------------------
    def temporal(self) -> A.Temporal:
        f = self.t_or()
        if self.at("op", "=>"):
            self.next()
            return A.t_implies(f, self.temporal())
        return f

    def t_or(self) -> A.Temporal:
        f = self.t_and()
        while self.at("op", "||"):
            self.next()
            f = A.t_or(f, self.t_and())
        return f

    def t_and(self) -> A.Temporal:
        f = self.t_until()
        while self.at("op", "&&"):
            self.next()
            f = A.TAnd(f, self.t_until())
        return f

    def t_until(self) -> A.Temporal:
        f = self.t_unary()
        if self.at("kw", "until"):
            self.next()
            return A.TUntil(f, self.t_until())
        return f

    def t_unary(self) -> A.Temporal:
        k, v, p = self.peek()
        if self.at("op", "!"):
            self.next()
            return A.TNot(self.t_unary())
        if self.at("kw", "next"):
            self.next()
            return A.TNext(self.t_unary())
        if self.at("kw", "always"):
            self.next()
            return A.always(self.t_unary())
        if self.at("kw", "eventually"):
            self.next()
            return A.eventually(self.t_unary())
        if self.at("kw", "exists"):
            self.next()
            self.eat("kw", "obj")
            name = self.ident()
            self.eat("op", ".")
            if name in self.scope:
                raise ParseError(f"variable {name!r} shadows an outer binding", p)
            self.scope[name] = "obj"
            body = self.temporal()
            del self.scope[name]
            return A.TExists(name, body)
        if self.at("op", "["):
            self.next()
            f = self.formula()
            self.eat("op", "]")
            return A.TState(f)
        if self.at("op", "("):
            self.next()
            f = self.temporal()
            self.eat("op", ")")
            return f
        raise ParseError(f"expected a temporal formula, found {v!r}", p)


def parse_formula(text: str, scope: dict | None = None) -> A.Formula:
    """Parse a closed state formula (free sorts may be pre-declared)."""
    p = _Parser(text)
    p.scope = dict(scope or {})
    f = p.formula()
    p.eat("eof")
    return f


def parse_temporal(text: str, scope: dict | None = None) -> A.Temporal:
    p = _Parser(text)
    p.scope = dict(scope or {})
    f = p.temporal()
    p.eat("eof")
    return f


def parse(text: str, scope: dict | None = None):
    """Parse either layer: tries the state grammar, then the temporal one."""
    try:
        return parse_formula(text, scope)
    except ParseError:
        return parse_temporal(text, scope)

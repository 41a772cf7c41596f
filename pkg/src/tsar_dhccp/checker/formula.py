"""Property formulas: AST, parser and the template dictionary.

Grammar (loosest binding first)::

    f    := disj ['->' f]
    disj := conj ('||' conj)*
    conj := un ('&&' un)*
    un   := '!' un | ('EX'|'EF'|'EG'|'AX'|'AF'|'AG') un
          | ('E'|'A') '[' f 'U' f ']' | '(' f ')' | atom
    atom := 'true' | 'false' | 'deadlock' | 'quiescent' | 'census_ok' '(' INT ')'
          | TEMPLATE '(' INT (',' INT)* ')' | PATH OP LITERAL | PATH

A literal is an integer or a symbolic name (a location such as ``L1_VALID``
or a message type such as ``M_UP``).  A bare path means ``PATH != 0``.

Templates, expanded against a protocol model:

=====================  ====================================================
``holds(i,a)``         L1 ``i`` has a valid copy of line ``a``
``share(i,j,a)``       ``holds(i,a) && holds(j,a)``
``writes(i,a)``        a WR for ``a`` from L1 ``i`` sits in the L1-to-L2 request
                       channel (the write has not reached the L2 yet)
``invalidated(j,a)``   an M_UP, B_INV or M_INV for ``a`` addressed to L1 ``j``
                       sits in the L2-to-L1 coherence channel
``shared_and_write(i,j,a)``   ``share(i,j,a) && writes(i,a)``
``coherence_delivery(j,a)``   same as ``invalidated(j,a)``
``pending_read(i)``    processor ``i`` sent DT_RD and waits for the answer
``read_answered(i)``   processor ``i`` is idle again
=====================  ====================================================
"""

from __future__ import annotations

import re
from dataclasses import dataclass

__all__ = [
    "Formula", "Atom", "Const", "Derived", "Template", "Not", "And", "Or", "Implies",
    "Temporal", "Until", "FormulaSyntaxError", "parse_formula", "TEMPLATES",
    "is_state_formula", "expand_templates", "parse_property_file",
]


class FormulaSyntaxError(ValueError):
    def __init__(self, msg: str, pos: int, text: str = ""):
        super().__init__(f"{msg} at position {pos}" + (f": {text!r}" if text else ""))
        self.pos = pos


class Formula:
    __slots__ = ()

    def __str__(self):
        return _show(self)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True)
class Atom(Formula):
    path: str
    op: str
    value: int | str


@dataclass(frozen=True)
class Derived(Formula):
    """``deadlock``, ``quiescent`` or ``census_ok(a)``."""

    name: str
    args: tuple[int, ...] = ()


@dataclass(frozen=True)
class Template(Formula):
    name: str
    args: tuple[int, ...]


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Temporal(Formula):
    op: str  # EX EF EG AX AF AG
    arg: Formula


@dataclass(frozen=True)
class Until(Formula):
    quant: str  # E or A
    left: Formula
    right: Formula


UNARY_OPS = ("EX", "EF", "EG", "AX", "AF", "AG")
COMPARISONS = ("==", "!=", "<=", ">=", "<", ">")
DERIVED_ARITY = {"deadlock": 0, "quiescent": 0, "census_ok": 1}
TEMPLATE_ARITY = {
    "holds": 2, "share": 3, "writes": 2, "invalidated": 2,
    "shared_and_write": 3, "coherence_delivery": 2,
    "pending_read": 1, "read_answered": 1,
}
TEMPLATES = tuple(TEMPLATE_ARITY)


def _show(f: Formula) -> str:
    match f:
        case Const(v):
            return "true" if v else "false"
        case Atom(p, op, v):
            return f"{p} {op} {v}"
        case Derived(n, args) | Template(n, args):
            return f"{n}({','.join(map(str, args))})" if args or isinstance(f, Template) or n == "census_ok" else n
        case Not(a):
            return f"!{_wrap(a)}"
        case And(l, r):
            return f"{_wrap(l)} && {_wrap(r)}"
        case Or(l, r):
            return f"{_wrap(l)} || {_wrap(r)}"
        case Implies(l, r):
            return f"{_wrap(l)} -> {_wrap(r)}"
        case Temporal(op, a):
            return f"{op} {_wrap(a)}"
        case Until(q, l, r):
            return f"{q}[{l} U {r}]"
    raise TypeError(f)


def _wrap(f: Formula) -> str:
    s = _show(f)
    return f"({s})" if isinstance(f, (And, Or, Implies, Atom)) else s


# ---------------------------------------------------------------------------
# lexer / parser

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<op>->|&&|\|\||==|!=|<=|>=|<|>|!|\(|\)|\[|\]|,)
  | (?P<int>-?\d+)
  | (?P<path>[A-Za-z_][A-Za-z0-9_]*(?:\[\d+\])?(?:\.[A-Za-z_][A-Za-z0-9_]*(?:\[\d+\])?)*)
""", re.VERBOSE)


def _tokens(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError("unexpected character", pos, text[pos])
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokens(text)
        self.i = 0

    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value: str):
        t = self.next()
        if t[1] != value:
            raise FormulaSyntaxError(f"expected {value!r}, found {t[1] or 'end of input'!r}", t[2])
        return t

    def parse(self) -> Formula:
        f = self.implication()
        t = self.peek()
        if t[0] != "end":
            raise FormulaSyntaxError(f"unexpected {t[1]!r}", t[2])
        return f

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.peek()[1] == "->":
            self.next()
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek()[1] == "||":
            self.next()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.peek()[1] == "&&":
            self.next()
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        kind, val, pos = self.peek()
        if val == "!":
            self.next()
            return Not(self.unary())
        if val == "(":
            self.next()
            f = self.implication()
            self.expect(")")
            return f
        if kind == "path" and val in UNARY_OPS:
            self.next()
            return Temporal(val, self.unary())
        if kind == "path" and val in ("E", "A") and self.peek(1)[1] == "[":
            self.next()
            self.next()
            left = self.implication()
            u = self.next()
            if u[1] != "U":
                raise FormulaSyntaxError("expected 'U'", u[2])
            right = self.implication()
            self.expect("]")
            return Until(val, left, right)
        return self.atom()

    def int_args(self) -> tuple[int, ...]:
        self.expect("(")
        args = []
        while True:
            t = self.next()
            if t[0] != "int":
                raise FormulaSyntaxError("expected an integer argument", t[2])
            args.append(int(t[1]))
            t = self.next()
            if t[1] == ")":
                return tuple(args)
            if t[1] != ",":
                raise FormulaSyntaxError("expected ',' or ')'", t[2])

    def atom(self) -> Formula:
        kind, val, pos = self.next()
        if kind != "path":
            raise FormulaSyntaxError(f"unexpected {val or 'end of input'!r}", pos)
        if val in ("true", "false"):
            return Const(val == "true")
        if val in DERIVED_ARITY or val in TEMPLATE_ARITY:
            args = self.int_args() if self.peek()[1] == "(" else ()
            arity = DERIVED_ARITY.get(val, TEMPLATE_ARITY.get(val))
            if len(args) != arity:
                raise FormulaSyntaxError(f"{val} takes {arity} argument(s), got {len(args)}", pos)
            return Derived(val, args) if val in DERIVED_ARITY else Template(val, args)
        if self.peek()[1] not in COMPARISONS:
            # a bare path is a boolean proposition
            return Atom(val, "!=", 0)
        op = self.next()
        lit = self.next()
        if lit[0] == "int":
            return Atom(val, op[1], int(lit[1]))
        if lit[0] == "path" and "." not in lit[1] and "[" not in lit[1]:
            return Atom(val, op[1], lit[1])
        raise FormulaSyntaxError("expected an integer or a symbolic literal", lit[2])


def parse_formula(text: str) -> Formula:
    return _Parser(text).parse()


def parse_property_file(text: str) -> list[tuple[str, Formula]]:
    """Non-empty, non-comment lines as (source text, formula)."""
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        src = line.split("#", 1)[0].strip()
        if not src:
            continue
        try:
            out.append((src, parse_formula(src)))
        except FormulaSyntaxError as e:
            raise FormulaSyntaxError(f"line {lineno}: {e}", e.pos) from None
    return out


def is_state_formula(f: Formula) -> bool:
    """True when ``f`` has no temporal operator."""
    match f:
        case Temporal() | Until():
            return False
        case Not(a):
            return is_state_formula(a)
        case And(l, r) | Or(l, r) | Implies(l, r):
            return is_state_formula(l) and is_state_formula(r)
    return True


# ---------------------------------------------------------------------------
# templates


def _any(fs: list[Formula]) -> Formula:
    out = fs[0]
    for f in fs[1:]:
        out = Or(out, f)
    return out


def _template(name: str, args: tuple[int, ...], cfg) -> Formula:
    from ..dhccp.automata import L1_VALID_LOCS

    def proc(i):
        if not 0 <= i < cfg.nb_proc:
            raise ValueError(f"{name}: processor {i} out of range")
        return i

    def addr(a):
        if not 0 <= a < cfg.nb_l2:
            raise ValueError(f"{name}: address {a} out of range")
        return a

    def holds(i, a):
        locs = _any([Atom(f"pc[{proc(i)}].c.state", "==", loc.name) for loc in L1_VALID_LOCS])
        return And(locs, Atom(f"pc[{i}].c.v_addr", "==", addr(a)))

    def invalidated(j, a):
        kinds = ["M_UP", "B_INV"] + (["M_INV"] if cfg.l2_eviction else [])
        ch = "chan_L2L1CPREQ"
        return And(And(Atom(f"{ch}.isFull", "==", 1), Atom(f"{ch}.id", "==", proc(j))),
                   And(Atom(f"{ch}.addr", "==", addr(a)),
                       _any([Atom(f"{ch}.type", "==", k) for k in kinds])))

    def writes(i, a):
        ch = "chan_L1L2DTREQ"
        return And(And(Atom(f"{ch}.isFull", "==", 1), Atom(f"{ch}.id", "==", proc(i))),
                   And(Atom(f"{ch}.addr", "==", addr(a)), Atom(f"{ch}.type", "==", "WR")))

    match name, args:
        case "holds", (i, a):
            return holds(i, a)
        case "share", (i, j, a):
            return And(holds(i, a), holds(j, a))
        case "writes", (i, a):
            return writes(i, a)
        case "invalidated" | "coherence_delivery", (j, a):
            return invalidated(j, a)
        case "shared_and_write", (i, j, a):
            return And(And(holds(i, a), holds(j, a)), writes(i, a))
        case "pending_read", (i,):
            return Atom(f"pc[{proc(i)}].p.state", "==", "WAIT_RD")
        case "read_answered", (i,):
            return Atom(f"pc[{proc(i)}].p.state", "==", "IDLE")
    raise ValueError(f"unknown template {name}{args}")


def expand_templates(f: Formula, cfg) -> Formula:
    """Replace template nodes by their atom combinations for configuration ``cfg``."""
    match f:
        case Template(name, args):
            if cfg is None:
                raise ValueError(f"template {name} needs a protocol model")
            return _template(name, args, cfg)
        case Not(a):
            return Not(expand_templates(a, cfg))
        case And(l, r):
            return And(expand_templates(l, cfg), expand_templates(r, cfg))
        case Or(l, r):
            return Or(expand_templates(l, cfg), expand_templates(r, cfg))
        case Implies(l, r):
            return Implies(expand_templates(l, cfg), expand_templates(r, cfg))
        case Temporal(op, a):
            return Temporal(op, expand_templates(a, cfg))
        case Until(q, l, r):
            return Until(q, expand_templates(l, cfg), expand_templates(r, cfg))
    return f

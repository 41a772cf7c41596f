"""Integer/boolean expressions over variables and transition parameters.

Expressions are small immutable trees built with Python operators::

    (V("state") == 3) & (V("id") == P("id"))

``&``, ``|`` and ``~`` stand for boolean and/or/not, since Python's own
``and``/``or`` cannot be overloaded.  ``A("c_id", P("i"))`` is a cell of a
flattened array whose index is resolved when parameters are substituted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

__all__ = [
    "Expr", "V", "P", "A", "C", "TRUE", "FALSE",
    "all_of", "any_of", "ExprError", "cell_name",
]


class ExprError(ValueError):
    """Raised for ill-formed expressions (unbound parameter, bad array index)."""


def cell_name(array: str, index: int) -> str:
    return f"{array}[{index}]"


def _lift(x) -> "Expr":
    if isinstance(x, Expr):
        return x
    if isinstance(x, bool):
        return C(int(x))
    if isinstance(x, int):
        return C(int(x))
    raise TypeError(f"cannot use {x!r} in an expression")


class Expr:
    __slots__ = ()
    __hash__ = None  # type: ignore[assignment]

    def __eq__(self, other):  # type: ignore[override]
        return Bin("==", self, _lift(other))

    def __ne__(self, other):  # type: ignore[override]
        return Bin("!=", self, _lift(other))

    def __lt__(self, other):
        return Bin("<", self, _lift(other))

    def __le__(self, other):
        return Bin("<=", self, _lift(other))

    def __gt__(self, other):
        return Bin(">", self, _lift(other))

    def __ge__(self, other):
        return Bin(">=", self, _lift(other))

    def __add__(self, other):
        return Bin("+", self, _lift(other))

    def __radd__(self, other):
        return Bin("+", _lift(other), self)

    def __sub__(self, other):
        return Bin("-", self, _lift(other))

    def __rsub__(self, other):
        return Bin("-", _lift(other), self)

    def __and__(self, other):
        return Bin("&&", self, _lift(other))

    def __rand__(self, other):
        return Bin("&&", _lift(other), self)

    def __or__(self, other):
        return Bin("||", self, _lift(other))

    def __ror__(self, other):
        return Bin("||", _lift(other), self)

    def __invert__(self):
        return Not(self)

    def __bool__(self):
        raise TypeError("expressions have no truth value; use & | ~ instead of and/or/not")

    # overridden by subclasses
    def substitute(self, params: Mapping[str, int]) -> "Expr":
        raise NotImplementedError

    def evaluate(self, lookup: Callable[[str], int]) -> int:
        raise NotImplementedError

    def variables(self) -> set[str]:
        raise NotImplementedError


@dataclass(frozen=True, eq=False, slots=True)
class C(Expr):
    value: int

    def substitute(self, params):
        return self

    def evaluate(self, lookup):
        return self.value

    def variables(self):
        return set()

    def __str__(self):
        return str(self.value)


TRUE = C(1)
FALSE = C(0)


@dataclass(frozen=True, eq=False, slots=True)
class V(Expr):
    name: str

    def substitute(self, params):
        return self

    def evaluate(self, lookup):
        return lookup(self.name)

    def variables(self):
        return {self.name}

    def __str__(self):
        return self.name


@dataclass(frozen=True, eq=False, slots=True)
class P(Expr):
    name: str

    def substitute(self, params):
        try:
            return C(params[self.name])
        except KeyError:
            raise ExprError(f"unbound parameter ${self.name}") from None

    def evaluate(self, lookup):
        raise ExprError(f"parameter ${self.name} must be substituted before evaluation")

    def variables(self):
        return set()

    def __str__(self):
        return f"${self.name}"


@dataclass(frozen=True, eq=False, slots=True)
class A(Expr):
    """Array cell ``array[index]``; the index must be closed after substitution."""

    array: str
    index: Expr

    def __init__(self, array: str, index):
        object.__setattr__(self, "array", array)
        object.__setattr__(self, "index", _lift(index))

    def substitute(self, params):
        idx = self.index.substitute(params)
        if not isinstance(idx, C):
            idx = fold(idx)
        if not isinstance(idx, C):
            raise ExprError(f"array index of {self.array} is not closed: {idx}")
        return V(cell_name(self.array, idx.value))

    def evaluate(self, lookup):
        return lookup(cell_name(self.array, self.index.evaluate(lookup)))

    def variables(self):
        return {self.array + "[*]"}

    def __str__(self):
        return f"{self.array}[{self.index}]"


_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "==": lambda a, b: int(a == b),
    "!=": lambda a, b: int(a != b),
    "<": lambda a, b: int(a < b),
    "<=": lambda a, b: int(a <= b),
    ">": lambda a, b: int(a > b),
    ">=": lambda a, b: int(a >= b),
    "&&": lambda a, b: int(bool(a) and bool(b)),
    "||": lambda a, b: int(bool(a) or bool(b)),
}


@dataclass(frozen=True, eq=False, slots=True)
class Bin(Expr):
    op: str
    left: Expr
    right: Expr

    def substitute(self, params):
        return fold(Bin(self.op, self.left.substitute(params), self.right.substitute(params)))

    def evaluate(self, lookup):
        if self.op == "&&":
            return int(bool(self.left.evaluate(lookup)) and bool(self.right.evaluate(lookup)))
        if self.op == "||":
            return int(bool(self.left.evaluate(lookup)) or bool(self.right.evaluate(lookup)))
        return _ARITH[self.op](self.left.evaluate(lookup), self.right.evaluate(lookup))

    def variables(self):
        return self.left.variables() | self.right.variables()

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True, eq=False, slots=True)
class Not(Expr):
    arg: Expr

    def substitute(self, params):
        return fold(Not(self.arg.substitute(params)))

    def evaluate(self, lookup):
        return int(not self.arg.evaluate(lookup))

    def variables(self):
        return self.arg.variables()

    def __str__(self):
        return f"!{self.arg}"


def fold(e: Expr) -> Expr:
    """Constant-fold one level (children are assumed already folded)."""
    if isinstance(e, Not):
        if isinstance(e.arg, C):
            return C(int(not e.arg.value))
        return e
    if not isinstance(e, Bin):
        return e
    left, right = e.left, e.right
    if isinstance(left, C) and isinstance(right, C):
        return C(_ARITH[e.op](left.value, right.value))
    if e.op == "&&":
        for a, b in ((left, right), (right, left)):
            if isinstance(a, C):
                return b if a.value else FALSE
    if e.op == "||":
        for a, b in ((left, right), (right, left)):
            if isinstance(a, C):
                return TRUE if a.value else b
    return e


def all_of(*terms) -> Expr:
    out: Expr = TRUE
    for t in terms:
        out = fold(Bin("&&", out, _lift(t)))
    return out


def any_of(*terms) -> Expr:
    out: Expr = FALSE
    for t in terms:
        out = fold(Bin("||", out, _lift(t)))
    return out

"""Type declarations: leaf (GAL-style) types and composite types."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

from .expr import TRUE, Expr, V, _lift, cell_name

__all__ = [
    "VarDecl", "Assign", "Call", "TransitionDecl", "LeafType",
    "InstanceDecl", "SyncDecl", "CompositeType", "TypeDecl",
    "array_decls", "ModelError",
]


class ModelError(ValueError):
    """A model is ill-formed: unresolved reference, empty range, cycle, ..."""


@dataclass(frozen=True)
class VarDecl:
    name: str
    lo: int
    hi: int
    initial: int = 0

    def __post_init__(self):
        if not self.lo <= self.initial <= self.hi:
            raise ModelError(
                f"initial value {self.initial} of {self.name} outside [{self.lo}, {self.hi}]"
            )


def array_decls(name: str, size: int, lo: int, hi: int, initial: int = 0) -> list[VarDecl]:
    """One scalar declaration per cell: ``name[0] .. name[size-1]``."""
    return [VarDecl(cell_name(name, i), lo, hi, initial) for i in range(size)]


@dataclass(frozen=True)
class Assign:
    target: Expr  # V or A
    value: Expr

    def __init__(self, target, value):
        if isinstance(target, str):
            target = V(target)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "value", _lift(value))


@dataclass(frozen=True)
class Call:
    """Call ``target.label(args)``; ``target`` is ``"self"`` or a sub-instance name."""

    target: str
    label: str
    args: tuple = ()

    def __init__(self, target: str, label: str, args: Sequence = ()):
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "args", tuple(_lift(a) for a in args))


Statement = Union[Assign, Call]


def _ranges(params) -> tuple[tuple[str, range], ...]:
    out = []
    for name, rng in params:
        if not isinstance(rng, range):
            lo, hi = rng
            rng = range(lo, hi + 1)
        out.append((name, rng))
    return tuple(out)


@dataclass(frozen=True)
class TransitionDecl:
    name: str
    params: tuple = ()
    guard: Expr = TRUE
    label: str | None = None
    label_args: tuple = ()
    actions: tuple = ()

    def __init__(self, name, params=(), guard=TRUE, label=None, label_args=(), actions=()):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "params", _ranges(params))
        object.__setattr__(self, "guard", _lift(guard))
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "label_args", tuple(_lift(a) for a in label_args))
        object.__setattr__(self, "actions", tuple(actions))


@dataclass
class LeafType:
    name: str
    vars: list[VarDecl] = field(default_factory=list)
    transitions: list[TransitionDecl] = field(default_factory=list)

    def __post_init__(self):
        names = [v.name for v in self.vars]
        if len(set(names)) != len(names):
            raise ModelError(f"duplicate variable names in {self.name}")

    @property
    def labels(self) -> set[str]:
        return {t.label for t in self.transitions if t.label is not None}


@dataclass(frozen=True)
class InstanceDecl:
    name: str
    type_name: str
    # per-instance initial values overriding the type defaults
    init: tuple = ()

    def __init__(self, name, type_name, init=None):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "type_name", type_name)
        object.__setattr__(self, "init", tuple(sorted((init or {}).items())))


@dataclass(frozen=True)
class SyncDecl:
    name: str
    params: tuple = ()
    label: str | None = None
    label_args: tuple = ()
    calls: tuple = ()

    def __init__(self, name, params=(), label=None, label_args=(), calls=()):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "params", _ranges(params))
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "label_args", tuple(_lift(a) for a in label_args))
        object.__setattr__(self, "calls", tuple(calls))

    @property
    def guard(self) -> Expr:
        return TRUE

    @property
    def actions(self) -> tuple:
        return self.calls


@dataclass
class CompositeType:
    name: str
    instances: list[InstanceDecl] = field(default_factory=list)
    syncs: list[SyncDecl] = field(default_factory=list)

    def __post_init__(self):
        names = [i.name for i in self.instances]
        if len(set(names)) != len(names):
            raise ModelError(f"duplicate instance names in {self.name}")
        if "self" in names:
            raise ModelError("'self' is reserved")

    @property
    def labels(self) -> set[str]:
        return {s.label for s in self.syncs if s.label is not None}

    @property
    def transitions(self) -> list[SyncDecl]:
        return self.syncs


TypeDecl = Union[LeafType, CompositeType]

"""Grounding, flattening and compiled execution of guarded transition systems.

``ground_model`` turns a table of leaf/composite types into a
:class:`SystemModel`:

* the instance tree is flattened depth-first; every leaf variable gets one
  slot of the state vector (arrays are already one variable per cell);
* every transition and synchronization is grounded once per parameter
  valuation;
* every *unlabeled* grounded entry, at any depth of the tree, is a
  spontaneous event.  Labeled entries only run when called.  A call with
  several enabled callees branches: each resolution of every call in an
  entry is a separate alternative, and each alternative is compiled to a
  straight-line Python function ``state -> state | None``.

States are immutable ``bytes`` when every domain fits in 0..255, tuples
otherwise.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .decls import (
    Assign, Call, LeafType, ModelError, TypeDecl,
)
from .expr import Bin, C, Expr, Not, V

log = logging.getLogger(__name__)

__all__ = [
    "SystemModel", "Event", "GroundEntry", "InstanceNode",
    "ground_model", "initial_state", "fire", "successors",
    "GuardError", "DomainError",
]

MAX_CALL_DEPTH = 32


class GuardError(RuntimeError):
    """The event is not enabled in the given state."""


class DomainError(RuntimeError):
    """An assignment left a variable's declared range (a modeling bug)."""


@dataclass
class InstanceNode:
    path: str
    type: TypeDecl
    parent: "InstanceNode | None" = None
    children: dict[str, "InstanceNode"] = field(default_factory=dict)
    slots: dict[str, int] = field(default_factory=dict)
    # (label, args) -> grounded entries bearing that label
    label_index: dict[tuple, list["GroundEntry"]] = field(default_factory=dict)

    @property
    def is_leaf(self) -> bool:
        return isinstance(self.type, LeafType)

    def qualify(self, name: str) -> str:
        return f"{self.path}.{name}" if self.path else name

    def walk(self):
        yield self
        for child in self.children.values():
            yield from child.walk()


@dataclass
class GroundEntry:
    index: int
    node: InstanceNode
    name: str
    params: tuple  # ((name, value), ...)
    label: str | None
    label_args: tuple  # ints
    guard: Expr
    actions: tuple  # Assign with closed exprs, or (callee node, label, args)

    def describe(self) -> str:
        where = self.node.path or "<root>"
        ps = ",".join(f"{k}={v}" for k, v in self.params)
        s = f"{where}.{self.name}({ps})"
        if self.label is not None:
            s += f" label {self.label}({','.join(map(str, self.label_args))})"
        return s


@dataclass(frozen=True)
class Event:
    """A fired top-level entry together with the resolution of its calls."""

    index: int
    entry: str  # qualified name of the spontaneous entry
    params: tuple
    resolution: tuple  # grounded entry indices chosen for the calls, in order
    instances: tuple  # leaf instance paths touched, in execution order

    def __str__(self):
        ps = ",".join(f"{k}={v}" for k, v in self.params)
        return f"{self.entry}({ps})"


@dataclass
class _Alternative:
    entry: GroundEntry
    resolution: tuple
    steps: list  # ("g", node, expr) | ("a", node, varname, expr)
    touched: tuple


class SystemModel:
    """A grounded, flattened model; immutable once built."""

    def __init__(self, types: Mapping[str, TypeDecl], root: InstanceNode,
                 var_names: list[str], domains: list[tuple[int, int]],
                 initial: list[int], entries: list[GroundEntry],
                 alternatives: list[_Alternative]):
        self.types = dict(types)
        self.root = root
        self.var_names = var_names
        self.domains = domains
        self._initial = initial
        self.entries = entries
        self._alts = alternatives
        self.slot_of = {n: i for i, n in enumerate(var_names)}
        self.compact = all(0 <= lo and hi <= 255 for lo, hi in domains)
        self.pack = bytes if self.compact else tuple
        self.events = [
            Event(k, a.entry.node.qualify(a.entry.name), a.entry.params,
                  a.resolution, a.touched)
            for k, a in enumerate(alternatives)
        ]
        self._fns = _compile(self)
        self._build_dispatch()

    # -- state helpers -------------------------------------------------
    @property
    def nvars(self) -> int:
        return len(self.var_names)

    def initial_state(self):
        return self.pack(self._initial)

    def value(self, state, name: str) -> int:
        return state[self.slot_of[name]]

    def decode(self, state) -> dict[str, int]:
        return dict(zip(self.var_names, state))

    def format_state(self, state) -> str:
        return "\n".join(f"{n}={v}" for n, v in zip(self.var_names, state))

    def node(self, path: str) -> InstanceNode:
        for n in self.root.walk():
            if n.path == path:
                return n
        raise KeyError(path)

    # -- execution -----------------------------------------------------
    def _build_dispatch(self):
        # Each alternative is filed under one necessary ``slot == value``
        # condition, picked on the slot with the most distinct required
        # values; alternatives without such a condition are always tried.
        needs = [_necessary_equalities(self, a) for a in self._alts]
        spread: dict[int, set] = {}
        for eqs in needs:
            for slot, val in eqs:
                spread.setdefault(slot, set()).add(val)
        tables: dict[int, dict[int, list]] = {}
        free = []
        for k, eqs in enumerate(needs):
            pair = (k, self._fns[k])
            if not eqs:
                free.append(pair)
                continue
            slot, val = max(eqs, key=lambda sv: (len(spread[sv[0]]), -sv[0]))
            tables.setdefault(slot, {}).setdefault(val, []).append(pair)
        self._dispatch = sorted(tables.items())
        self._free = free

    def step(self, state) -> list[tuple[int, object]]:
        """All (event index, successor) pairs, sorted by event index."""
        out = []
        for slot, table in self._dispatch:
            cands = table.get(state[slot])
            if cands:
                for k, fn in cands:
                    nxt = fn(state)
                    if nxt is not None:
                        out.append((k, nxt))
        for k, fn in self._free:
            nxt = fn(state)
            if nxt is not None:
                out.append((k, nxt))
        out.sort(key=lambda p: p[0])
        return out

    def fire_index(self, state, k: int):
        nxt = self._fns[k](state)
        if nxt is None:
            raise GuardError(f"event {self.events[k]} is not enabled")
        return nxt

    def alternative_steps(self, k: int) -> list:
        return self._alts[k].steps

    def dump(self) -> str:
        """One line per grounded entry, in grounding order."""
        return "\n".join(e.describe() for e in self.entries)

    def __repr__(self):
        return (f"SystemModel(vars={self.nvars}, entries={len(self.entries)}, "
                f"events={len(self._alts)})")


# ---------------------------------------------------------------------------
# grounding

def _type_table(types) -> dict[str, TypeDecl]:
    if isinstance(types, Mapping):
        return dict(types)
    table = {}
    for t in types:
        if t.name in table:
            raise ModelError(f"duplicate type {t.name}")
        table[t.name] = t
    return table


def _flatten(table, type_name, path, parent, var_names, domains, initial,
             overrides, stack) -> InstanceNode:
    if type_name not in table:
        raise ModelError(f"unresolved type reference {type_name!r}")
    if type_name in stack:
        raise ModelError(f"cyclic instantiation through {type_name!r}")
    t = table[type_name]
    node = InstanceNode(path, t, parent)
    if isinstance(t, LeafType):
        known = {v.name for v in t.vars}
        for name in overrides:
            if name not in known:
                raise ModelError(f"override of unknown variable {name!r} in {path}")
        for v in t.vars:
            init = overrides.get(v.name, v.initial)
            if not v.lo <= init <= v.hi:
                raise ModelError(f"initial value {init} of {node.qualify(v.name)} out of range")
            node.slots[v.name] = len(var_names)
            var_names.append(node.qualify(v.name))
            domains.append((v.lo, v.hi))
            initial.append(init)
    else:
        for inst in t.instances:
            sub_path = f"{path}.{inst.name}" if path else inst.name
            node.children[inst.name] = _flatten(
                table, inst.type_name, sub_path, node, var_names, domains,
                initial, dict(inst.init), stack | {type_name})
    return node


def _valuations(params) -> Iterable[dict[str, int]]:
    for name, rng in params:
        if len(rng) == 0:
            raise ModelError(f"empty range for parameter ${name}")
    names = [n for n, _ in params]
    for combo in itertools.product(*(r for _, r in params)):
        yield dict(zip(names, combo))


def _close(e: Expr, vals) -> Expr:
    return e.substitute(vals)


def _args(exprs, vals, what) -> tuple:
    out = []
    for a in exprs:
        c = a.substitute(vals)
        if not isinstance(c, C):
            raise ModelError(f"{what}: argument {a} is not closed by parameters")
        out.append(c.value)
    return tuple(out)


def _ground_node(node: InstanceNode, entries: list[GroundEntry]):
    t = node.type
    for decl in t.transitions:
        for vals in _valuations(decl.params):
            what = f"{node.path or '<root>'}.{decl.name}"
            guard = _close(decl.guard, vals)
            if isinstance(guard, C) and not guard.value:
                continue  # statically disabled
            actions = []
            for st in decl.actions:
                if isinstance(st, Assign):
                    tgt = st.target.substitute(vals)
                    if not isinstance(tgt, V):
                        raise ModelError(f"{what}: bad assignment target")
                    if tgt.name not in node.slots:
                        raise ModelError(f"{what}: unknown variable {tgt.name!r}")
                    actions.append(Assign(tgt, _close(st.value, vals)))
                elif isinstance(st, Call):
                    if st.target == "self":
                        callee = node
                    elif st.target in node.children:
                        callee = node.children[st.target]
                    else:
                        raise ModelError(f"{what}: unknown call target {st.target!r}")
                    if st.label not in callee.type.labels:
                        raise ModelError(
                            f"{what}: label {st.label!r} not found on {callee.type.name}")
                    actions.append((callee, st.label, _args(st.args, vals, what)))
                else:
                    raise ModelError(f"{what}: unknown statement {st!r}")
            label_args = _args(decl.label_args, vals, what)
            entry = GroundEntry(len(entries), node, decl.name, tuple(vals.items()),
                                decl.label, label_args, guard, tuple(actions))
            for v in guard.variables():
                if v not in node.slots:
                    raise ModelError(f"{what}: unknown variable {v!r} in guard")
            entries.append(entry)
            if decl.label is not None:
                node.label_index.setdefault((decl.label, label_args), []).append(entry)


def _expand(entry: GroundEntry, depth: int = 0) -> list[tuple[tuple, list, tuple]]:
    """All call resolutions of ``entry`` as (resolution, steps, touched)."""
    if depth > MAX_CALL_DEPTH:
        raise ModelError(f"call depth exceeded at {entry.describe()} (recursive labels?)")
    node = entry.node
    head = [] if (isinstance(entry.guard, C) and entry.guard.value) else [("g", node, entry.guard)]
    touched0 = (node.path,) if node.is_leaf else ()
    partial = [((), head, touched0)]
    for act in entry.actions:
        if isinstance(act, Assign):
            partial = [(r, s + [("a", node, act.target.name, act.value)], tch)
                       for r, s, tch in partial]
            continue
        callee, label, args = act
        options = []
        for cand in callee.label_index.get((label, args), []):
            for r2, s2, t2 in _expand(cand, depth + 1):
                options.append(((cand.index,) + r2, s2, t2))
        partial = [(r + r2, s + s2, _merge(t, t2))
                   for r, s, t in partial for r2, s2, t2 in options]
        if not partial:
            break
    return partial


def _merge(a: tuple, b: tuple) -> tuple:
    return a + tuple(x for x in b if x not in a)


def ground_model(types, root_type: str) -> SystemModel:
    """Flatten and ground ``root_type`` (the ``main`` instance) from ``types``."""
    table = _type_table(types)
    var_names: list[str] = []
    domains: list[tuple[int, int]] = []
    initial: list[int] = []
    root = _flatten(table, root_type, "", None, var_names, domains, initial, {}, frozenset())
    entries: list[GroundEntry] = []
    for node in root.walk():
        _ground_node(node, entries)
    alts: list[_Alternative] = []
    for e in entries:
        if e.label is not None:
            continue
        for res, steps, touched in _expand(e):
            alts.append(_Alternative(e, res, steps, touched))
    log.debug("grounded %d entries, %d spontaneous alternatives", len(entries), len(alts))
    return SystemModel(table, root, var_names, domains, initial, entries, alts)


# ---------------------------------------------------------------------------
# compilation

_PYOP = {"&&": "and", "||": "or"}


def _py(e: Expr, node: InstanceNode, arr: str) -> str:
    if isinstance(e, C):
        return str(e.value)
    if isinstance(e, V):
        return f"{arr}[{node.slots[e.name]}]"
    if isinstance(e, Not):
        return f"(not {_py(e.arg, node, arr)})"
    if isinstance(e, Bin):
        op = _PYOP.get(e.op, e.op)
        return f"({_py(e.left, node, arr)} {op} {_py(e.right, node, arr)})"
    raise ModelError(f"cannot compile {e!r}")


def _compile(model: SystemModel) -> list:
    src = []
    for k, alt in enumerate(model._alts):
        lines = [f"def _f{k}(s):"]
        copied = False
        checks = {}
        for st in alt.steps:
            arr = "t" if copied else "s"
            if st[0] == "g":
                _, node, g = st
                lines.append(f"    if not {_py(g, node, arr)}: return None")
            else:
                _, node, name, val = st
                if not copied:
                    lines.append("    t = list(s)")
                    copied = True
                slot = node.slots[name]
                lo, hi = model.domains[slot]
                lines.append(f"    t[{slot}] = {_py(val, node, 't')}")
                if isinstance(val, C) and lo <= val.value <= hi:
                    checks.pop(slot, None)
                else:
                    checks[slot] = (lo, hi)
        # range checks only once every guard passed: a disabled alternative never raises
        for slot, (lo, hi) in checks.items():
            lines.append(f"    if not {lo} <= t[{slot}] <= {hi}: _dom({k}, {slot}, t[{slot}])")
        lines.append("    return pack(t)" if copied else "    return s")
        src.append("\n".join(lines))
    names = model.var_names
    domains = model.domains
    events = model.events

    def _dom(k, slot, value):
        lo, hi = domains[slot]
        raise DomainError(f"{events[k]} assigns {names[slot]}={value} outside [{lo}, {hi}]")

    ns = {"pack": model.pack, "_dom": _dom}
    if src:
        exec(compile("\n\n".join(src), "<grounded-model>", "exec"), ns)
    return [ns[f"_f{k}"] for k in range(len(src))]


def _conjuncts(e: Expr):
    if isinstance(e, Bin) and e.op == "&&":
        yield from _conjuncts(e.left)
        yield from _conjuncts(e.right)
    else:
        yield e


def _necessary_equalities(model: SystemModel, alt: _Alternative) -> list[tuple[int, int]]:
    assigned: set[int] = set()
    out = []
    for st in alt.steps:
        if st[0] == "a":
            assigned.add(st[1].slots[st[2]])
            continue
        node, g = st[1], st[2]
        for c in _conjuncts(g):
            if isinstance(c, Bin) and c.op == "==":
                l, r = c.left, c.right
                if isinstance(r, V) and isinstance(l, C):
                    l, r = r, l
                if isinstance(l, V) and isinstance(r, C):
                    slot = node.slots[l.name]
                    if slot not in assigned:
                        out.append((slot, r.value))
    return out


# ---------------------------------------------------------------------------
# functional API

def initial_state(model: SystemModel):
    return model.initial_state()


def fire(model: SystemModel, state, event: Event | int):
    """Execute one event; raises GuardError when it is not enabled."""
    k = event if isinstance(event, int) else event.index
    return model.fire_index(state, k)


def successors(model: SystemModel, state) -> list[tuple[Event, object]]:
    """Every (event, successor) pair; an empty list means deadlock."""
    return [(model.events[k], nxt) for k, nxt in model.step(state)]

"""CTL model checking over explored state graphs (fairness-free).

States without successors get an implicit self-loop so that every path is
infinite; deadlock *detection* still relies on the explorer's out-degree test.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from ..explorer import StateGraph, Trace, trace_to
from .formula import (
    And, Atom, Const, Derived, Formula, Implies, Not, Or, Template, Temporal, Until,
    expand_templates, is_state_formula, parse_formula,
)

__all__ = [
    "Kripke", "UnsoundOnPartialGraph", "AtomError", "CTLResult", "InvariantResult",
    "eval_ctl", "state_labels", "check_invariant_everywhere", "kripke_of", "state_matrix",
]


class UnsoundOnPartialGraph(RuntimeError):
    """A verdict was requested on a capped (partial) graph."""


class AtomError(ValueError):
    """An atom does not resolve against the model."""


_CMP = {
    "==": np.equal, "!=": np.not_equal, "<": np.less,
    "<=": np.less_equal, ">": np.greater, ">=": np.greater_equal,
}


class Kripke:
    """A finite transition structure with boolean state labels.

    ``labels`` maps a proposition name to a per-state integer array; the
    atom ``p`` (or ``p == 1``) reads it.  ``atom_fn`` may instead label atoms
    and derived propositions directly.
    """

    def __init__(self, n: int, src, dst, labels: dict | None = None, initial: int = 0,
                 atom_fn=None):
        self.n = n
        self.initial = initial
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        outdeg = np.bincount(src, minlength=n) if len(src) else np.zeros(n, dtype=np.int64)
        sinks = np.flatnonzero(outdeg == 0)
        self.sinks = sinks
        src = np.concatenate([src, sinks])
        dst = np.concatenate([dst, sinks])
        m = sparse.csr_matrix((np.ones(len(src), dtype=np.int32), (src, dst)), shape=(n, n))
        m.sum_duplicates()
        m.data[:] = 1
        self.M = m
        self.MT = m.T.tocsr()
        self.labels = {k: np.asarray(v) for k, v in (labels or {}).items()}
        self.atom_fn = atom_fn
        self._cache: dict[Formula, np.ndarray] = {}

    # -- primitive operators

    def ex(self, v: np.ndarray) -> np.ndarray:
        return (self.M @ v.astype(np.int32)) > 0

    def eu(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        z = q.copy()
        frontier = q
        while True:
            pre = (self.M @ frontier.astype(np.int32)) > 0
            new = pre & p & ~z
            if not new.any():
                return z
            z |= new
            frontier = new

    def eg(self, p: np.ndarray) -> np.ndarray:
        # states of p that reach, inside p, a cycle lying entirely in p
        idx = np.flatnonzero(p)
        if len(idx) == 0:
            return np.zeros(self.n, dtype=bool)
        sub = self.M[idx][:, idx]
        ncomp, comp = connected_components(sub, directed=True, connection="strong")
        size = np.bincount(comp, minlength=ncomp)
        selfloop = sub.diagonal() > 0
        core_comp = size > 1
        core_comp[comp[selfloop]] = True
        core = np.zeros(self.n, dtype=bool)
        core[idx[core_comp[comp]]] = True
        return self.eu(p, core)

    # -- evaluation

    def atom(self, f: Formula) -> np.ndarray:
        if self.atom_fn is not None:
            return self.atom_fn(f)
        if isinstance(f, Atom) and f.path in self.labels and isinstance(f.value, int):
            return _CMP[f.op](self.labels[f.path], f.value)
        raise AtomError(f"cannot resolve atom {f}")

    def sat(self, f: Formula) -> np.ndarray:
        hit = self._cache.get(f)
        if hit is not None:
            return hit
        r = self._sat(f)
        self._cache[f] = r
        return r

    def _sat(self, f: Formula) -> np.ndarray:
        n = self.n
        match f:
            case Const(v):
                return np.full(n, bool(v))
            case Atom() | Derived() | Template():
                return np.asarray(self.atom(f), dtype=bool)
            case Not(a):
                return ~self.sat(a)
            case And(l, r):
                return self.sat(l) & self.sat(r)
            case Or(l, r):
                return self.sat(l) | self.sat(r)
            case Implies(l, r):
                return ~self.sat(l) | self.sat(r)
            case Temporal("EX", a):
                return self.ex(self.sat(a))
            case Temporal("AX", a):
                return ~self.ex(~self.sat(a))
            case Temporal("EF", a):
                return self.eu(np.ones(n, dtype=bool), self.sat(a))
            case Temporal("AG", a):
                return ~self.eu(np.ones(n, dtype=bool), ~self.sat(a))
            case Temporal("EG", a):
                return self.eg(self.sat(a))
            case Temporal("AF", a):
                return ~self.eg(~self.sat(a))
            case Until("E", l, r):
                return self.eu(self.sat(l), self.sat(r))
            case Until("A", l, r):
                p, q = self.sat(l), self.sat(r)
                return ~(self.eu(~q, ~p & ~q) | self.eg(~q))
        raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# protocol graphs


def state_matrix(graph: StateGraph) -> np.ndarray:
    """All states as an (n_states, n_vars) integer matrix (cached on the graph)."""
    mat = getattr(graph, "_matrix", None)
    if mat is None or mat.shape[0] != graph.n_states:
        nv = graph.model.nvars
        if graph.states and isinstance(graph.states[0], bytes):
            mat = np.frombuffer(b"".join(graph.states), dtype=np.uint8).reshape(-1, nv)
        else:
            mat = np.array(graph.states, dtype=np.int64).reshape(-1, nv)
        graph._matrix = mat
    return mat


def _location_enum(model, path: str):
    from ..dhccp.automata import L1Loc, L2Loc, ProcLoc
    from ..dhccp.messages import Msg

    inst, _, var = path.rpartition(".")
    if var == "type" and inst:
        return Msg
    if var == "state" and inst:
        try:
            tname = model.node(inst).type.name
        except (KeyError, ValueError):
            return None
        return {"Processor": ProcLoc, "CacheL1": L1Loc, "CacheL2": L2Loc}.get(tname)
    return None


def _literal(model, path: str, value) -> int:
    if isinstance(value, int):
        return value
    enum = _location_enum(model, path)
    if enum is not None:
        for cand in (value, f"L1_{value}", f"L2_{value}"):
            if cand in enum.__members__:
                return int(enum[cand])
    raise AtomError(f"unknown symbol {value!r} for {path}")


def state_labels(graph: StateGraph):
    """Atom labelling function for protocol (or plain kernel) graphs."""
    model = graph.model
    mat = state_matrix(graph)
    n = graph.n_states
    layout = getattr(model, "layout", None)

    def col(slot):
        return mat[:, slot].astype(np.int64)

    def fn(f: Formula) -> np.ndarray:
        if isinstance(f, Atom):
            slot = model.slot_of.get(f.path)
            if slot is None:
                raise AtomError(f"no variable {f.path!r} in the model")
            return _CMP[f.op](col(slot), _literal(model, f.path, f.value))
        if isinstance(f, Derived):
            if f.name == "deadlock":
                out = np.zeros(n, dtype=bool)
                out[list(graph.deadlocks)] = True
                return out
            if layout is None:
                raise AtomError(f"{f.name} needs a protocol model")
            if f.name == "quiescent":
                return _quiescent(mat, layout)
            if f.name == "census_ok":
                (a,) = f.args
                if not 0 <= a < layout.cfg.nb_l2:
                    raise AtomError(f"census_ok({a}): address out of range")
                return col(layout.l2_ncopies[a]) == _census(mat, layout, a)
        raise AtomError(f"cannot resolve {f}")

    return fn


def _quiescent(mat, lay) -> np.ndarray:
    ok = np.ones(mat.shape[0], dtype=bool)
    for k in lay._full:
        ok &= mat[:, k] == 0
    for k in lay.proc_state:
        ok &= mat[:, k] == 0
    stable1 = np.array(sorted(lay._l1_stable))
    stable2 = np.array(sorted(lay._l2_stable))
    for k in lay.l1_state:
        ok &= np.isin(mat[:, k], stable1)
    for k in lay.l2_state:
        ok &= np.isin(mat[:, k], stable2)
    return ok


def _census(mat, lay, a: int) -> np.ndarray:
    valid = np.array(sorted(lay._l1_valid))
    total = np.zeros(mat.shape[0], dtype=np.int64)
    for st, va in zip(lay.l1_state, lay.l1_vaddr):
        total += np.isin(mat[:, st], valid) & (mat[:, va] == a)
    return total


def kripke_of(graph: StateGraph) -> Kripke:
    k = getattr(graph, "_kripke", None)
    if k is None:
        src, dst, _ = graph.edge_arrays()
        k = Kripke(graph.n_states, src, dst, initial=graph.initial, atom_fn=state_labels(graph))
        graph._kripke = k
    return k


def _check_complete(graph: StateGraph):
    if graph.capped:
        raise UnsoundOnPartialGraph(
            f"graph is capped ({graph.cap_reason}); verdicts would be unsound on a partial graph")


def _prepare(graph: StateGraph, formula) -> Formula:
    f = parse_formula(formula) if isinstance(formula, str) else formula
    return expand_templates(f, getattr(graph.model, "config", None))


@dataclass
class CTLResult:
    formula: Formula
    sat: np.ndarray
    holds: bool
    counterexample: Trace | None = None

    @property
    def count(self) -> int:
        return int(self.sat.sum())

    @property
    def states(self) -> set[int]:
        return set(np.flatnonzero(self.sat).tolist())


def eval_ctl(graph: StateGraph | Kripke, formula, *, counterexample: bool = True) -> CTLResult:
    """Satisfying set of ``formula`` and its verdict at the initial state.

    For a failing top-level ``AG phi`` the counterexample is a shortest trace
    to a reachable state violating ``phi``.
    """
    if isinstance(graph, Kripke):
        f = parse_formula(formula) if isinstance(formula, str) else formula
        sat = graph.sat(f)
        return CTLResult(f, sat, bool(sat[graph.initial]))
    _check_complete(graph)
    f = _prepare(graph, formula)
    k = kripke_of(graph)
    sat = k.sat(f)
    res = CTLResult(f, sat, bool(sat[graph.initial]))
    if not res.holds and counterexample and isinstance(f, Temporal) and f.op == "AG":
        bad = ~k.sat(f.arg)
        res.counterexample = _trace_to_first(graph, bad)
    return res


def _trace_to_first(graph: StateGraph, bad: np.ndarray) -> Trace | None:
    if bad[graph.initial]:
        return trace_to(graph, graph.initial)
    seen = {graph.initial}
    q = deque([graph.initial])
    while q:
        i = q.popleft()
        for _, j in graph.successors(i):
            if j in seen:
                continue
            if bad[j]:
                return trace_to(graph, j)
            seen.add(j)
            q.append(j)
    return None


@dataclass
class InvariantResult:
    formula: Formula
    holds: bool
    violations: int
    counterexample: Trace | None


def check_invariant_everywhere(graph: StateGraph, formula) -> InvariantResult:
    """``AG phi`` for a state formula ``phi``, with a shortest violating trace."""
    _check_complete(graph)
    f = _prepare(graph, formula)
    if not is_state_formula(f):
        raise ValueError(f"{f} is not a state formula")
    ok = kripke_of(graph).sat(f)
    bad = ~ok
    nbad = int(bad.sum())
    if nbad == 0:
        return InvariantResult(f, True, 0, None)
    return InvariantResult(f, False, nbad, _trace_to_first(graph, bad))

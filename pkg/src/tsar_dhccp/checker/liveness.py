"""Response liveness ``AG(req -> AF resp)`` restricted to weakly fair paths.

A path is weakly fair when no component stays enabled forever without
firing.  On a finite graph a counterexample is a lasso: a stem to a pending
request followed by a cycle avoiding ``resp`` on which every component either
fires or is disabled at some state.  Taking a whole strongly connected
component maximizes both, so an SCC of the ``!resp`` subgraph contains a
fair cycle iff it satisfies the condition as a whole.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from ..explorer import StateGraph, Trace, TraceStep, trace_to
from .ctl import _check_complete, _prepare, kripke_of
from .formula import is_state_formula

__all__ = [
    "FairnessSpec", "Lasso", "LivenessResult", "check_response_liveness", "event_owner",
    "verify_lasso",
]


def event_owner(model, k: int) -> str:
    """First non-channel instance touched by event ``k``."""
    insts = model.events[k].instances
    for path in insts:
        if not path.rsplit(".", 1)[-1].startswith("chan_"):
            return path
    return insts[0] if insts else ""


@dataclass
class FairnessSpec:
    """Weak-fairness sets: component name -> indices of the events it owns."""

    sets: dict[str, frozenset[int]] = field(default_factory=dict)

    @classmethod
    def per_component(cls, model) -> "FairnessSpec":
        groups: dict[str, set[int]] = {}
        for k in range(len(model.events)):
            groups.setdefault(event_owner(model, k), set()).add(k)
        return cls({c: frozenset(v) for c, v in groups.items()})

    @classmethod
    def none(cls) -> "FairnessSpec":
        return cls({})

    def owner_array(self, n_events: int) -> tuple[list[str], np.ndarray]:
        names = sorted(self.sets)
        owner = np.full(n_events, -1, dtype=np.int64)
        for c, name in enumerate(names):
            for k in self.sets[name]:
                if owner[k] != -1:
                    raise ValueError(f"event {k} belongs to two fairness sets")
                owner[k] = c
        return names, owner

    def __bool__(self):
        return bool(self.sets)


@dataclass
class Lasso:
    stem: Trace  # initial state -> first state of the cycle
    cycle: list[TraceStep]  # returns to stem.final

    def __len__(self):
        return len(self.stem) + len(self.cycle)


@dataclass
class LivenessResult:
    holds: bool
    lasso: Lasso | None = None
    pending_states: int = 0


def check_response_liveness(graph: StateGraph, req, resp, fairness: FairnessSpec) -> LivenessResult:
    """Look for a reachable weakly fair lasso where ``req`` is never answered."""
    _check_complete(graph)
    k = kripke_of(graph)
    req_f, resp_f = _prepare(graph, req), _prepare(graph, resp)
    if not (is_state_formula(req_f) and is_state_formula(resp_f)):
        raise ValueError("req and resp must be state formulas")
    req_v, resp_v = k.sat(req_f), k.sat(resp_f)
    n = graph.n_states
    src, dst, ev = graph.edge_arrays()
    names, owner = fairness.owner_array(len(graph.model.events))
    ncomp = len(names)

    live = ~resp_v
    pending = req_v & live
    # states reachable from a pending request without meeting resp
    keep = live[src] & live[dst]
    sub = sparse.csr_matrix((np.ones(int(keep.sum()), dtype=np.int8), (src[keep], dst[keep])), shape=(n, n))
    reach = _forward(sub, pending)
    if not reach.any():
        return LivenessResult(True, None, int(pending.sum()))

    ncc, cc = connected_components(sub, directed=True, connection="strong")
    size = np.bincount(cc, minlength=ncc)
    dead = np.zeros(n, dtype=bool)
    dead[list(graph.deadlocks)] = True

    # per SCC: components firing inside it, components disabled somewhere in it
    inner = keep & (cc[src] == cc[dst])
    fires = np.zeros((ncc, max(ncomp, 1)), dtype=bool)
    e_own = owner[ev[inner]]
    good = e_own >= 0
    fires[cc[src[inner]][good], e_own[good]] = True
    enabled_any = np.zeros((n, max(ncomp, 1)), dtype=bool)
    all_own = owner[ev]
    g2 = all_own >= 0
    enabled_any[src[g2], all_own[g2]] = True
    disabled_some = np.zeros((ncc, max(ncomp, 1)), dtype=bool)
    for c in range(ncomp):
        states = np.flatnonzero(live & ~enabled_any[:, c])
        disabled_some[cc[states], c] = True

    has_cycle = (size > 1) | np.isin(np.arange(ncc), cc[dead & live])
    selfloop = src[keep] == dst[keep]
    has_cycle[cc[src[keep][selfloop]]] = True
    fair = has_cycle & (fires | disabled_some).all(axis=1) if ncomp else has_cycle
    candidates = fair & np.isin(np.arange(ncc), cc[reach])
    if not candidates.any():
        return LivenessResult(True, None, int(pending.sum()))

    lasso = _build_lasso(graph, pending, cc, candidates, names, owner, enabled_any, live, dead)
    return LivenessResult(False, lasso, int(pending.sum()))


def _forward(sub, start: np.ndarray) -> np.ndarray:
    seen = start.copy()
    frontier = start
    subT = sub.T.tocsr()
    while True:
        nxt = (subT @ frontier.astype(np.int8)) > 0
        new = nxt & ~seen
        if not new.any():
            return seen
        seen |= new
        frontier = new


def _bfs_path(graph: StateGraph, starts, goal, allowed) -> list[int] | None:
    """Shortest state path from any start to a goal state, inside ``allowed``."""
    parent = {s: -1 for s in starts}
    q = deque(starts)
    while q:
        i = q.popleft()
        if goal(i):
            path = [i]
            while parent[path[-1]] != -1:
                path.append(parent[path[-1]])
            return path[::-1]
        for _, j in graph.successors(i):
            if j not in parent and allowed(j):
                parent[j] = i
                q.append(j)
    return None


def _edge_path(graph: StateGraph, path: list[int]) -> list[TraceStep]:
    steps = []
    for a, b in zip(path, path[1:]):
        kk = next(k for k, j in graph.successors(a) if j == b)
        steps.append(TraceStep(graph.model.events[kk], graph.states[b]))
    return steps


def _steps_to(graph, start, goal, inside) -> list[tuple[int, int]] | None:
    """Shortest (event, state) steps from ``start`` to a goal state within ``inside``."""
    parent = {start: None}
    q = deque([start])
    while q:
        i = q.popleft()
        if goal(i):
            out = []
            while parent[i] is not None:
                prev, k = parent[i]
                out.append((k, i))
                i = prev
            return out[::-1]
        for k, j in graph.successors(i):
            if j not in parent and inside(j):
                parent[j] = (i, k)
                q.append(j)
    return None


def _build_lasso(graph, pending, cc, candidates, names, owner, enabled_any, live, dead) -> Lasso:
    tset = set(np.flatnonzero(candidates[cc] & live).tolist())
    starts = sorted(np.flatnonzero(pending).tolist())
    path = _bfs_path(graph, starts, lambda i: i in tset, lambda j: bool(live[j]))
    entry = path[-1]
    stem = trace_to(graph, path[0])
    stem.steps += _edge_path(graph, path)
    if dead[entry]:
        # pending forever in a deadlock; the implicit self-loop is the cycle
        return Lasso(stem, [])

    scc = cc[entry]
    inside = lambda j: cc[j] == scc  # noqa: E731
    steps: list[tuple[int, int]] = []

    def covered(c):
        if not enabled_any[entry, c] or any(not enabled_any[j, c] for _, j in steps):
            return True
        return any(owner[k] == c for k, _ in steps)

    def witness(c):
        def goal(i):
            if not enabled_any[i, c]:
                return True
            return any(owner[k] == c and inside(j) for k, j in graph.successors(i))
        return goal

    cur = entry
    for c in range(len(names)):
        if covered(c):
            continue
        seg = _steps_to(graph, cur, witness(c), inside)
        steps += seg
        if seg:
            cur = seg[-1][1]
        if enabled_any[cur, c]:
            k, j = next((k, j) for k, j in graph.successors(cur) if owner[k] == c and inside(j))
            steps.append((k, j))
            cur = j
    if steps and cur != entry:
        steps += _steps_to(graph, cur, lambda i: i == entry, inside)
    elif not steps:
        k, j = next((k, j) for k, j in graph.successors(entry) if inside(j))
        steps = [(k, j)] + _steps_to(graph, j, lambda i: i == entry, inside)
    ev = graph.model.events
    return Lasso(stem, [TraceStep(ev[k], graph.states[j]) for k, j in steps])


def verify_lasso(graph: StateGraph, lasso: Lasso, req, resp, fairness: FairnessSpec) -> bool:
    """Independent replay check of a counterexample lasso."""
    model = graph.model
    if not lasso.stem.replay():
        return False
    k = kripke_of(graph)
    req_v, resp_v = k.sat(_prepare(graph, req)), k.sat(_prepare(graph, resp))
    idx = [graph.index_of(s) for s in lasso.stem.states]
    # a pending request on the stem that is never answered afterwards
    last_resp = max((n for n, i in enumerate(idx) if resp_v[i]), default=-1)
    if not any(req_v[i] for i in idx[last_resp + 1:]):
        return False
    cur = lasso.stem.final
    cyc = [graph.index_of(cur)]
    for st in lasso.cycle:
        cur = model.fire_index(cur, st.event.index)
        if cur != st.state:
            return False
        cyc.append(graph.index_of(cur))
    if cyc[-1] != cyc[0]:
        return False
    if any(resp_v[i] for i in cyc):
        return False
    names, owner = fairness.owner_array(len(model.events))
    fired = {owner[st.event.index] for st in lasso.cycle}
    for c in range(len(names)):
        if c in fired:
            continue
        if all(any(owner[e] == c for e, _ in graph.successors(i)) for i in cyc):
            return False
    return True

"""Exhaustive explicit-state exploration of a grounded model.

The graph keeps every reached state verbatim (no lossy hashing) and stores
edges in flat integer arrays, so a few million edges fit comfortably.
"""

from __future__ import annotations

import resource
import sys
import time
import warnings
from array import array
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator

from .kernel import Event, GuardError, SystemModel, fire

__all__ = [
    "ExploreOptions", "ExploreStats", "StateGraph", "Trace", "TraceStep", "CappedWarning",
    "explore", "find_deadlocks", "trace_to", "report_header", "report_row", "adjacency_tsv",
]

DEFAULT_MAX_STATES = 10**8


class CappedWarning(UserWarning):
    """A verdict was requested on a partial graph."""


@dataclass
class ExploreOptions:
    max_states: int = DEFAULT_MAX_STATES
    max_seconds: float | None = None
    search_order: str = "bfs"

    def __post_init__(self):
        if self.max_states < 1:
            raise ValueError("max_states must be positive")
        if self.max_seconds is not None and self.max_seconds <= 0:
            raise ValueError("max_seconds must be positive")
        if self.search_order not in ("bfs", "dfs"):
            raise ValueError(f"unknown search order {self.search_order!r}")


@dataclass
class ExploreStats:
    states: int = 0
    edges: int = 0
    time_s: float = 0.0
    mem_mb: float = 0.0


def _peak_rss_mb() -> float:
    rss = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    # bytes on macOS, KiB elsewhere
    return rss / (1024 * 1024) if sys.platform == "darwin" else rss / 1024


class StateGraph:
    """Reachable states (dense indices, 0 = initial) and labelled edges."""

    def __init__(self, model: SystemModel):
        self.model = model
        self.states: list = []
        self.index: dict = {}
        # edges of state i: dst[off[i]:off[i]+cnt[i]], same slice in ev
        self.off = array("q")
        self.cnt = array("l")
        self.dst = array("l")
        self.ev = array("l")
        self.initial = 0
        self.deadlocks: set[int] = set()
        self.capped = False
        self.cap_reason = ""
        self.stats = ExploreStats()
        self._preds = None

    def _add(self, state) -> int:
        i = len(self.states)
        self.states.append(state)
        self.index[state] = i
        self.off.append(-1)
        self.cnt.append(0)
        return i

    def __len__(self):
        return len(self.states)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_edges(self) -> int:
        return len(self.dst)

    def state(self, i: int):
        return self.states[i]

    def index_of(self, state) -> int:
        return self.index[state]

    def expanded(self, i: int) -> bool:
        return self.off[i] >= 0

    def successors(self, i: int) -> list[tuple[int, int]]:
        """(event index, successor index) pairs in event order."""
        o = self.off[i]
        if o < 0:
            return []
        n = self.cnt[i]
        return list(zip(self.ev[o:o + n], self.dst[o:o + n]))

    def edges(self) -> Iterator[tuple[int, int, int]]:
        for i in range(len(self.states)):
            o = self.off[i]
            for j in range(o, o + self.cnt[i]) if o >= 0 else ():
                yield i, self.ev[j], self.dst[j]

    def predecessors(self) -> list[list[int]]:
        if self._preds is None:
            preds: list[list[int]] = [[] for _ in self.states]
            for s, _, d in self.edges():
                preds[d].append(s)
            self._preds = preds
        return self._preds

    def edge_arrays(self):
        """(src, dst, event) as parallel numpy arrays in storage order."""
        import numpy as np

        cnt = np.frombuffer(self.cnt, dtype=self.cnt.typecode).astype(np.int64)
        off = np.frombuffer(self.off, dtype=self.off.typecode)
        done = np.flatnonzero(off >= 0)
        order = done[np.argsort(off[done], kind="stable")]
        src = np.repeat(order, cnt[order])
        dst = np.frombuffer(self.dst, dtype=self.dst.typecode).astype(np.int64)
        ev = np.frombuffer(self.ev, dtype=self.ev.typecode).astype(np.int64)
        return src, dst, ev

    def __repr__(self):
        cap = ", capped" if self.capped else ""
        return f"StateGraph(states={self.n_states}, edges={self.n_edges}, deadlocks={len(self.deadlocks)}{cap})"


def explore(model: SystemModel, options: ExploreOptions | None = None, **kw) -> StateGraph:
    """Build the reachable state graph; stops with ``capped`` set on a limit."""
    opts = options or ExploreOptions(**kw)
    if options is not None and kw:
        raise TypeError("pass either options or keyword limits, not both")
    t0 = time.perf_counter()
    g = StateGraph(model)
    g._add(model.initial_state())
    step = model.step
    index = g.index
    dst, ev, off, cnt = g.dst, g.ev, g.off, g.cnt
    bfs = opts.search_order == "bfs"
    frontier: deque[int] = deque([0])
    pop = frontier.popleft if bfs else frontier.pop
    deadline = None if opts.max_seconds is None else t0 + opts.max_seconds
    max_states = opts.max_states
    n_done = 0
    while frontier:
        if deadline is not None and (n_done & 1023) == 0 and time.perf_counter() > deadline:
            g.capped, g.cap_reason = True, f"max_seconds={opts.max_seconds}"
            break
        i = pop()
        if off[i] >= 0:
            continue
        n_done += 1
        succ = step(g.states[i])
        off[i] = len(dst)
        n = 0
        for k, nxt in succ:
            j = index.get(nxt)
            if j is None:
                if len(g.states) >= max_states:
                    g.capped, g.cap_reason = True, f"max_states={max_states}"
                    continue
                j = g._add(nxt)
                frontier.append(j)
            dst.append(j)
            ev.append(k)
            n += 1
        cnt[i] = n
        if not succ:
            g.deadlocks.add(i)
        if g.capped:
            break
    g.stats = ExploreStats(len(g.states), len(dst), time.perf_counter() - t0, _peak_rss_mb())
    return g


def find_deadlocks(graph: StateGraph) -> set[int]:
    """States with no outgoing edge; only a sound verdict on an uncapped graph."""
    if graph.capped:
        warnings.warn(f"graph is capped ({graph.cap_reason}); deadlock absence is not established",
                      CappedWarning, stacklevel=2)
    return set(graph.deadlocks)


# ---------------------------------------------------------------------------
# traces


@dataclass(frozen=True)
class TraceStep:
    event: Event
    state: object  # state reached by firing ``event``


@dataclass
class Trace:
    model: SystemModel
    initial: object
    steps: list[TraceStep] = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    @property
    def states(self) -> list:
        return [self.initial] + [s.state for s in self.steps]

    @property
    def events(self) -> list[Event]:
        return [s.event for s in self.steps]

    @property
    def final(self):
        return self.steps[-1].state if self.steps else self.initial

    def replay(self) -> bool:
        """True iff firing the events from the initial state reproduces every state."""
        if self.initial != self.model.initial_state():
            return False
        cur = self.initial
        for st in self.steps:
            try:
                cur = fire(self.model, cur, st.event)
            except GuardError:
                return False
            if cur != st.state:
                return False
        return True

    def __str__(self):
        lines = [f"init: {self.model.format_state(self.initial)}"]
        for n, st in enumerate(self.steps, 1):
            lines.append(f"{n}: {st.event}")
        return "\n".join(lines)


def _bfs_parents(graph: StateGraph, target: int) -> dict[int, tuple[int, int]]:
    parent: dict[int, tuple[int, int]] = {graph.initial: (-1, -1)}
    q = deque([graph.initial])
    while q and target not in parent:
        i = q.popleft()
        for k, j in graph.successors(i):
            if j not in parent:
                parent[j] = (i, k)
                q.append(j)
    return parent


def trace_to(graph: StateGraph, target: int) -> Trace:
    """A shortest trace from the initial state to ``target``."""
    if not 0 <= target < graph.n_states:
        raise KeyError(f"state {target} is not in the graph")
    parent = _bfs_parents(graph, target)
    if target not in parent:
        raise KeyError(f"state {target} is not reachable through stored edges")
    chain = []
    j = target
    while j != graph.initial:
        i, k = parent[j]
        chain.append(TraceStep(graph.model.events[k], graph.states[j]))
        j = i
    chain.reverse()
    return Trace(graph.model, graph.states[graph.initial], chain)


def trace_along(graph: StateGraph, path: list[int]) -> Trace:
    """Trace through the given consecutive state indices (path[0] must be initial)."""
    if not path or path[0] != graph.initial:
        raise ValueError("path must start at the initial state")
    steps = []
    for a, b in zip(path, path[1:]):
        k = next((k for k, j in graph.successors(a) if j == b), None)
        if k is None:
            raise ValueError(f"no edge {a} -> {b}")
        steps.append(TraceStep(graph.model.events[k], graph.states[b]))
    return Trace(graph.model, graph.states[graph.initial], steps)


# ---------------------------------------------------------------------------
# reports

REPORT_COLUMNS = ("nb_proc", "nb_l2", "cache_th", "states", "edges", "deadlocks", "time_s", "mem_mb")


def report_header() -> str:
    return "\t".join(REPORT_COLUMNS)


def report_row(graph: StateGraph, key: tuple[int, int, int] | None = None) -> str:
    if key is None:
        cfg = getattr(graph.model, "config", None)
        key = cfg.key if cfg is not None else (0, 0, 0)
    s = graph.stats
    return "\t".join(map(str, (*key, s.states, s.edges, len(graph.deadlocks),
                               f"{s.time_s:.2f}", f"{s.mem_mb:.1f}")))


def adjacency_tsv(graph: StateGraph) -> Iterator[str]:
    """Lines ``src<TAB>event<TAB>dst``."""
    events = graph.model.events
    for s, k, d in graph.edges():
        yield f"{s}\t{events[k]}\t{d}\n"

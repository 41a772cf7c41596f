"""Parametric assembly of a full DHCCP configuration, plus state observers."""

from __future__ import annotations

from dataclasses import dataclass

from ..kernel import Call, CompositeType, InstanceDecl, P, SyncDecl, SystemModel, ground_model
from . import automata as au
from .automata import L1_STABLE_LOCS, L1_VALID_LOCS, L2_STABLE_LOCS, ProcLoc
from .messages import MEM_CHANNELS, PROC_CHANNELS, SHARED_CHANNELS

__all__ = [
    "Config", "ConfigError", "build_system", "system_types", "quiescent",
    "sharer_census", "census_ok", "Layout", "owner_of",
]

VARIANTS = ("fixed", "legacy")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    nb_proc: int
    nb_l2: int
    cache_th: int
    variant: str = "fixed"
    l2_eviction: bool = False
    # upper bound on cache_th; defaults to nb_proc
    th_cap: int | None = None

    def __post_init__(self):
        for name in ("nb_proc", "nb_l2", "cache_th"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {v!r}")
        cap = self.nb_proc if self.th_cap is None else self.th_cap
        if self.cache_th > cap:
            raise ConfigError(f"cache_th={self.cache_th} exceeds the cap {cap}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if max(self.nb_proc, self.nb_l2, self.cache_th) > 200:
            raise ConfigError("parameters above 200 do not fit the compact state encoding")

    @property
    def legacy(self) -> bool:
        return self.variant == "legacy"

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.nb_proc, self.nb_l2, self.cache_th)

    def __str__(self):
        s = f"{self.nb_proc}-{self.nb_l2}-{self.cache_th}"
        if self.legacy:
            s += "-legacy"
        if self.l2_eviction:
            s += "-evict"
        return s


def _chan_call(ch: str, op: str, args) -> Call:
    return Call(f"chan_{ch}", op, args)


def _step_call(inst: str, step: au.Step) -> Call:
    return Call(inst, step.name, [P(p) for p, _ in step.params])


def _pin(params, name: str, value: int):
    return [(p, range(value, value + 1)) if p == name else (p, r) for p, r in params]


def system_types(cfg: Config) -> dict[str, object]:
    """All type declarations of a configuration; the root type is ``Main``."""
    proc_steps = au.processor_steps(cfg)
    l1_steps = au.l1_steps(cfg, cfg.legacy)
    l2_steps = au.l2_steps(cfg, cfg.legacy)
    mem_steps = au.memory_steps(cfg)

    chan = au.channel_type(False, cfg.nb_l2, cfg.nb_proc)
    chan_id = au.channel_type(True, cfg.nb_l2, cfg.nb_proc)
    processor = au.leaf_type("Processor", au.processor_vars(cfg), proc_steps)
    l1 = au.leaf_type("CacheL1", au.l1_vars(cfg), l1_steps, [au.l1_init(cfg)])
    l2 = au.leaf_type("CacheL2", au.l2_vars(cfg), l2_steps)
    memory = au.leaf_type("Memory", [], mem_steps)

    # processor + L1 + their two private channels; ports towards the L2s
    # are re-exposed as labels of the composite
    pc_syncs = [SyncDecl("init", [("id", range(cfg.nb_proc))], "init", [P("id")],
                         [Call("c", "init", [P("id")])])]
    exposed: list[au.Step] = []
    for inst, steps in (("p", proc_steps), ("c", l1_steps)):
        for s in steps:
            if not s.ops:
                continue
            local = [_chan_call(ch, op, args) for ch, op, args in s.ops if ch in PROC_CHANNELS]
            remote = [o for o in s.ops if o[0] not in PROC_CHANNELS]
            calls = [_step_call(inst, s)] + local
            if remote:
                label = f"{inst}_{s.name}"
                pc_syncs.append(SyncDecl(f"s_{label}", s.params, label,
                                         [P(p) for p, _ in s.params], calls))
                exposed.append(au.Step(label, s.params, s.guard, [], remote))
            else:
                pc_syncs.append(SyncDecl(f"s_{inst}_{s.name}", s.params, None, (), calls))
    pc = CompositeType("ProcessorCacheL1", [
        InstanceDecl("p", "Processor"),
        InstanceDecl("c", "CacheL1"),
        *(InstanceDecl(f"chan_{ch}", "ChannelAddrType") for ch in PROC_CHANNELS),
    ], pc_syncs)

    instances = [InstanceDecl(f"pc[{i}]", "ProcessorCacheL1") for i in range(cfg.nb_proc)]
    instances += [InstanceDecl(f"l2[{b}]", "CacheL2", {"line_addr": b}) for b in range(cfg.nb_l2)]
    instances.append(InstanceDecl("mem", "Memory"))
    instances += [InstanceDecl(f"chan_{ch}", "ChannelAddrTypeId") for ch in SHARED_CHANNELS]
    instances += [InstanceDecl(f"chan_{ch}", "ChannelAddrType") for ch in MEM_CHANNELS]

    main_syncs = [SyncDecl("init", calls=[Call(f"pc[{i}]", "init", [i]) for i in range(cfg.nb_proc)])]

    def wire(inst, step, params):
        calls = [Call(inst, step.name, [P(p) for p, _ in step.params])]
        calls += [_chan_call(ch, op, args) for ch, op, args in step.ops]
        main_syncs.append(SyncDecl(f"{inst}.{step.name}", params, None, (), calls))

    for i in range(cfg.nb_proc):
        for s in exposed:
            wire(f"pc[{i}]", s, _pin(s.params, "id", i))
    for b in range(cfg.nb_l2):
        for s in l2_steps:
            if s.ops:
                wire(f"l2[{b}]", s, _pin(s.params, "a", b))
    for s in mem_steps:
        wire("mem", s, s.params)

    main = CompositeType("Main", instances, main_syncs)
    return {t.name: t for t in (chan, chan_id, processor, l1, l2, memory, pc, main)}


def build_system(cfg: Config) -> SystemModel:
    """Ground the whole configuration into a SystemModel (``model.config`` set)."""
    if not isinstance(cfg, Config):
        raise ConfigError(f"expected a Config, got {cfg!r}")
    model = ground_model(system_types(cfg), "Main")
    model.config = cfg
    model.layout = Layout(model, cfg)
    return model


# ---------------------------------------------------------------------------
# observers


class Layout:
    """Slot indices of the variables the observers look at."""

    def __init__(self, model: SystemModel, cfg: Config):
        slot = model.slot_of
        self.cfg = cfg
        self.proc_state = [slot[f"pc[{i}].p.state"] for i in range(cfg.nb_proc)]
        self.l1_state = [slot[f"pc[{i}].c.state"] for i in range(cfg.nb_proc)]
        self.l1_vaddr = [slot[f"pc[{i}].c.v_addr"] for i in range(cfg.nb_proc)]
        self.l2_state = [slot[f"l2[{b}].state"] for b in range(cfg.nb_l2)]
        self.l2_ncopies = [slot[f"l2[{b}].n_copies"] for b in range(cfg.nb_l2)]
        self.l2_v = [[slot[f"l2[{b}].v_c_id[{k}]"] for k in range(cfg.cache_th)]
                     for b in range(cfg.nb_l2)]
        self.l2_c = [[slot[f"l2[{b}].c_id[{k}]"] for k in range(cfg.cache_th)]
                     for b in range(cfg.nb_l2)]
        self.chan_full = {}
        self.chan_type = {}
        for name in model.var_names:
            if name.endswith(".isFull"):
                path = name[: -len(".isFull")]
                self.chan_full[path] = slot[name]
                self.chan_type[path] = slot[path + ".type"]
        self._full = tuple(self.chan_full.values())
        self._l1_stable = frozenset(int(x) for x in L1_STABLE_LOCS)
        self._l1_valid = frozenset(int(x) for x in L1_VALID_LOCS)
        self._l2_stable = frozenset(int(x) for x in L2_STABLE_LOCS)

    def quiescent(self, s) -> bool:
        if any(s[k] for k in self._full):
            return False
        if any(s[k] != ProcLoc.IDLE for k in self.proc_state):
            return False
        if any(s[k] not in self._l1_stable for k in self.l1_state):
            return False
        return all(s[k] in self._l2_stable for k in self.l2_state)

    def census(self, s, addr: int) -> int:
        return sum(1 for st, va in zip(self.l1_state, self.l1_vaddr)
                   if s[st] in self._l1_valid and s[va] == addr)

    def holders(self, s, addr: int) -> set[int]:
        return {i for i, (st, va) in enumerate(zip(self.l1_state, self.l1_vaddr))
                if s[st] in self._l1_valid and s[va] == addr}

    def census_ok(self, s, addr: int | None = None) -> bool:
        addrs = range(self.cfg.nb_l2) if addr is None else (addr,)
        return all(s[self.l2_ncopies[a]] == self.census(s, a) for a in addrs)

    def sharers(self, s, addr: int) -> set[int]:
        return {s[c] for v, c in zip(self.l2_v[addr], self.l2_c[addr]) if s[v]}

    def list_mode(self, s, addr: int) -> bool:
        return s[self.l2_ncopies[addr]] == sum(s[v] for v in self.l2_v[addr])


def _layout(model: SystemModel) -> Layout:
    lay = getattr(model, "layout", None)
    if lay is None:
        raise TypeError("model was not built by build_system")
    return lay


def quiescent(model: SystemModel, state) -> bool:
    """All channels empty and every component in an idle/stable location."""
    return _layout(model).quiescent(state)


def sharer_census(model: SystemModel, state, addr: int) -> int:
    """Number of L1 caches holding a valid copy of ``addr``."""
    if not 0 <= addr < model.config.nb_l2:
        raise ValueError(f"address {addr} out of range")
    return _layout(model).census(state, addr)


def census_ok(model: SystemModel, state, addr: int | None = None) -> bool:
    return _layout(model).census_ok(state, addr)


def owner_of(model: SystemModel, event_index: int) -> str:
    """The protocol component (not a channel) that drives an event."""
    for path in model.events[event_index].instances:
        if not path.rsplit(".", 1)[-1].startswith("chan_"):
            return path
    return model.events[event_index].instances[0]

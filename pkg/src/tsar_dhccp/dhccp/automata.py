"""Processor, L1 cache, L2 bank, memory and channel automata.

Components are written as lists of :class:`Step`: a guarded transition plus
the channel operations it performs atomically.  ``leaf_type`` turns a step
list into a leaf type where every communicating step is labeled with its own
name; the system builder then wires those labels to channel reads/writes
with synchronizations.

Message fields taken from variables (an address held in ``v_addr``, a cache
id held in ``c_id[i]``) are exposed as parameters constrained by the guard,
so channel arguments are always closed.

Actions the state-machine figures leave out (counter updates, sharer-list
bookkeeping, dirty bit) are filled in from the transaction descriptions;
each such step is tagged ``# txn:`` with the transaction it belongs to.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import TYPE_CHECKING

from ..kernel import (
    A, Assign, C, LeafType, P, TransitionDecl, V, VarDecl, all_of, any_of,
    array_decls,
)
from .messages import TYPE_CODES, Msg

if TYPE_CHECKING:
    from .system import Config

__all__ = [
    "ProcLoc", "L1Loc", "L2Loc", "Step", "leaf_type",
    "channel_type", "processor_steps", "l1_steps", "l2_steps", "memory_steps",
    "fixed_l1_automaton", "fixed_l2_automaton", "legacy_variants",
]


class ProcLoc(IntEnum):
    IDLE = 0
    WAIT_RD = 1
    WAIT_WR = 2


class L1Loc(IntEnum):
    INIT = 0
    L1_EMPTY = 1
    L1_VALID = 2
    L1_READ_WAIT_EMPTY = 3
    L1_READ_WAIT_INV = 4      # invalidation crossed the pending read response
    L1_WRITE_WAIT_EMPTY = 5
    L1_WRITE_WAIT_VALID = 6
    L1_WRITE_WAIT_CLACK = 7   # write pending, copy cleaned up, CLACK pending
    L1_MISS_CLNUP = 8         # read miss on a valid line, victim cleanup to send
    L1_MISS_CLACK_WAIT = 9
    L1_MISS_RD = 10           # victim acknowledged, RD to send
    L1_INV_CLNUP = 11         # line received after an invalidation, cleanup to send
    L1_CLACK_WAIT = 12
    L1_WRITE_WAIT_INV = 13    # legacy only: write pending after B_INV acknowledgment


# locations where the L1 holds a valid copy of v_addr
L1_VALID_LOCS = (L1Loc.L1_VALID, L1Loc.L1_WRITE_WAIT_VALID)
# locations without any outstanding transaction
L1_STABLE_LOCS = (L1Loc.INIT, L1Loc.L1_EMPTY, L1Loc.L1_VALID)


class L2Loc(IntEnum):
    L2_EMPTY = 0
    L2_GET_WAIT_RD = 1
    L2_GET_WAIT_WR = 2
    L2_VALID = 3
    L2_MUP_SEND = 4
    L2_MUP_WAIT = 5
    L2_RSP_WR = 6
    L2_BINV_SEND = 7
    L2_BINV_WAIT = 8
    L2_EVICT = 9
    L2_MINV_SEND = 10
    L2_MINV_WAIT = 11
    L2_EVICT_BINV_SEND = 12
    L2_EVICT_BINV_WAIT = 13
    L2_PUT = 14
    L2_PUT_WAIT = 15


L2_STABLE_LOCS = (L2Loc.L2_EMPTY, L2Loc.L2_VALID)
# the line is present (copies may exist, cleanups may arrive)
L2_LINE_LOCS = (
    L2Loc.L2_VALID, L2Loc.L2_MUP_SEND, L2Loc.L2_MUP_WAIT, L2Loc.L2_RSP_WR,
    L2Loc.L2_BINV_SEND, L2Loc.L2_BINV_WAIT, L2Loc.L2_EVICT, L2Loc.L2_MINV_SEND,
    L2Loc.L2_MINV_WAIT, L2Loc.L2_EVICT_BINV_SEND, L2Loc.L2_EVICT_BINV_WAIT,
)


@dataclass
class Step:
    name: str
    params: list = field(default_factory=list)   # [(name, range)]
    guard: object = C(1)
    actions: list = field(default_factory=list)  # [Assign]
    # (channel, "read" | "write", (addr, type[, id])) over params/constants
    ops: list = field(default_factory=list)


def leaf_type(name: str, vars: list[VarDecl], steps: list[Step],
              extra: list[TransitionDecl] = ()) -> LeafType:
    transitions = list(extra)
    for s in steps:
        label = s.name if s.ops else None
        args = [P(p) for p, _ in s.params] if s.ops else []
        transitions.append(TransitionDecl(s.name, s.params, s.guard, label, args, s.actions))
    return LeafType(name, vars, transitions)


def channel_type(with_id: bool, nb_l2: int, nb_proc: int) -> LeafType:
    """One-place buffer; a read flushes the payload back to zero."""
    fields = ["addr", "type"] + (["id"] if with_id else [])
    ranges = {"addr": range(nb_l2), "type": TYPE_CODES, "id": range(nb_proc)}
    vars = [VarDecl("isFull", 0, 1)] + [
        VarDecl(f, ranges[f][0], ranges[f][-1]) for f in fields
    ]
    params = [(f, ranges[f]) for f in fields]
    read_guard = all_of(V("isFull") == 1, *(V(f) == P(f) for f in fields))
    read = TransitionDecl(
        "read", params, read_guard, "read", [P(f) for f in fields],
        [Assign("isFull", 0)] + [Assign(f, 0) for f in fields],
    )
    write = TransitionDecl(
        "write", params, V("isFull") == 0, "write", [P(f) for f in fields],
        [Assign("isFull", 1)] + [Assign(f, P(f)) for f in fields],
    )
    return LeafType("ChannelAddrTypeId" if with_id else "ChannelAddrType", vars, [read, write])


# ---------------------------------------------------------------------------
# processor

def processor_steps(cfg: "Config") -> list[Step]:
    addrs = range(cfg.nb_l2)
    st = V("state")
    return [
        Step("send_rd", [("a", addrs)], st == ProcLoc.IDLE,
             [Assign("state", int(ProcLoc.WAIT_RD)), Assign("addr", P("a"))],
             [("PL1DTREQ", "write", (P("a"), Msg.DT_RD))]),
        Step("send_wr", [("a", addrs)], st == ProcLoc.IDLE,
             [Assign("state", int(ProcLoc.WAIT_WR)), Assign("addr", P("a"))],
             [("PL1DTREQ", "write", (P("a"), Msg.DT_WR))]),
        Step("recv_rd", [("a", addrs)], (st == ProcLoc.WAIT_RD) & (V("addr") == P("a")),
             [Assign("state", int(ProcLoc.IDLE))],
             [("L1PDTRSP", "read", (P("a"), Msg.RSP_DT_RD))]),
        Step("recv_wr", [("a", addrs)], (st == ProcLoc.WAIT_WR) & (V("addr") == P("a")),
             [Assign("state", int(ProcLoc.IDLE))],
             [("L1PDTRSP", "read", (P("a"), Msg.RSP_DT_WR))]),
    ]


def processor_vars(cfg: "Config") -> list[VarDecl]:
    return [VarDecl("state", 0, 2), VarDecl("addr", 0, cfg.nb_l2 - 1)]


# ---------------------------------------------------------------------------
# L1 cache

def l1_vars(cfg: "Config") -> list[VarDecl]:
    return [
        VarDecl("state", 0, len(L1Loc) - 1, int(L1Loc.INIT)),
        VarDecl("id", 0, cfg.nb_proc - 1),
        VarDecl("v_addr", 0, cfg.nb_l2 - 1),
        VarDecl("addr_save", 0, cfg.nb_l2 - 1),
    ]


def l1_init(cfg: "Config") -> TransitionDecl:
    return TransitionDecl(
        "t_init", [("id", range(cfg.nb_proc))], V("state") == L1Loc.INIT, "init", [P("id")],
        [Assign("state", int(L1Loc.L1_EMPTY)), Assign("id", P("id"))],
    )


def l1_steps(cfg: "Config", legacy: bool = False) -> list[Step]:
    addrs = range(cfg.nb_l2)
    ids = range(cfg.nb_proc)
    a, i = P("a"), P("id")
    st = V("state")
    me = V("id") == i

    def at(loc):
        return st == loc

    def go(loc, *more):
        return [Assign("state", int(loc)), *more]

    AI = [("a", addrs), ("id", ids)]
    steps = [
        # processor requests
        Step("t_Empty_ReadWaitEmpty", AI, at(L1Loc.L1_EMPTY) & me,
             go(L1Loc.L1_READ_WAIT_EMPTY, Assign("addr_save", a)),
             [("PL1DTREQ", "read", (a, Msg.DT_RD)), ("L1L2DTREQ", "write", (a, Msg.RD, i))]),
        Step("t_Empty_WriteWaitEmpty", AI, at(L1Loc.L1_EMPTY) & me,
             go(L1Loc.L1_WRITE_WAIT_EMPTY, Assign("addr_save", a)),
             [("PL1DTREQ", "read", (a, Msg.DT_WR)), ("L1L2DTREQ", "write", (a, Msg.WR, i))]),
        Step("t_Valid_ReadHit", [("a", addrs)], at(L1Loc.L1_VALID) & (V("v_addr") == a),
             [],
             [("PL1DTREQ", "read", (a, Msg.DT_RD)), ("L1PDTRSP", "write", (a, Msg.RSP_DT_RD))]),
        Step("t_Valid_MissClnup", [("a", addrs)], at(L1Loc.L1_VALID) & (V("v_addr") != a),
             go(L1Loc.L1_MISS_CLNUP, Assign("addr_save", a)),
             [("PL1DTREQ", "read", (a, Msg.DT_RD))]),
        # txn: local cleanup of the victim line
        Step("t_MissClnup_MissClackWait", AI, at(L1Loc.L1_MISS_CLNUP) & me & (V("v_addr") == a),
             go(L1Loc.L1_MISS_CLACK_WAIT),
             [("L1L2CPRSP", "write", (a, Msg.CLNUP, i))]),
        Step("t_MissClackWait_MissRd", AI, at(L1Loc.L1_MISS_CLACK_WAIT) & me & (V("v_addr") == a),
             go(L1Loc.L1_MISS_RD, Assign("v_addr", 0)),
             [("L2L1CLACK", "read", (a, Msg.CLACK, i))]),
        Step("t_MissRd_ReadWaitEmpty", AI, at(L1Loc.L1_MISS_RD) & me & (V("addr_save") == a),
             go(L1Loc.L1_READ_WAIT_EMPTY),
             [("L1L2DTREQ", "write", (a, Msg.RD, i))]),
        Step("t_Valid_WriteWaitValid", AI, at(L1Loc.L1_VALID) & me,
             go(L1Loc.L1_WRITE_WAIT_VALID, Assign("addr_save", a)),
             [("PL1DTREQ", "read", (a, Msg.DT_WR)), ("L1L2DTREQ", "write", (a, Msg.WR, i))]),
        # direct responses
        Step("t_ReadWaitEmpty_Valid", AI, at(L1Loc.L1_READ_WAIT_EMPTY) & me & (V("addr_save") == a),
             go(L1Loc.L1_VALID, Assign("v_addr", a)),
             [("L2L1DTRSP", "read", (a, Msg.RSP_RD, i)), ("L1PDTRSP", "write", (a, Msg.RSP_DT_RD))]),
        Step("t_WriteWaitEmpty_Empty", AI, at(L1Loc.L1_WRITE_WAIT_EMPTY) & me & (V("addr_save") == a),
             go(L1Loc.L1_EMPTY),
             [("L2L1DTRSP", "read", (a, Msg.RSP_WR, i)), ("L1PDTRSP", "write", (a, Msg.RSP_DT_WR))]),
        Step("t_WriteWaitValid_Valid", AI, at(L1Loc.L1_WRITE_WAIT_VALID) & me & (V("addr_save") == a),
             go(L1Loc.L1_VALID),
             [("L2L1DTRSP", "read", (a, Msg.RSP_WR, i)), ("L1PDTRSP", "write", (a, Msg.RSP_DT_WR))]),
        # txn: multicast update; every M_UP is acknowledged, copy or not
        Step("t_MultiUpdate", AI, (st != L1Loc.INIT) & me, [],
             [("L2L1CPREQ", "read", (a, Msg.M_UP, i)), ("L1L2CPRSP", "write", (a, Msg.RSP_M_UP, i))]),
    ]
    if legacy:
        steps += _l1_legacy_invalidation(cfg)
    else:
        steps += _l1_fixed_invalidation(cfg)
    return steps


def _inv_kinds(cfg):
    return (Msg.B_INV, Msg.M_INV) if cfg.l2_eviction else (Msg.B_INV,)


def _l1_fixed_invalidation(cfg: "Config") -> list[Step]:
    addrs = range(cfg.nb_l2)
    ids = range(cfg.nb_proc)
    a, i = P("a"), P("id")
    st = V("state")
    me = V("id") == i
    AI = [("a", addrs), ("id", ids)]

    def go(loc, *more):
        return [Assign("state", int(loc)), *more]

    steps = []
    for kind in _inv_kinds(cfg):
        k = kind.name
        inv = ("L2L1CPREQ", "read", (a, kind, i))
        holds_valid = (st == L1Loc.L1_VALID) & (V("v_addr") == a)
        holds_wwv = (st == L1Loc.L1_WRITE_WAIT_VALID) & (V("v_addr") == a)
        pending = (st == L1Loc.L1_READ_WAIT_EMPTY) & (V("addr_save") == a)
        steps += [
            # txn: broadcast/multicast invalidate, copy holders answer with CLNUP
            Step(f"t_Valid_ClackWait_{k}", AI, holds_valid & me, go(L1Loc.L1_CLACK_WAIT),
                 [inv, ("L1L2CPRSP", "write", (a, Msg.CLNUP, i))]),
            Step(f"t_WriteWaitValid_WriteWaitClack_{k}", AI, holds_wwv & me,
                 go(L1Loc.L1_WRITE_WAIT_CLACK),
                 [inv, ("L1L2CPRSP", "write", (a, Msg.CLNUP, i))]),
            # the line will be dropped (and cleaned up) once the response arrives
            Step(f"t_ReadWaitEmpty_ReadWaitInv_{k}", AI, pending & me, go(L1Loc.L1_READ_WAIT_INV),
                 [inv]),
            Step(f"t_Drop_{k}", AI,
                 (st != L1Loc.INIT) & me & ~holds_valid & ~holds_wwv & ~pending, [],
                 [inv]),
        ]
    steps += [
        Step("t_ReadWaitInv_InvClnup", AI, (st == L1Loc.L1_READ_WAIT_INV) & me & (V("addr_save") == a),
             go(L1Loc.L1_INV_CLNUP, Assign("v_addr", a)),
             [("L2L1DTRSP", "read", (a, Msg.RSP_RD, i)), ("L1PDTRSP", "write", (a, Msg.RSP_DT_RD))]),
        Step("t_InvClnup_ClackWait", AI, (st == L1Loc.L1_INV_CLNUP) & me & (V("v_addr") == a),
             go(L1Loc.L1_CLACK_WAIT),
             [("L1L2CPRSP", "write", (a, Msg.CLNUP, i))]),
        Step("t_ClackWait_Empty", AI, (st == L1Loc.L1_CLACK_WAIT) & me & (V("v_addr") == a),
             go(L1Loc.L1_EMPTY, Assign("v_addr", 0)),
             [("L2L1CLACK", "read", (a, Msg.CLACK, i))]),
        Step("t_WriteWaitClack_WriteWaitEmpty", AI,
             (st == L1Loc.L1_WRITE_WAIT_CLACK) & me & (V("v_addr") == a),
             go(L1Loc.L1_WRITE_WAIT_EMPTY, Assign("v_addr", 0)),
             [("L2L1CLACK", "read", (a, Msg.CLACK, i))]),
        Step("t_WriteWaitClack_ClackWait", AI,
             (st == L1Loc.L1_WRITE_WAIT_CLACK) & me & (V("addr_save") == a),
             go(L1Loc.L1_CLACK_WAIT),
             [("L2L1DTRSP", "read", (a, Msg.RSP_WR, i)), ("L1PDTRSP", "write", (a, Msg.RSP_DT_WR))]),
    ]
    return steps


def _l1_legacy_invalidation(cfg: "Config") -> list[Step]:
    # Pre-fix protocol: B_INV is acknowledged by RSP_B_INV on the coherence
    # response network, without cleanup/CLACK.  An L1 whose read is still
    # pending acknowledges too and later drops the incoming line, whether or
    # not the L2 had already registered it.
    addrs = range(cfg.nb_l2)
    ids = range(cfg.nb_proc)
    a, i = P("a"), P("id")
    st = V("state")
    me = V("id") == i
    AI = [("a", addrs), ("id", ids)]

    def go(loc, *more):
        return [Assign("state", int(loc)), *more]

    binv = ("L2L1CPREQ", "read", (a, Msg.B_INV, i))
    ack = ("L1L2CPRSP", "write", (a, Msg.RSP_B_INV, i))
    holds_valid = (st == L1Loc.L1_VALID) & (V("v_addr") == a)
    holds_wwv = (st == L1Loc.L1_WRITE_WAIT_VALID) & (V("v_addr") == a)
    pending = (st == L1Loc.L1_READ_WAIT_EMPTY) & (V("addr_save") == a)
    steps = [
        Step("t_Valid_Empty_B_INV", AI, holds_valid & me, go(L1Loc.L1_EMPTY, Assign("v_addr", 0)),
             [binv, ack]),
        Step("t_WriteWaitValid_WriteWaitInv_B_INV", AI, holds_wwv & me,
             go(L1Loc.L1_WRITE_WAIT_INV, Assign("v_addr", 0)), [binv, ack]),
        Step("t_ReadWaitEmpty_ReadWaitInv_B_INV", AI, pending & me, go(L1Loc.L1_READ_WAIT_INV),
             [binv, ack]),
        Step("t_Drop_B_INV", AI, (st != L1Loc.INIT) & me & ~holds_valid & ~holds_wwv & ~pending, [],
             [binv]),
        Step("t_ReadWaitInv_Empty", AI, (st == L1Loc.L1_READ_WAIT_INV) & me & (V("addr_save") == a),
             go(L1Loc.L1_EMPTY),
             [("L2L1DTRSP", "read", (a, Msg.RSP_RD, i)), ("L1PDTRSP", "write", (a, Msg.RSP_DT_RD))]),
        Step("t_WriteWaitInv_Empty", AI, (st == L1Loc.L1_WRITE_WAIT_INV) & me & (V("addr_save") == a),
             go(L1Loc.L1_EMPTY),
             [("L2L1DTRSP", "read", (a, Msg.RSP_WR, i)), ("L1PDTRSP", "write", (a, Msg.RSP_DT_WR))]),
        Step("t_ClackWait_Empty", AI, (st == L1Loc.L1_CLACK_WAIT) & me & (V("v_addr") == a),
             go(L1Loc.L1_EMPTY, Assign("v_addr", 0)),
             [("L2L1CLACK", "read", (a, Msg.CLACK, i))]),
    ]
    if cfg.l2_eviction:
        steps += [s for s in _l1_fixed_invalidation(cfg)
                  if s.name.endswith("M_INV") or s.name.startswith(("t_InvClnup", "t_WriteWaitClack"))]
    return steps


# ---------------------------------------------------------------------------
# L2 bank (one line)

# headroom of the legacy copy counter over nb_proc
LEGACY_DRIFT = 4


def l2_vars(cfg: "Config", line_addr: int = 0) -> list[VarDecl]:
    np_, th = cfg.nb_proc, cfg.cache_th
    return [
        VarDecl("state", 0, len(L2Loc) - 1, int(L2Loc.L2_EMPTY)),
        VarDecl("line_addr", 0, cfg.nb_l2 - 1, line_addr),
        # the legacy counter drifts above the true number of copies
        VarDecl("n_copies", 0, np_ + LEGACY_DRIFT if cfg.legacy else np_),
        VarDecl("dirty", 0, 1),
        VarDecl("src_save", 0, np_ - 1),
        # cleanups are acknowledged in the same step they are received, so
        # no cleanup source ever needs saving; kept for layout parity
        VarDecl("src_save_clnup", 0, np_ - 1),
        VarDecl("cpt", 0, max(np_, th)),
        VarDecl("cpt_clnup", 0, np_),
        VarDecl("rsp_cpt", 0, np_),
        *array_decls("v_c_id", th, 0, 1),
        *array_decls("c_id", th, 0, np_ - 1),
    ]


def _popcount(th: int):
    out = C(0)
    for k in range(th):
        out = out + A("v_c_id", k)
    return out


def l2_steps(cfg: "Config", legacy: bool = False) -> list[Step]:
    np_, th = cfg.nb_proc, cfg.cache_th
    addrs = range(cfg.nb_l2)
    ids = range(np_)
    slots = range(th)
    a, i, k = P("a"), P("id"), P("k")
    st = V("state")
    n = V("n_copies")
    mine = V("line_addr") == a
    pop = _popcount(th)
    list_mode = n == pop
    count_mode = n != pop

    def at(*locs):
        return any_of(*(st == loc for loc in locs)) & mine

    def go(loc, *more):
        return [Assign("state", int(loc)), *more]

    AI = [("a", addrs), ("id", ids)]
    A_ = [("a", addrs)]
    req = lambda kind: ("L1L2DTREQ", "read", (a, kind, i))  # noqa: E731
    rsp = lambda kind: ("L2L1DTRSP", "write", (a, kind, i))  # noqa: E731
    clear_list = [a_ for s in slots for a_ in (Assign(A("v_c_id", s), 0), Assign(A("c_id", s), 0))]

    steps = [
        # direct transactions, miss in the L2 (fetch the line from memory)
        Step("t_Empty_GetWaitRd", AI, at(L2Loc.L2_EMPTY),
             go(L2Loc.L2_GET_WAIT_RD, Assign("src_save", i)),
             [req(Msg.RD), ("L2MEMDTREQ", "write", (a, Msg.GET))]),
        Step("t_Empty_GetWaitWr", AI, at(L2Loc.L2_EMPTY),
             go(L2Loc.L2_GET_WAIT_WR, Assign("src_save", i)),
             [req(Msg.WR), ("L2MEMDTREQ", "write", (a, Msg.GET))]),
        # txn: first copy registered in slot 0
        Step("t_GetWaitRd_Valid", AI, at(L2Loc.L2_GET_WAIT_RD) & (V("src_save") == i),
             go(L2Loc.L2_VALID, Assign("n_copies", 1), Assign(A("v_c_id", 0), 1),
                Assign(A("c_id", 0), i), Assign("src_save", 0)),
             [("MEML2DTRSP", "read", (a, Msg.RSP_GET)), rsp(Msg.RSP_RD)]),
        Step("t_GetWaitWr_Valid", AI, at(L2Loc.L2_GET_WAIT_WR) & (V("src_save") == i),
             go(L2Loc.L2_VALID, Assign("dirty", 1), Assign("src_save", 0)),
             [("MEML2DTRSP", "read", (a, Msg.RSP_GET)), rsp(Msg.RSP_WR)]),
    ]
    # txn: read hit, register the new copy
    for s in slots:
        lower_full = all_of(*(A("v_c_id", r) == 1 for r in range(s)))
        steps.append(Step(
            f"t_Valid_ReadRegister_{s}", AI,
            at(L2Loc.L2_VALID) & list_mode & (n < th) & (A("v_c_id", s) == 0) & lower_full,
            [Assign(A("v_c_id", s), 1), Assign(A("c_id", s), i), Assign("n_copies", n + 1)],
            [req(Msg.RD), rsp(Msg.RSP_RD)]))
    steps += [
        # threshold exceeded: free the list, count only
        Step("t_Valid_ReadOverflow", AI, at(L2Loc.L2_VALID) & list_mode & (n == th),
             clear_list + [Assign("n_copies", n + 1)], [req(Msg.RD), rsp(Msg.RSP_RD)]),
        Step("t_Valid_ReadCount", AI, at(L2Loc.L2_VALID) & count_mode,
             [Assign("n_copies", n + 1)], [req(Msg.RD), rsp(Msg.RSP_RD)]),
    ]
    # write hit
    others = any_of(*((A("v_c_id", s) == 1) & (A("c_id", s) != i) for s in slots))
    steps += [
        Step("t_Valid_WriteAlone", AI, at(L2Loc.L2_VALID) & list_mode & ~others,
             [Assign("dirty", 1)], [req(Msg.WR), rsp(Msg.RSP_WR)]),
        # txn: multicast update to every registered copy but the writer
        Step("t_Valid_MupSend", AI, at(L2Loc.L2_VALID) & list_mode & others,
             go(L2Loc.L2_MUP_SEND, Assign("dirty", 1), Assign("src_save", i),
                Assign("cpt", 0), Assign("rsp_cpt", 0)),
             [req(Msg.WR)]),
        # txn: broadcast invalidate, the line is in counting mode
        Step("t_Valid_BinvSend", AI, at(L2Loc.L2_VALID) & count_mode,
             go(L2Loc.L2_BINV_SEND, Assign("dirty", 1), Assign("src_save", i), Assign("cpt", 0)),
             [req(Msg.WR)]),
    ]
    SK = [("a", addrs), ("k", slots), ("id", ids)]
    sel = (V("cpt") == k) & (A("v_c_id", k) == 1) & (A("c_id", k) == i)
    steps += [
        Step("t_MupSend_Send", SK, at(L2Loc.L2_MUP_SEND) & sel & (V("src_save") != i),
             [Assign("cpt", V("cpt") + 1), Assign("rsp_cpt", V("rsp_cpt") + 1)],
             [("L2L1CPREQ", "write", (a, Msg.M_UP, i))]),
        Step("t_MupSend_Skip", [("a", addrs), ("k", slots)],
             at(L2Loc.L2_MUP_SEND) & (V("cpt") == k)
             & ((A("v_c_id", k) == 0) | (A("c_id", k) == V("src_save"))),
             [Assign("cpt", V("cpt") + 1)]),
        Step("t_MupSend_MupWait", A_, at(L2Loc.L2_MUP_SEND) & (V("cpt") == th) & (V("rsp_cpt") > 0),
             go(L2Loc.L2_MUP_WAIT, Assign("cpt", 0))),
        Step("t_MupSend_RspWr", A_, at(L2Loc.L2_MUP_SEND) & (V("cpt") == th) & (V("rsp_cpt") == 0),
             go(L2Loc.L2_RSP_WR, Assign("cpt", 0))),
        # responses are counted as soon as they arrive, even mid-send
        Step("t_MupAck", AI,
             (at(L2Loc.L2_MUP_SEND) & (V("rsp_cpt") > 0)) | (at(L2Loc.L2_MUP_WAIT) & (V("rsp_cpt") > 1)),
             [Assign("rsp_cpt", V("rsp_cpt") - 1)],
             [("L1L2CPRSP", "read", (a, Msg.RSP_M_UP, i))]),
        Step("t_MupWait_RspWr", AI, at(L2Loc.L2_MUP_WAIT) & (V("rsp_cpt") == 1),
             go(L2Loc.L2_RSP_WR, Assign("rsp_cpt", 0)),
             [("L1L2CPRSP", "read", (a, Msg.RSP_M_UP, i))]),
        Step("t_RspWr_Valid", AI, at(L2Loc.L2_RSP_WR) & (V("src_save") == i),
             go(L2Loc.L2_VALID, Assign("src_save", 0)),
             [rsp(Msg.RSP_WR)]),
    ]
    # broadcast: one B_INV posted per L1, in id order
    steps += _broadcast_steps(cfg, L2Loc.L2_BINV_SEND, L2Loc.L2_BINV_WAIT, L2Loc.L2_RSP_WR,
                              legacy, "Binv")
    # txn: local cleanup (and invalidation responses), always answered by CLACK
    line = at(*L2_LINE_LOCS)
    ack = ("L2L1CLACK", "write", (a, Msg.CLACK, i))
    cl = ("L1L2CPRSP", "read", (a, Msg.CLNUP, i))
    steps += [
        Step("t_Clnup_List", SK, line & list_mode & (A("v_c_id", k) == 1) & (A("c_id", k) == i),
             [Assign(A("v_c_id", k), 0), Assign(A("c_id", k), 0), Assign("n_copies", n - 1)],
             [cl, ack]),
        Step("t_Clnup_Count", AI, line & count_mode, [Assign("n_copies", n - 1)], [cl, ack]),
    ]
    if legacy:
        # acknowledgments of an earlier broadcast arriving late are swallowed
        steps.append(Step(
            "t_StrayRspBinv", AI,
            at(*(loc for loc in L2_LINE_LOCS
                 if loc not in (L2Loc.L2_BINV_SEND, L2Loc.L2_BINV_WAIT,
                                L2Loc.L2_EVICT_BINV_SEND, L2Loc.L2_EVICT_BINV_WAIT))),
            [], [("L1L2CPRSP", "read", (a, Msg.RSP_B_INV, i))]))
    if cfg.l2_eviction:
        steps += _eviction_steps(cfg, legacy)
    return steps


def _broadcast_steps(cfg, send_loc, wait_loc, done_loc, legacy, tag) -> list[Step]:
    np_ = cfg.nb_proc
    addrs = range(cfg.nb_l2)
    ids = range(np_)
    a, i = P("a"), P("id")
    st = V("state")
    mine = V("line_addr") == a

    def go(loc, *more):
        return [Assign("state", int(loc)), *more]

    AI = [("a", addrs), ("id", ids)]
    done_extra = [Assign("cpt", 0)] if done_loc == L2Loc.L2_RSP_WR else []
    steps = [
        Step(f"t_{tag}Send", AI, (st == send_loc) & mine & (V("cpt") == i) & (i < np_ - 1),
             [Assign("cpt", V("cpt") + 1)],
             [("L2L1CPREQ", "write", (a, Msg.B_INV, i))]),
        Step(f"t_{tag}Send_Last", AI, (st == send_loc) & mine & (V("cpt") == i) & (i == np_ - 1),
             go(wait_loc, Assign("cpt", 0)),
             [("L2L1CPREQ", "write", (a, Msg.B_INV, i))]),
    ]
    if not legacy:
        # completion: every counted copy has been cleaned up
        steps.append(Step(f"t_{tag}Wait_Done", [("a", addrs)],
                          (st == wait_loc) & mine & (V("n_copies") == 0),
                          go(done_loc, *done_extra)))
    else:
        # completion once as many RSP_B_INV as counted copies came back
        bcast = (st == send_loc) | (st == wait_loc)
        steps += [
            Step(f"t_{tag}RspBinv", AI, bcast & mine & (V("rsp_cpt") < np_),
                 [Assign("rsp_cpt", V("rsp_cpt") + 1)],
                 [("L1L2CPRSP", "read", (a, Msg.RSP_B_INV, i))]),
            Step(f"t_{tag}RspBinv_Sat", AI, bcast & mine & (V("rsp_cpt") == np_),
                 [], [("L1L2CPRSP", "read", (a, Msg.RSP_B_INV, i))]),
            Step(f"t_{tag}Wait_Done", [("a", addrs)],
                 (st == wait_loc) & mine & (V("rsp_cpt") >= V("n_copies")),
                 go(done_loc, Assign("n_copies", 0), Assign("rsp_cpt", 0), *done_extra)),
        ]
    return steps


def _eviction_steps(cfg: "Config", legacy: bool) -> list[Step]:
    th = cfg.cache_th
    addrs = range(cfg.nb_l2)
    ids = range(cfg.nb_proc)
    slots = range(th)
    a, i, k = P("a"), P("id"), P("k")
    st = V("state")
    n = V("n_copies")
    mine = V("line_addr") == a
    pop = _popcount(th)

    def at(loc):
        return (st == loc) & mine

    def go(loc, *more):
        return [Assign("state", int(loc)), *more]

    A_ = [("a", addrs)]
    SK = [("a", addrs), ("k", slots), ("id", ids)]
    steps = [
        # nondeterministic replacement of the line
        Step("t_Valid_Evict", A_, at(L2Loc.L2_VALID), go(L2Loc.L2_EVICT)),
        # txn: multicast invalidate to registered copies
        Step("t_Evict_MinvSend", A_, at(L2Loc.L2_EVICT) & (n > 0) & (n == pop),
             go(L2Loc.L2_MINV_SEND, Assign("cpt", 0))),
        Step("t_MinvSend_Send", SK,
             at(L2Loc.L2_MINV_SEND) & (V("cpt") == k) & (A("v_c_id", k) == 1) & (A("c_id", k) == i),
             [Assign("cpt", V("cpt") + 1)],
             [("L2L1CPREQ", "write", (a, Msg.M_INV, i))]),
        Step("t_MinvSend_Skip", [("a", addrs), ("k", slots)],
             at(L2Loc.L2_MINV_SEND) & (V("cpt") == k) & (A("v_c_id", k) == 0),
             [Assign("cpt", V("cpt") + 1)]),
        Step("t_MinvSend_MinvWait", A_, at(L2Loc.L2_MINV_SEND) & (V("cpt") == th),
             go(L2Loc.L2_MINV_WAIT, Assign("cpt", 0))),
        Step("t_MinvWait_Evict", A_, at(L2Loc.L2_MINV_WAIT) & (n == 0), go(L2Loc.L2_EVICT)),
        # txn: broadcast invalidate on replacement of a counted line
        Step("t_Evict_BinvSend", A_, at(L2Loc.L2_EVICT) & (n != pop),
             go(L2Loc.L2_EVICT_BINV_SEND, Assign("cpt", 0))),
        Step("t_Evict_Put", A_, at(L2Loc.L2_EVICT) & (n == 0) & (V("dirty") == 1),
             go(L2Loc.L2_PUT)),
        Step("t_Evict_Empty", A_, at(L2Loc.L2_EVICT) & (n == 0) & (V("dirty") == 0),
             go(L2Loc.L2_EMPTY)),
        Step("t_Put_PutWait", A_, at(L2Loc.L2_PUT), go(L2Loc.L2_PUT_WAIT),
             [("L2MEMDTREQ", "write", (a, Msg.PUT))]),
        Step("t_PutWait_Empty", A_, at(L2Loc.L2_PUT_WAIT), go(L2Loc.L2_EMPTY, Assign("dirty", 0)),
             [("MEML2DTRSP", "read", (a, Msg.RSP_PUT))]),
    ]
    steps += _broadcast_steps(cfg, L2Loc.L2_EVICT_BINV_SEND, L2Loc.L2_EVICT_BINV_WAIT,
                              L2Loc.L2_EVICT, legacy, "EvictBinv")
    return steps


# ---------------------------------------------------------------------------
# memory: single state, answers GET and PUT

def memory_steps(cfg: "Config") -> list[Step]:
    addrs = range(cfg.nb_l2)
    a = P("a")
    return [
        Step("t_Get", [("a", addrs)], C(1), [],
             [("L2MEMDTREQ", "read", (a, Msg.GET)), ("MEML2DTRSP", "write", (a, Msg.RSP_GET))]),
        Step("t_Put", [("a", addrs)], C(1), [],
             [("L2MEMDTREQ", "read", (a, Msg.PUT)), ("MEML2DTRSP", "write", (a, Msg.RSP_PUT))]),
    ]


# ---------------------------------------------------------------------------
# leaf types

def _default_cfg(cfg):
    if cfg is None:
        from .system import Config
        cfg = Config(2, 2, 2)
    return cfg


def fixed_l1_automaton(cfg: "Config | None" = None) -> LeafType:
    cfg = _default_cfg(cfg)
    return leaf_type("CacheL1", l1_vars(cfg), l1_steps(cfg), [l1_init(cfg)])


def fixed_l2_automaton(cfg: "Config | None" = None) -> LeafType:
    cfg = _default_cfg(cfg)
    return leaf_type("CacheL2", l2_vars(cfg), l2_steps(cfg))


def legacy_variants(cfg: "Config | None" = None) -> tuple[LeafType, LeafType]:
    cfg = _default_cfg(cfg)
    return (leaf_type("CacheL1", l1_vars(cfg), l1_steps(cfg, legacy=True), [l1_init(cfg)]),
            leaf_type("CacheL2", l2_vars(cfg), l2_steps(cfg, legacy=True)))

"""Message alphabet and the networks (channels) each message travels on."""

from __future__ import annotations

from enum import IntEnum

__all__ = ["Msg", "CHANNEL_OF", "TYPE_CODES", "SHARED_CHANNELS", "PROC_CHANNELS",
           "MEM_CHANNELS", "ID_CHANNELS", "message_table_tsv", "channel_of"]

# message type field range of every channel
TYPE_CODES = range(0, 20)


class Msg(IntEnum):
    DT_RD = 0
    DT_WR = 1
    RSP_DT_RD = 2
    RSP_DT_WR = 3
    RD = 4
    WR = 5
    RSP_RD = 6
    RSP_WR = 7
    CLNUP = 8
    CLACK = 9
    B_INV = 10
    M_INV = 11
    M_UP = 12
    RSP_M_UP = 13
    GET = 14
    PUT = 15
    RSP_GET = 16
    RSP_PUT = 17
    RSP_B_INV = 18  # pre-fix protocol only


CHANNEL_OF = {
    Msg.DT_RD: "PL1DTREQ",
    Msg.DT_WR: "PL1DTREQ",
    Msg.RSP_DT_RD: "L1PDTRSP",
    Msg.RSP_DT_WR: "L1PDTRSP",
    Msg.RD: "L1L2DTREQ",
    Msg.WR: "L1L2DTREQ",
    Msg.RSP_RD: "L2L1DTRSP",
    Msg.RSP_WR: "L2L1DTRSP",
    Msg.CLNUP: "L1L2CPRSP",
    Msg.CLACK: "L2L1CLACK",
    Msg.B_INV: "L2L1CPREQ",
    Msg.M_INV: "L2L1CPREQ",
    Msg.M_UP: "L2L1CPREQ",
    Msg.RSP_M_UP: "L1L2CPRSP",
    Msg.GET: "L2MEMDTREQ",
    Msg.PUT: "L2MEMDTREQ",
    Msg.RSP_GET: "MEML2DTRSP",
    Msg.RSP_PUT: "MEML2DTRSP",
    Msg.RSP_B_INV: "L1L2CPRSP",
}

# per processor, inside each processor/L1 composite
PROC_CHANNELS = ("PL1DTREQ", "L1PDTRSP")
# the five L1 <-> L2 networks; these carry a sender/target cache id
SHARED_CHANNELS = ("L1L2DTREQ", "L2L1DTRSP", "L1L2CPRSP", "L2L1CPREQ", "L2L1CLACK")
MEM_CHANNELS = ("L2MEMDTREQ", "MEML2DTRSP")
ID_CHANNELS = frozenset(SHARED_CHANNELS)


def channel_of(msg: Msg) -> str:
    return CHANNEL_OF[Msg(msg)]


def message_table_tsv(include_legacy: bool = True) -> str:
    """``code<TAB>name<TAB>channel`` lines, one per message type."""
    rows = []
    for m in Msg:
        if m is Msg.RSP_B_INV and not include_legacy:
            continue
        rows.append(f"{int(m)}\t{m.name}\t{CHANNEL_OF[m]}")
    return "\n".join(rows) + "\n"

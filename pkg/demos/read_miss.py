"""Walk one processor through a read miss and draw the message sequence.

    python3 demos/read_miss.py [--mermaid]

The six arrows are the direct read transaction: the processor asks its L1,
the L1 asks the L2 bank, the bank fetches the line from memory and the
answers travel back.  Steps without a message (the init handshake and the
processor's own bookkeeping) show up as notes in the mermaid output only.
"""

import sys

from tsar_dhccp.cli import census_note, render_trace
from tsar_dhccp.dhccp import Config, build_system, quiescent
from tsar_dhccp.explorer import Trace, TraceStep

SCRIPT = [
    "init(",
    "pc[0].s_p_send_rd(a=0)",
    "pc[0].c_t_Empty_ReadWaitEmpty(a=0",
    "l2[0].t_Empty_GetWaitRd(a=0",
    "mem.t_Get(a=0)",
    "l2[0].t_GetWaitRd_Valid(a=0",
    "pc[0].c_t_ReadWaitEmpty_Valid(a=0",
    "pc[0].s_p_recv_rd(a=0)",
]


def scripted(model, prefixes):
    state = model.initial_state()
    steps = []
    for p in prefixes:
        (k, nxt), = [(k, t) for k, t in model.step(state) if str(model.events[k]).startswith(p)]
        steps.append(TraceStep(model.events[k], nxt))
        state = nxt
    return Trace(model, model.initial_state(), steps)


def main():
    model = build_system(Config(1, 1, 1))
    trace = scripted(model, SCRIPT)
    fmt = "mermaid" if "--mermaid" in sys.argv else "text"
    print(render_trace(trace, fmt, census_note(model, trace.final)), end="")
    print(f"# quiescent at the end: {quiescent(model, trace.final)}")


if __name__ == "__main__":
    main()

"""Reproduce the counting bug of the pre-fix protocol.

    python3 demos/legacy_deadlock.py [--mermaid]

Two processors, two lines, threshold 1.  In the legacy automata a direct
response and a broadcast invalidation can cross on independent networks.
The bank registers a reader that has already thrown the data away, so its
records name a copy nobody holds.  A later cleanup from the cache that
really has the line matches nothing, is never acknowledged, and blocks the
cleanup network for good.  The fixed automata, explored on the same
configuration, have no deadlock.
"""

import sys
import time

from tsar_dhccp.cli import census_note, nearest_trace, render_trace
from tsar_dhccp.dhccp import Config, L1Loc, build_system, sharer_census
from tsar_dhccp.explorer import explore


def main():
    fmt = "mermaid" if "--mermaid" in sys.argv else "text"
    for variant in ("fixed", "legacy"):
        t0 = time.perf_counter()
        g = explore(build_system(Config(2, 2, 1, variant=variant)))
        print(f"# {variant:6s} (2,2,1): {g.n_states} states, {g.n_edges} edges, "
              f"{len(g.deadlocks)} deadlocks, {time.perf_counter() - t0:.1f}s")
    m = g.model
    trace = nearest_trace(g, g.deadlocks)
    print(f"# shortest deadlock trace, {len(trace)} steps")
    print(render_trace(trace, fmt, census_note(m, trace.final)), end="")
    # where the bank's bookkeeping and the caches disagree
    lay = m.layout
    for n, s in enumerate(trace.states):
        for b in range(2):
            listed = {s[c] for v, c in zip(lay.l2_v[b], lay.l2_c[b]) if s[v]}
            # a listed sharer that is empty, with no cleanup on the way
            wrong = {i for i in listed if s[lay.l1_state[i]] == L1Loc.L1_EMPTY}
            if wrong:
                print(f"# step {n} ({trace.steps[n - 1].event}): l2[{b}] lists "
                      f"L1_{min(wrong)} as a sharer, but that cache dropped the line")
                break
        else:
            continue
        break
    s = trace.final
    for b in range(2):
        listed = sorted(s[c] for v, c in zip(lay.l2_v[b], lay.l2_c[b]) if s[v])
        print(f"# deadlock: l2[{b}] n_copies={m.value(s, f'l2[{b}].n_copies')} sharers={listed} "
              f"holders={sorted(lay.holders(s, b))} census={sharer_census(m, s, b)}")
    pending = [c for c in lay.chan_full if s[lay.chan_full[c]]]
    print(f"# undelivered: {', '.join(pending)}")


if __name__ == "__main__":
    main()

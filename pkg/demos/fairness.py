"""Why read liveness needs more than weak per-component fairness.

    python3 demos/fairness.py

With one processor a pending read is always answered.  With two, the
second L1 can keep the shared request channel busy with writes: the first
L1 is enabled only in between, so a weakly fair scheduler may starve it.
The lasso below is replay-checked before it is printed.
"""

from tsar_dhccp.checker import FairnessSpec, check_response_liveness, verify_lasso
from tsar_dhccp.cli import render_trace
from tsar_dhccp.dhccp import Config, build_system
from tsar_dhccp.explorer import explore

REQ, RESP = "pending_read(0)", "read_answered(0)"


def main():
    for key in [(1, 1, 1), (2, 1, 1)]:
        g = explore(build_system(Config(*key)))
        for name, fair in [("no fairness", FairnessSpec.none()),
                           ("weak fairness", FairnessSpec.per_component(g.model))]:
            r = check_response_liveness(g, REQ, RESP, fair)
            print(f"{key} {name:13s}: {'holds' if r.holds else 'fails'} "
                  f"({r.pending_states} pending states)")
    r = check_response_liveness(g, REQ, RESP, FairnessSpec.per_component(g.model))
    assert verify_lasso(g, r.lasso, REQ, RESP, FairnessSpec.per_component(g.model))
    print(f"\nfair lasso at (2,1,1): stem {len(r.lasso.stem)} steps, cycle {len(r.lasso.cycle)} steps")
    print(render_trace(r.lasso), end="")


if __name__ == "__main__":
    main()

"""State-space sizes of the fixed protocol for small configurations.

    python3 demos/state_space.py

Prints one row per configuration in the shape of the report the CLI writes,
next to the reference sizes the published tooling found.  The model elides
some actions, so only the order of magnitude and the growth pattern are
expected to match.
"""

from tsar_dhccp.cli import RunRow, render_report
from tsar_dhccp.dhccp import Config, build_system
from tsar_dhccp.explorer import explore

REFERENCE = {(1, 1, 1): 51, (1, 2, 1): 555, (2, 1, 1): 7070, (2, 2, 2): 68401}
CONFIGS = [(1, 1, 1), (1, 2, 1), (2, 1, 1), (2, 1, 2), (2, 2, 2), (2, 2, 1)]


def main():
    rows = []
    for key in CONFIGS:
        g = explore(build_system(Config(*key)))
        rows.append(RunRow(Config(*key), g.n_states, g.n_edges, len(g.deadlocks),
                           g.stats.time_s, g.stats.mem_mb, g.capped))
    print(render_report(rows), end="")
    print()
    for r in rows:
        ref = REFERENCE.get(r.config.key)
        if ref:
            print(f"{r.config}: {r.states} states, reference {ref}, ratio {r.states / ref:.2f}")


if __name__ == "__main__":
    main()

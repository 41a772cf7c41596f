"""Command-line front end.

    tsar-dhccp --proc 1..2 --l2 1,2 --th 1 --check deadlock,invariants --out runs/
    tsar-dhccp messages

Exit status: 0 all checks passed, 1 usage error, 2 some run was capped,
3 some property was violated (a cap takes precedence).
"""

from __future__ import annotations

import argparse
import itertools
import logging
import os
import sys
from dataclasses import dataclass, field

from .checker import (
    FairnessSpec, check_invariant_everywhere, check_properties, check_response_liveness,
    parse_property_file, verdict_tsv,
)
from .checker.liveness import Lasso
from .dhccp import Config, ConfigError, Msg, build_system, message_table_tsv
from .explorer import DEFAULT_MAX_STATES, ExploreOptions, StateGraph, Trace, explore

log = logging.getLogger("tsar_dhccp")

CHECKS = ("deadlock", "invariants", "liveness", "ctl")
REPORT_HEADER = ("PROC", "L2", "TH", "States", "Edges", "Deadlocks", "Time_s", "Mem_MB", "Verdicts")

EXIT_OK, EXIT_USAGE, EXIT_CAPPED, EXIT_VIOLATION = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def parse_int_list(text: str) -> list[int]:
    """``"1,3..5"`` -> ``[1, 3, 4, 5]``."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            raise UsageError(f"empty item in {text!r}")
        lo, sep, hi = part.partition("..")
        try:
            vals = range(int(lo), int(hi) + 1) if sep else [int(lo)]
        except ValueError:
            raise UsageError(f"not an integer list: {text!r}") from None
        if not vals:
            raise UsageError(f"empty range {part!r}")
        out.extend(v for v in vals if v not in out)
    return out


# ---------------------------------------------------------------------------
# trace rendering


def _lane(path: str) -> str:
    """Short lane alias for an instance path (``pc[1].c`` -> ``L1_1``)."""
    if path.startswith("pc["):
        i = path[3:path.index("]")]
        return ("P" if path.endswith(".p") else "L1_") + i
    if path.startswith("l2["):
        return "L2_" + path[3:path.index("]")]
    return "MEM" if path == "mem" else path


def _receiver(chan: str, pc: str | None, addr: int, ident: int | None) -> str:
    name = chan.rsplit("chan_", 1)[-1]
    if name == "PL1DTREQ":
        return f"{pc}.c"
    if name == "L1PDTRSP":
        return f"{pc}.p"
    if name in ("L1L2DTREQ", "L1L2CPRSP", "MEML2DTRSP"):
        return f"l2[{addr}]"
    if name == "L2MEMDTREQ":
        return "mem"
    return f"pc[{ident}].c"


@dataclass
class Arrow:
    step: int
    src: str
    dst: str
    msg: str
    addr: int
    ident: int | None

    def label(self) -> str:
        args = f"{self.addr}" if self.ident is None else f"{self.addr},{self.ident}"
        return f"{self.msg}({args})"


def _owner(event) -> str:
    for p in event.instances:
        if not p.rsplit(".", 1)[-1].startswith("chan_"):
            return p
    return event.instances[0] if event.instances else "?"


def _messages(model, before, after, event, step: int) -> list[Arrow]:
    lay = model.layout
    out = []
    for chan, full in lay.chan_full.items():
        if not after[full]:
            continue
        tslot = lay.chan_type[chan]
        aslot = model.slot_of[chan + ".addr"]
        islot = model.slot_of.get(chan + ".id")
        same = before[full] and all(before[s] == after[s] for s in (tslot, aslot, islot) if s is not None)
        if same:
            continue
        addr, ident = after[aslot], (after[islot] if islot is not None else None)
        pc = chan.split(".")[0] if chan.startswith("pc[") else None
        try:
            msg = Msg(after[tslot]).name
        except ValueError:
            msg = f"type{after[tslot]}"
        out.append(Arrow(step, _owner(event), _receiver(chan, pc, addr, ident), msg, addr, ident))
    return out


def _lanes(model) -> list[str]:
    cfg = model.config
    lanes = []
    for i in range(cfg.nb_proc):
        lanes += [f"pc[{i}].p", f"pc[{i}].c"]
    lanes += [f"l2[{b}]" for b in range(cfg.nb_l2)]
    return lanes + ["mem"]


def census_note(model, state) -> str:
    lay = model.layout
    parts = [f"l2[{a}].n_copies={state[lay.l2_ncopies[a]]} census={lay.census(state, a)}"
             for a in range(model.config.nb_l2)]
    return "; ".join(parts)


def render_trace(trace: Trace | Lasso, fmt: str = "text", final_note: str | None = None) -> str:
    """Sequence chart of a trace (or lasso: stem, then the repeated cycle)."""
    if fmt not in ("text", "mermaid"):
        raise ValueError(f"unknown trace format {fmt!r}")
    if isinstance(trace, Lasso):
        stem, cycle = trace.stem, trace.cycle
    else:
        stem, cycle = trace, []
    model = stem.model
    if getattr(model, "layout", None) is None:
        raise ValueError("trace does not belong to a protocol model")
    if not stem.replay():
        raise ValueError("trace does not replay against its model")

    items: list = []  # ("arrow", Arrow) | ("note", step, owner, text) | ("loop",)
    prev = stem.initial
    steps = list(stem.steps)
    for n, st in enumerate(steps + cycle, 1):
        if n == len(steps) + 1:
            items.append(("loop",))
        arrows = _messages(model, prev, st.state, st.event, n)
        if arrows:
            items += [("arrow", a) for a in arrows]
        else:
            items.append(("note", n, _owner(st.event), str(st.event)))
        prev = st.state

    lines = []
    if fmt == "text":
        for it in items:
            if it[0] == "arrow":
                a = it[1]
                lines.append(f"step {a.step}: {_lane(a.src)} -> {_lane(a.dst)} : {a.label()}")
            elif it[0] == "loop":
                lines.append("loop:")
        if cycle:
            lines.append("end loop")
        if final_note:
            lines.append(f"final: {final_note}")
    else:
        lines.append("sequenceDiagram")
        for lane in _lanes(model):
            lines.append(f"    participant {_lane(lane)} as {lane}")
        in_loop = False
        for it in items:
            if it[0] == "arrow":
                a = it[1]
                lines.append(f"    {_lane(a.src)}->>{_lane(a.dst)}: {a.step}. {a.label()}")
            elif it[0] == "note":
                lines.append(f"    Note over {_lane(it[2])}: {it[1]}. {it[3]}")
            else:
                lines.append("    loop forever")
                in_loop = True
        if in_loop:
            lines.append("    end")
        if final_note:
            lines.append(f"    Note over {_lane(_lanes(model)[0])},{_lane('mem')}: {final_note}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# runs


@dataclass
class RunSpec:
    procs: list[int]
    l2s: list[int]
    ths: list[int]
    variant: str = "fixed"
    l2_eviction: bool = False
    checks: tuple[str, ...] = ("deadlock",)
    props: str | None = None
    max_states: int = DEFAULT_MAX_STATES
    max_seconds: float | None = None
    trace_format: str = "text"
    out: str | None = None
    search_order: str = "bfs"

    def configs(self) -> list[Config]:
        combos = list(itertools.product(self.procs, self.l2s, self.ths))
        out = []
        for p, b, t in combos:
            try:
                out.append(Config(p, b, t, self.variant, self.l2_eviction))
            except ConfigError:
                if len(combos) == 1:
                    raise
                log.info("skipping invalid combination %s", (p, b, t))
        if not out:
            raise ConfigError("no valid configuration in the requested ranges")
        return sorted(out, key=lambda c: c.key)


@dataclass
class RunRow:
    config: Config
    states: int
    edges: int
    deadlocks: int
    time_s: float
    mem_mb: float
    capped: bool
    verdicts: dict[str, str] = field(default_factory=dict)
    files: list[str] = field(default_factory=list)

    @property
    def violated(self) -> bool:
        return any(v == "FAIL" for v in self.verdicts.values())


def render_report(rows: list[RunRow]) -> str:
    lines = ["\t".join(REPORT_HEADER)]
    for r in sorted(rows, key=lambda r: r.config.key):
        states = f"{r.states}+" if r.capped else str(r.states)
        verdicts = "CAPPED" if r.capped else (
            ",".join(f"{k}={v}" for k, v in r.verdicts.items()) or "-")
        lines.append("\t".join(map(str, (*r.config.key, states, r.edges, r.deadlocks,
                                         f"{r.time_s:.2f}", f"{r.mem_mb:.1f}", verdicts))))
    return "\n".join(lines) + "\n"


class _TraceWriter:
    def __init__(self, spec: RunSpec, cfg: Config):
        self.spec, self.cfg = spec, cfg
        self.count: dict[str, int] = {}
        self.files: list[str] = []

    def write(self, kind: str, trace, note: str | None = None) -> str:
        n = self.count.get(kind, 0) + 1
        self.count[kind] = n
        name = f"trace-{self.cfg}-{kind}-{n}.txt"
        if self.spec.out is None:
            return name
        path = os.path.join(self.spec.out, name)
        with open(path, "w") as fh:
            fh.write(render_trace(trace, self.spec.trace_format, note))
        self.files.append(path)
        return name


def run_config(spec: RunSpec, cfg: Config) -> RunRow:
    model = build_system(cfg)
    g = explore(model, ExploreOptions(spec.max_states, spec.max_seconds, spec.search_order))
    row = RunRow(cfg, g.stats.states, g.stats.edges, len(g.deadlocks), g.stats.time_s,
                 g.stats.mem_mb, g.capped)
    if g.capped:
        return row
    tw = _TraceWriter(spec, cfg)
    if "deadlock" in spec.checks:
        row.verdicts["deadlock"] = "PASS" if not g.deadlocks else "FAIL"
        if g.deadlocks:
            t = nearest_trace(g, g.deadlocks)
            tw.write("deadlock", t, census_note(model, t.final))
    if "invariants" in spec.checks:
        f = " && ".join(f"(quiescent -> census_ok({a}))" for a in range(cfg.nb_l2))
        r = check_invariant_everywhere(g, f)
        row.verdicts["invariants"] = "PASS" if r.holds else "FAIL"
        if not r.holds:
            tw.write("invariant", r.counterexample, census_note(model, r.counterexample.final))
    if "liveness" in spec.checks:
        fair = FairnessSpec.per_component(model)
        ok = True
        for i in range(cfg.nb_proc):
            lr = check_response_liveness(g, f"pending_read({i})", f"read_answered({i})", fair)
            if not lr.holds:
                ok = False
                tw.write("liveness", lr.lasso)
        row.verdicts["liveness"] = "PASS" if ok else "FAIL"
    if spec.props is not None:
        with open(spec.props) as fh:
            text = fh.read()
        verdicts = check_properties(g, text)
        for v in verdicts:
            if not v.holds and v.counterexample is not None:
                v.counterexample_file = tw.write("ctl", v.counterexample)
        row.verdicts["ctl"] = "PASS" if all(v.holds for v in verdicts) else "FAIL"
        if spec.out is not None:
            path = os.path.join(spec.out, f"verdicts-{cfg}.tsv")
            with open(path, "w") as fh:
                fh.write(verdict_tsv(verdicts))
            tw.files.append(path)
    row.files = tw.files
    return row


def nearest_trace(g: StateGraph, targets) -> Trace:
    """Shortest trace to any of ``targets``."""
    import numpy as np

    from .checker.ctl import _trace_to_first

    mask = np.zeros(g.n_states, dtype=bool)
    mask[list(targets)] = True
    return _trace_to_first(g, mask)


def run(spec: RunSpec) -> tuple[int, list[RunRow]]:
    if spec.out is not None:
        os.makedirs(spec.out, exist_ok=True)
    rows = [run_config(spec, cfg) for cfg in spec.configs()]
    if any(r.capped for r in rows):
        status = EXIT_CAPPED
    elif any(r.violated for r in rows):
        status = EXIT_VIOLATION
    else:
        status = EXIT_OK
    report = render_report(rows)
    if spec.out is not None:
        with open(os.path.join(spec.out, "report.tsv"), "w") as fh:
            fh.write(report)
    return status, rows


# ---------------------------------------------------------------------------
# argument parsing


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tsar-dhccp",
        description="Explore and check DHCCP configurations. "
                    "Use 'tsar-dhccp messages' for the message-code table.")
    p.add_argument("--proc", required=True, help="NB_PROC values, e.g. 1,2 or 1..3")
    p.add_argument("--l2", required=True, help="NB_L2 values")
    p.add_argument("--th", default="1", help="CACHE_TH values (default 1)")
    p.add_argument("--variant", choices=("fixed", "legacy"), default="fixed")
    p.add_argument("--l2-eviction", action="store_true", help="enable nondeterministic L2 replacement")
    p.add_argument("--check", default="deadlock",
                   help=f"comma-separated subset of {','.join(CHECKS)} (default deadlock)")
    p.add_argument("--props", metavar="FILE", help="CTL property file, one formula per line")
    p.add_argument("--max-states", type=_positive_int, default=DEFAULT_MAX_STATES)
    p.add_argument("--max-seconds", type=_positive_float)
    p.add_argument("--search-order", choices=("bfs", "dfs"), default="bfs")
    p.add_argument("--trace-format", choices=("text", "mermaid"), default="text")
    p.add_argument("--out", metavar="DIR", help="directory for report, traces and verdicts")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def spec_from_args(args) -> RunSpec:
    procs, l2s, ths = parse_int_list(args.proc), parse_int_list(args.l2), parse_int_list(args.th)
    checks = tuple(c.strip() for c in args.check.split(",") if c.strip())
    bad = [c for c in checks if c not in CHECKS]
    if bad:
        raise UsageError(f"unknown check(s): {', '.join(bad)}")
    if "ctl" in checks and not args.props:
        raise UsageError("--check ctl needs --props FILE")
    if args.props:
        if not os.path.exists(args.props):
            raise UsageError(f"no such property file: {args.props}")
        with open(args.props) as fh:
            parse_property_file(fh.read())  # fail early on syntax errors
    spec = RunSpec(procs, l2s, ths, args.variant, args.l2_eviction, checks, args.props,
                   args.max_states, args.max_seconds, args.trace_format, args.out,
                   args.search_order)
    spec.configs()  # validates
    return spec


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv[:1] == ["messages"]:
        mp = argparse.ArgumentParser(prog="tsar-dhccp messages",
                                     description="Print the message-code table as TSV.")
        mp.add_argument("--no-legacy", action="store_true", help="omit the legacy-only RSP_B_INV")
        margs = mp.parse_args(argv[1:])
        sys.stdout.write(message_table_tsv(include_legacy=not margs.no_legacy))
        return EXIT_OK
    if argv[:1] == ["run"]:
        argv = argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        spec = spec_from_args(args)
    except (UsageError, ConfigError, ValueError) as e:
        parser.print_usage(sys.stderr)
        print(f"tsar-dhccp: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    status, rows = run(spec)
    sys.stdout.write(render_report(rows))
    for r in rows:
        for f in r.files:
            log.info("wrote %s", f)
    return status


if __name__ == "__main__":
    sys.exit(main())

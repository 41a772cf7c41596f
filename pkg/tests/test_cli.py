import os

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import READ_MISS_P0, drive
from tsar_dhccp.cli import (
    RunRow, UsageError, census_note, main, nearest_trace, parse_int_list, render_report,
    render_trace,
)
from tsar_dhccp.dhccp import Config, build_system
from tsar_dhccp.explorer import Trace, TraceStep


def read_miss_trace():
    m = build_system(Config(1, 1, 1))
    states = drive(m, READ_MISS_P0)
    steps = []
    for a, b in zip(states, states[1:]):
        k = next(k for k, t in m.step(a) if t == b)
        steps.append(TraceStep(m.events[k], b))
    return Trace(m, states[0], steps)


def test_int_lists():
    assert parse_int_list("1") == [1]
    assert parse_int_list("1,3..5") == [1, 3, 4, 5]
    assert parse_int_list("2..2,2") == [2]
    for bad in ("", "a", "3..1", "1,,2"):
        with pytest.raises(UsageError):
            parse_int_list(bad)


@given(st.lists(st.integers(1, 20), min_size=1, max_size=6))
def test_int_list_roundtrip(xs):
    assert parse_int_list(",".join(map(str, xs))) == list(dict.fromkeys(xs))


def test_read_miss_renders_six_messages():
    text = render_trace(read_miss_trace())
    msgs = [line.rsplit(": ", 1)[1].split("(")[0] for line in text.splitlines()]
    assert msgs == ["DT_RD", "RD", "GET", "RSP_GET", "RSP_RD", "RSP_DT_RD"]
    assert text.splitlines()[0] == "step 2: P0 -> L1_0 : DT_RD(0)"
    assert "L2_0 -> MEM : GET(0)" in text


def test_mermaid_output_and_stability():
    t = read_miss_trace()
    out = render_trace(t, "mermaid")
    lines = out.splitlines()
    assert lines[0] == "sequenceDiagram"
    assert sum("->>" in ln for ln in lines) == 6
    assert any(ln.strip().startswith("Note over") for ln in lines)  # internal steps
    assert render_trace(read_miss_trace(), "mermaid") == out
    empty = render_trace(Trace(t.model, t.initial, []), "mermaid").splitlines()
    assert empty[0] == "sequenceDiagram" and all("participant" in ln for ln in empty[1:])
    with pytest.raises(ValueError):
        render_trace(t, "svg")


def test_tampered_trace_is_rejected():
    t = read_miss_trace()
    bad = Trace(t.model, t.initial, t.steps[:2] + t.steps[3:])
    with pytest.raises(ValueError):
        render_trace(bad)


@pytest.mark.slow
def test_legacy_deadlock_final_note(graphs):
    g = graphs(2, 2, 1, "legacy")
    t = nearest_trace(g, g.deadlocks)
    note = census_note(g.model, t.final)
    assert "n_copies=1 census=0" in note
    out = render_trace(t, "mermaid", note)
    assert out.splitlines()[-1].strip().startswith("Note over") and note in out.splitlines()[-1]


def _row(p, b, t, capped=False):
    return RunRow(Config(p, b, t), 10, 12, 0, 0.5, 20.0, capped, {} if capped else {"deadlock": "PASS"})


def test_report_sorted_and_capped():
    rows = render_report([_row(2, 2, 2), _row(1, 2, 1), _row(2, 1, 1, capped=True), _row(1, 1, 1)])
    lines = [ln.split("\t") for ln in rows.splitlines()]
    assert lines[0] == ["PROC", "L2", "TH", "States", "Edges", "Deadlocks", "Time_s", "Mem_MB", "Verdicts"]
    assert [tuple(ln[:3]) for ln in lines[1:]] == [("1", "1", "1"), ("1", "2", "1"), ("2", "1", "1"), ("2", "2", "2")]
    capped = lines[3]
    assert capped[3] == "10+" and capped[-1] == "CAPPED"
    assert lines[1][-1] == "deadlock=PASS"


def test_exit_ok_and_report(tmp_path, capsys):
    assert main(["--proc", "1", "--l2", "1", "--th", "1", "--check", "deadlock,invariants,liveness",
                 "--out", str(tmp_path)]) == 0
    report = (tmp_path / "report.tsv").read_text()
    row = report.splitlines()[1].split("\t")
    assert row[:3] == ["1", "1", "1"] and row[5] == "0"
    assert row[-1] == "deadlock=PASS,invariants=PASS,liveness=PASS"
    assert capsys.readouterr().out == report


@pytest.mark.parametrize("argv", [
    ["--proc", "0", "--l2", "1"],
    ["--l2", "1"],
    ["--proc", "1", "--l2", "1", "--check", "speed"],
    ["--proc", "1", "--l2", "1", "--th", "2"],
    ["--proc", "1", "--l2", "1", "--check", "ctl"],
    ["--proc", "1", "--l2", "1", "--max-states", "0"],
])
def test_usage_errors(argv):
    assert main(argv) == 1


def test_exit_capped(tmp_path):
    assert main(["--proc", "1..2", "--l2", "1", "--max-states", "20", "--out", str(tmp_path)]) == 2
    rows = (tmp_path / "report.tsv").read_text().splitlines()[1:]
    assert len(rows) == 2 and all(r.endswith("CAPPED") and "+" in r.split("\t")[3] for r in rows)


def test_exit_violation_and_verdict_file(tmp_path):
    props = tmp_path / "p.ctl"
    props.write_text("# one true, one false\nAG(!deadlock)\nAG(l2[0].n_copies == 0)\n")
    out = tmp_path / "out"
    assert main(["run", "--proc", "1", "--l2", "1", "--check", "deadlock,ctl", "--props", str(props),
                 "--out", str(out)]) == 3
    verdicts = (out / "verdicts-1-1-1.tsv").read_text().splitlines()
    assert verdicts[1] == "AG(!deadlock)\tPASS\t33\t-"
    name = verdicts[2].split("\t")[3]
    assert verdicts[2].split("\t")[1] == "FAIL" and name == "trace-1-1-1-ctl-1.txt"
    first = (out / name).read_text()
    assert first.startswith("step ")
    # re-running produces byte-identical traces
    out2 = tmp_path / "again"
    main(["--proc", "1", "--l2", "1", "--check", "deadlock,ctl", "--props", str(props), "--out", str(out2)])
    assert (out2 / name).read_text() == first


def test_multi_range_skips_invalid_combinations(tmp_path):
    assert main(["--proc", "1..2", "--l2", "1", "--th", "1..2", "--out", str(tmp_path)]) == 0
    keys = [tuple(r.split("\t")[:3]) for r in (tmp_path / "report.tsv").read_text().splitlines()[1:]]
    assert keys == [("1", "1", "1"), ("2", "1", "1"), ("2", "1", "2")]


def test_messages_subcommand(capsys):
    assert main(["messages"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "0\tDT_RD\tPL1DTREQ" and len(out) == 19
    assert main(["messages", "--no-legacy"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 18


def test_module_entry_point():
    import subprocess
    import sys
    r = subprocess.run([sys.executable, "-m", "tsar_dhccp", "--proc", "1", "--l2", "1"],
                       capture_output=True, text=True, cwd=os.getcwd())
    assert r.returncode == 0 and r.stdout.startswith("PROC\tL2\tTH")

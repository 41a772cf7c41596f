"""Property files and the verdict report."""

from __future__ import annotations

from dataclasses import dataclass

from ..explorer import StateGraph
from .ctl import eval_ctl
from .formula import parse_property_file

__all__ = ["Verdict", "check_properties", "verdict_tsv", "VERDICT_HEADER"]

VERDICT_HEADER = "formula\tverdict\tstates_satisfying\tcounterexample_file"


@dataclass
class Verdict:
    formula: str
    holds: bool
    satisfying: int
    counterexample: object = None  # Trace or None
    counterexample_file: str = "-"

    @property
    def verdict(self) -> str:
        return "PASS" if self.holds else "FAIL"


def check_properties(graph: StateGraph, text: str) -> list[Verdict]:
    """Evaluate every formula of a property file on ``graph``."""
    out = []
    for src, f in parse_property_file(text):
        r = eval_ctl(graph, f)
        out.append(Verdict(src, r.holds, r.count, r.counterexample))
    return out


def verdict_tsv(verdicts: list[Verdict]) -> str:
    rows = [VERDICT_HEADER]
    for v in verdicts:
        rows.append(f"{v.formula}\t{v.verdict}\t{v.satisfying}\t{v.counterexample_file}")
    return "\n".join(rows) + "\n"

"""State invariants, CTL and fair response liveness over explored graphs."""

from .formula import (
    And, Atom, Const, Derived, Formula, FormulaSyntaxError, Implies, Not, Or, Template,
    Temporal, Until, expand_templates, is_state_formula, parse_formula, parse_property_file,
)
from .ctl import (
    AtomError, CTLResult, InvariantResult, Kripke, UnsoundOnPartialGraph,
    check_invariant_everywhere, eval_ctl, kripke_of, state_matrix,
)
from .liveness import (
    FairnessSpec, Lasso, LivenessResult, check_response_liveness, event_owner, verify_lasso,
)
from .report import VERDICT_HEADER, Verdict, check_properties, verdict_tsv

__all__ = [
    "And", "Atom", "Const", "Derived", "Formula", "FormulaSyntaxError", "Implies", "Not", "Or",
    "Template", "Temporal", "Until", "expand_templates", "is_state_formula", "parse_formula",
    "parse_property_file", "AtomError", "CTLResult", "InvariantResult", "Kripke",
    "UnsoundOnPartialGraph", "check_invariant_everywhere", "eval_ctl", "kripke_of",
    "state_matrix", "FairnessSpec", "Lasso", "LivenessResult", "check_response_liveness",
    "event_owner", "verify_lasso", "VERDICT_HEADER", "Verdict", "check_properties", "verdict_tsv",
]

"""Executable model of the DHCCP coherence protocol (fixed and legacy variants)."""

from .messages import CHANNEL_OF, Msg, message_table_tsv
from .automata import L1Loc, L2Loc, ProcLoc, fixed_l1_automaton, fixed_l2_automaton, legacy_variants
from .system import (
    Config, ConfigError, Layout, build_system, census_ok, owner_of, quiescent, sharer_census,
    system_types,
)

__all__ = [
    "CHANNEL_OF", "Msg", "message_table_tsv", "L1Loc", "L2Loc", "ProcLoc",
    "fixed_l1_automaton", "fixed_l2_automaton", "legacy_variants",
    "Config", "ConfigError", "Layout", "build_system", "census_ok", "owner_of",
    "quiescent", "sharer_census", "system_types",
]

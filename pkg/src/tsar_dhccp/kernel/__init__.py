"""Execution semantics for hierarchical guarded transition systems."""

from .decls import (
    Assign, Call, CompositeType, InstanceDecl, LeafType, ModelError, SyncDecl,
    TransitionDecl, VarDecl, array_decls,
)
from .expr import A, C, FALSE, TRUE, P, V, all_of, any_of
from .model import (
    DomainError, Event, GuardError, SystemModel, fire, ground_model,
    initial_state, successors,
)

__all__ = [
    "A", "Assign", "C", "Call", "CompositeType", "DomainError", "Event",
    "FALSE", "GuardError", "InstanceDecl", "LeafType", "ModelError", "P",
    "SyncDecl", "SystemModel", "TRUE", "TransitionDecl", "V", "VarDecl",
    "all_of", "any_of", "array_decls", "fire", "ground_model",
    "initial_state", "successors",
]

"""Region-based concurrent object runtime with a deterministic scheduler."""

from .contracts import Clause, Contract
from .errors import (
    ConfigError,
    ContractError,
    ContractViolation,
    DeadlockDetected,
    IllegalDereference,
    OwnershipViolation,
    PoisonedRegion,
    ScoopError,
    StepBudgetExceeded,
    UnknownRegion,
    UnknownTarget,
)
from .model import ACTIVE, PASSIVE, ObjectState, Routine, SeparateRef
from .runtime import Runtime, run_until_quiescent
from .trace import Trace, TraceEvent

__all__ = [
    "ACTIVE", "PASSIVE", "Clause", "ConfigError", "Contract", "ContractError", "ContractViolation",
    "DeadlockDetected", "IllegalDereference", "ObjectState", "OwnershipViolation", "PoisonedRegion",
    "Routine", "Runtime", "ScoopError", "SeparateRef", "StepBudgetExceeded", "Trace", "TraceEvent",
    "UnknownRegion", "UnknownTarget", "run_until_quiescent",
]

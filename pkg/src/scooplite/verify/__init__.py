from .checks import Report, Violation, check_order_and_sync, check_race_freedom, verify_trace
from .deadlock import WaitForGraph, detect_deadlock
from .explore import Budget, ExplorationResult, OutcomeDigest, explore_interleavings

__all__ = [
    "Budget", "ExplorationResult", "OutcomeDigest", "Report", "Violation", "WaitForGraph",
    "check_order_and_sync", "check_race_freedom", "detect_deadlock", "explore_interleavings",
    "verify_trace",
]

"""Exception hierarchy shared by every module of the runtime."""

from __future__ import annotations


class ScoopError(Exception):
    """Base class for all errors raised by the runtime itself."""


class ConfigError(ScoopError, ValueError):
    """A scenario or CLI parameter is out of range."""


class UnknownRegion(ScoopError):
    pass


class UnknownTarget(ScoopError):
    pass


class OwnershipViolation(ScoopError):
    """A processor touched a region it neither serves nor holds."""


class IllegalDereference(OwnershipViolation):
    """Field access through a reference whose region is not currently held."""


class ContractError(ScoopError):
    """A contract is malformed (unknown formal, impure evaluation, bad clause name)."""


class ContractViolation(ScoopError):
    def __init__(self, clause: str, kind: str, values: dict | None = None):
        self.clause = clause
        self.kind = kind
        self.values = dict(values or {})
        shown = ", ".join(f"{k}={v!r}" for k, v in sorted(self.values.items()))
        super().__init__(f"{kind} clause '{clause}' violated" + (f" ({shown})" if shown else ""))


class PoisonedRegion(ScoopError):
    def __init__(self, region: int, cause: BaseException):
        self.region = region
        self.cause = cause
        super().__init__(f"region {region} poisoned by {type(cause).__name__}: {cause}")


class DeadlockDetected(ScoopError):
    """No transition is enabled while processors still wait.

    ``cycle`` lists the processors of a wait-for cycle; it is empty when the
    run is stuck on wait conditions that can never become true.
    """

    def __init__(self, cycle: list[int], blocked: list[int], trace=None):
        self.cycle = list(cycle)
        self.blocked = list(blocked)
        self.trace = trace
        if self.cycle:
            msg = "wait-for cycle " + " -> ".join(map(str, self.cycle + self.cycle[:1]))
        else:
            msg = f"stalled on wait conditions, blocked processors {self.blocked}"
        super().__init__(msg)


class StepBudgetExceeded(ScoopError):
    def __init__(self, budget: int, trace=None):
        self.budget = budget
        self.trace = trace
        super().__init__(f"run did not quiesce within {budget} steps")


class MalformedTrace(ScoopError, ValueError):
    pass

"""Schedule exploration: exhaustive over every scheduler choice, or sampled by seed."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Callable

from ..errors import DeadlockDetected, StepBudgetExceeded
from .checks import Report, verify_trace

Install = Callable[[Any], Any]
ExtraChecks = Callable[[Any, Any], list[Report]]


@dataclass(frozen=True)
class Budget:
    """Either ``exhaustive`` (max steps per schedule) or ``seeds`` (sample count)."""

    exhaustive: int | None = None
    seeds: int | None = None
    base_seed: int = 0
    max_schedules: int = 100_000

    def __post_init__(self) -> None:
        if (self.exhaustive is None) == (self.seeds is None):
            raise ValueError("give exactly one of exhaustive depth or seed count")
        if any(v is not None and v < 1 for v in (self.exhaustive, self.seeds, self.max_schedules)):
            raise ValueError("budget must be positive")


@dataclass(frozen=True)
class OutcomeDigest:
    states: str
    verdicts: tuple[tuple[str, bool], ...]

    def hexdigest(self) -> str:
        text = self.states + "\n" + ";".join(f"{n}={int(ok)}" for n, ok in self.verdicts)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class ScheduleOutcome:
    seed: int | None
    path: tuple[int, ...]
    status: str
    digest: OutcomeDigest
    reports: list[Report]
    cycle: list[int] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return self.status != "quiescent" or not all(r.passed for r in self.reports)

    def replay_hint(self) -> str:
        if self.seed is not None:
            return f"seed={self.seed}"
        return "path=" + (",".join(map(str, self.path)) or "-")


@dataclass
class ExplorationResult:
    outcomes: list[ScheduleOutcome] = field(default_factory=list)
    truncated: bool = False

    @property
    def schedules(self) -> int:
        return len(self.outcomes)

    @property
    def digests(self) -> set[OutcomeDigest]:
        return {o.digest for o in self.outcomes}

    @property
    def failures(self) -> list[ScheduleOutcome]:
        return [o for o in self.outcomes if o.failed]

    def count(self, status: str) -> int:
        return sum(o.status == status for o in self.outcomes)


def run_schedule(install: Install, seed: int = 0, path: tuple[int, ...] | None = None,
                 max_steps: int = 100_000, extra: ExtraChecks | None = None,
                 ) -> tuple[ScheduleOutcome, tuple[tuple[int, int], ...]]:
    """Run one schedule.

    With ``path`` the scheduler follows those choice indices (0 past its end)
    and the seed is ignored; otherwise the seeded draw decides.  Also returns
    the (choice, options) pairs seen at every branching step.
    """
    from ..runtime import Runtime

    taken: list[tuple[int, int]] = []
    choose = None
    if path is not None:
        def choose(n: int) -> int:
            pos = len(taken)
            i = path[pos] if pos < len(path) else 0
            if not 0 <= i < n:
                raise ValueError(f"path index {i} out of range at choice {pos} ({n} options)")
            taken.append((i, n))
            return i

    rt = Runtime(seed)
    install(rt)
    cycle: list[int] = []
    try:
        rt.run(max_steps, choose)
    except DeadlockDetected as exc:
        cycle = exc.cycle
    except StepBudgetExceeded:
        pass
    trace = rt.trace
    reports = verify_trace(trace)
    if extra is not None:
        reports += extra(rt, trace)
    verdicts = tuple((r.name, r.passed) for r in reports) + (
        ("deadlock_free", trace.status != "deadlock"),
        ("within_budget", trace.status != "budget"),
    )
    digest = OutcomeDigest(rt.object_states(), verdicts)
    outcome = ScheduleOutcome(None if path is not None else seed,
                              tuple(c for c, _ in taken), trace.status, digest, reports, cycle)
    return outcome, tuple(taken)


def explore_interleavings(install: Install, budget: Budget,
                          extra: ExtraChecks | None = None) -> ExplorationResult:
    """Run the scenario under every schedule (exhaustive) or under
    ``budget.seeds`` consecutive seeds, verifying each resulting trace."""
    result = ExplorationResult()
    if budget.seeds is not None:
        for seed in range(budget.base_seed, budget.base_seed + budget.seeds):
            outcome, _ = run_schedule(install, seed=seed, extra=extra)
            result.outcomes.append(outcome)
        return result

    prefix: tuple[int, ...] = ()
    while True:
        outcome, taken = run_schedule(install, path=prefix, max_steps=budget.exhaustive,
                                      extra=extra)
        result.outcomes.append(outcome)
        # Depth-first backtracking: bump the deepest choice that has siblings left.
        stack = list(taken)
        while stack and stack[-1][0] == stack[-1][1] - 1:
            stack.pop()
        if not stack:
            return result
        if result.schedules >= budget.max_schedules:
            result.truncated = True
            return result
        prefix = tuple(c for c, _ in stack[:-1]) + (stack[-1][0] + 1,)

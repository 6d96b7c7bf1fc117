"""Domain types: regions, processors, objects and separate references."""

from __future__ import annotations

import enum
import inspect
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from .contracts import Clause, Contract
from .errors import ContractError

ACTIVE = "active"
PASSIVE = "passive"
REGION_KINDS = (ACTIVE, PASSIVE)


@dataclass(frozen=True, order=True)
class SeparateRef:
    region: int
    object: int

    def __str__(self) -> str:
        return f"@{self.region}.{self.object}"


@dataclass(frozen=True)
class Routine:
    """A routine body plus its contract.

    The body is called as ``body(ctx, self, *args)``.  It may be a plain
    function (runs to completion in one go) or a generator function that
    yields requests built by ``ctx.call``; the value sent back is the
    ticket of an asynchronous command or the result of a synchronous call.
    """

    body: Callable[..., Any]
    query: bool = False
    require: tuple[Clause, ...] = ()
    ensure: tuple[Clause, ...] = ()
    formals: tuple[str, ...] = field(init=False)
    contract: Contract = field(init=False)

    def __post_init__(self) -> None:
        params = list(inspect.signature(self.body).parameters)
        if len(params) < 2:
            raise ContractError(f"routine body {self.body.__name__} must take (ctx, self, ...)")
        formals = ("self", *params[2:])
        contract = Contract(tuple(self.require), tuple(self.ensure))
        contract.validate(formals)
        object.__setattr__(self, "formals", formals)
        object.__setattr__(self, "contract", contract)

    @property
    def arity(self) -> int:
        return len(self.formals) - 1


@dataclass
class ObjectState:
    """Initial field values and the routine table of one object."""

    fields: dict[str, Any] = field(default_factory=dict)
    routines: Mapping[str, Routine] = field(default_factory=dict)


@dataclass
class ObjectRecord:
    id: int
    region: int
    fields: dict[str, Any]
    routines: Mapping[str, Routine]


@dataclass
class Region:
    id: int
    kind: str
    processor: int | None = None
    objects: list[int] = field(default_factory=list)
    holder: int | None = None
    wait_queue: list[int] = field(default_factory=list)
    poisoned: BaseException | None = None
    creator: int | None = None
    # Bumped whenever a holder that may have mutated the region releases it.
    version: int = 0


class Status(enum.Enum):
    IDLE = "idle"
    READY = "ready"
    BLOCKED = "blocked"


@dataclass
class Processor:
    id: int
    home: int
    request_queue: deque = field(default_factory=deque)
    frames: list = field(default_factory=list)
    status: Status = Status.IDLE
    blocked_on: Any = None
    held: set[int] = field(default_factory=set)
    # (value, exception) to hand to the top frame on the next resume.
    resume_with: tuple[Any, BaseException | None] = (None, None)


def is_separate(home: int | None, ref: SeparateRef) -> bool:
    """True iff ``ref`` points outside the acting processor's home region."""
    return ref.region != home

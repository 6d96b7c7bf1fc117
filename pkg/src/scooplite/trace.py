"""Trace events and their line-oriented serialization.

One event per line: ``index kind processor region ticket detail``.  Absent
fields are written as ``-``; ``detail`` is a ``|``-separated list of
``key=value`` pairs and is the only field that may contain spaces.  A
trace file ends with ``END <count> <status>`` so that truncation is
detectable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable

from .errors import MalformedTrace
from .model import SeparateRef

REGION_CREATED = "REGION_CREATED"
OBJECT_CREATED = "OBJECT_CREATED"
CALL_LOGGED = "CALL_LOGGED"
RESERVATION_QUEUED = "RESERVATION_QUEUED"
WAIT_TRUE = "WAIT_CHECKED(true)"
WAIT_FALSE = "WAIT_CHECKED(false)"
RESERVATION_ACQUIRED = "RESERVATION_ACQUIRED"
APPLICATION_STARTED = "APPLICATION_STARTED"
APPLICATION_COMPLETED = "APPLICATION_COMPLETED"
QUERY_ISSUED = "QUERY_ISSUED"
QUERY_RESULT = "QUERY_RESULT"
EXCEPTION = "EXCEPTION"
RESERVATION_RELEASED = "RESERVATION_RELEASED"
# Emitted when a body obtains a view of an object outside its target.
DEREF = "DEREF"

KINDS = frozenset({
    REGION_CREATED, OBJECT_CREATED, CALL_LOGGED, RESERVATION_QUEUED, WAIT_TRUE,
    WAIT_FALSE, RESERVATION_ACQUIRED, APPLICATION_STARTED, APPLICATION_COMPLETED,
    QUERY_ISSUED, QUERY_RESULT, EXCEPTION, RESERVATION_RELEASED, DEREF,
})

STATUSES = ("quiescent", "deadlock", "budget")


def format_value(value: Any) -> str:
    if value is None:
        return "unit"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, SeparateRef)):
        return str(value)
    if isinstance(value, BaseException):
        return f"{type(value).__name__}: {value}".replace("|", "/").replace("\n", " ")
    if isinstance(value, (tuple, list)):
        return "(" + ";".join(format_value(v) for v in value) + ")"
    return repr(value).replace("|", "/").replace("\n", " ").replace(",", ";")


def fmt_detail(**pairs: Any) -> str:
    parts = [f"{k}={v}" for k, v in pairs.items() if v is not None]
    return "|".join(parts) if parts else "-"


def parse_detail(detail: str) -> dict[str, str]:
    if detail == "-":
        return {}
    out = {}
    for part in detail.split("|"):
        key, sep, value = part.partition("=")
        if not sep:
            raise MalformedTrace(f"bad detail component {part!r}")
        out[key] = value
    return out


def parse_regions(text: str) -> frozenset[int]:
    return frozenset(int(x) for x in text.split(",") if x)


def _opt(x: int | None) -> str:
    return "-" if x is None else str(x)


@dataclass(frozen=True)
class TraceEvent:
    index: int
    kind: str
    processor: int | None
    region: int | None
    ticket: int | None
    detail: str = "-"

    def line(self) -> str:
        return (f"{self.index} {self.kind} {_opt(self.processor)} "
                f"{_opt(self.region)} {_opt(self.ticket)} {self.detail}")

    @cached_property
    def info(self) -> dict[str, str]:
        return parse_detail(self.detail)

    @classmethod
    def parse(cls, line: str) -> "TraceEvent":
        parts = line.split(" ", 5)
        if len(parts) != 6:
            raise MalformedTrace(f"expected 6 fields: {line!r}")
        idx, kind, proc, region, ticket, detail = parts
        if kind not in KINDS:
            raise MalformedTrace(f"unknown event kind {kind!r}")

        def num(s: str) -> int | None:
            if s == "-":
                return None
            if not s.isdigit():
                raise MalformedTrace(f"bad integer field {s!r} in {line!r}")
            return int(s)

        index = num(idx)
        if index is None:
            raise MalformedTrace(f"missing index in {line!r}")
        event = cls(index, kind, num(proc), num(region), num(ticket), detail)
        event.info  # validate detail eagerly
        return event


@dataclass
class Trace:
    events: list[TraceEvent] = field(default_factory=list)
    status: str = "quiescent"

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def dumps(self) -> str:
        body = "".join(e.line() + "\n" for e in self.events)
        return body + f"END {len(self.events)} {self.status}\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "Trace":
        lines = text.split("\n")
        if not text.endswith("\n") or len(lines) < 2:
            raise MalformedTrace("trace is truncated (no final newline)")
        lines = lines[:-1]
        footer = lines[-1].split(" ")
        if len(footer) != 3 or footer[0] != "END" or footer[2] not in STATUSES:
            raise MalformedTrace("trace is truncated (missing END line)")
        events = [TraceEvent.parse(line) for line in lines[:-1]]
        if not footer[1].isdigit() or int(footer[1]) != len(events):
            raise MalformedTrace("END line count does not match the number of events")
        trace = cls(events, footer[2])
        check_indices(trace.events)
        return trace

    @classmethod
    def read(cls, path: str | Path) -> "Trace":
        try:
            text = Path(path).read_text()
        except (OSError, UnicodeDecodeError) as exc:
            raise MalformedTrace(f"cannot read {path}: {exc}") from exc
        return cls.loads(text)


def check_indices(events: Iterable[TraceEvent]) -> None:
    for expected, event in enumerate(events):
        if event.index != expected:
            raise MalformedTrace(f"index {event.index} at position {expected}; indices must be dense")


def reindex(events: Iterable[TraceEvent]) -> list[TraceEvent]:
    return [TraceEvent(i, e.kind, e.processor, e.region, e.ticket, e.detail)
            for i, e in enumerate(events)]

"""Offline checks over recorded traces."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .. import trace as tr
from ..errors import MalformedTrace
from ..trace import Trace, TraceEvent, check_indices, parse_regions

# Violation names, shared with the mutation catalogue.
INTERVAL_OVERLAP = "interval_overlap"
PARTIAL_RESERVATION = "partial_reservation"
ILLEGAL_DEREFERENCE = "illegal_dereference"
WAIT_UNCHECKED = "wait_unchecked"
UNRESERVED_APPLICATION = "unreserved_application"
UNTERMINATED = "unterminated_application"
PER_CALLER_ORDER = "per_caller_order"
QUERY_SILENCE = "query_silence"

_NEEDS_TICKET = {
    tr.CALL_LOGGED, tr.RESERVATION_QUEUED, tr.WAIT_TRUE, tr.WAIT_FALSE, tr.RESERVATION_ACQUIRED,
    tr.APPLICATION_STARTED, tr.APPLICATION_COMPLETED, tr.QUERY_ISSUED, tr.QUERY_RESULT,
    tr.EXCEPTION, tr.RESERVATION_RELEASED,
}
_NEEDS_REGIONS = {tr.RESERVATION_QUEUED, tr.RESERVATION_ACQUIRED, tr.RESERVATION_RELEASED}


@dataclass(frozen=True)
class Violation:
    name: str
    indices: tuple[int, ...]
    detail: str = ""

    def __str__(self) -> str:
        where = ",".join(map(str, self.indices))
        return f"{self.name} events={where}" + (f" {self.detail}" if self.detail else "")


@dataclass
class Report:
    name: str
    violations: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def names(self) -> set[str]:
        return {v.name for v in self.violations}

    def lines(self) -> list[str]:
        if self.passed:
            return [f"VERDICT {self.name} pass -"]
        return [f"VERDICT {self.name} fail {v}" for v in self.violations]


def _well_formed(trace: Trace) -> None:
    check_indices(trace.events)
    for e in trace.events:
        if e.kind in _NEEDS_TICKET and e.ticket is None:
            raise MalformedTrace(f"event {e.index} ({e.kind}) has no ticket")
        if e.kind in _NEEDS_REGIONS and "regions" not in e.info:
            raise MalformedTrace(f"event {e.index} ({e.kind}) lists no regions")


def check_race_freedom(trace: Trace) -> Report:
    """Region exclusivity and reservation discipline.

    Flags overlapping holds or applications on one region, acquisitions that
    differ from the queued region set, applications without a reservation,
    unchecked wait conditions and dereferences of unheld regions.
    """
    _well_formed(trace)
    report = Report("race_freedom")
    flag = report.violations.append
    queued: dict[int, tuple[frozenset[int], bool, int]] = {}
    hold: dict[int, tuple[int, int]] = {}          # region -> (ticket, acquire index)
    held_by: dict[int | None, set[int]] = defaultdict(set)
    acquired: dict[int, frozenset[int]] = {}
    occupant: dict[int, tuple[int, int]] = {}      # region -> (ticket, start index)
    open_apps: dict[int, tuple[int, frozenset[int]]] = {}
    prev: TraceEvent | None = None
    for e in trace.events:
        t = e.ticket
        if e.kind == tr.RESERVATION_QUEUED:
            queued[t] = (parse_regions(e.info["regions"]), "wait" in e.info, e.index)
        elif e.kind == tr.RESERVATION_ACQUIRED:
            regions = parse_regions(e.info["regions"])
            if t in queued and queued[t][0] != regions:
                flag(Violation(PARTIAL_RESERVATION, (queued[t][2], e.index),
                               f"queued={sorted(queued[t][0])} acquired={sorted(regions)}"))
            for r in sorted(regions):
                if r in hold and hold[r][0] != t:
                    flag(Violation(INTERVAL_OVERLAP, (hold[r][1], e.index), f"region={r} hold"))
                hold[r] = (t, e.index)
            held_by[e.processor] |= regions
            acquired[t] = regions
        elif e.kind == tr.RESERVATION_RELEASED:
            for r in parse_regions(e.info["regions"]):
                if r in hold and hold[r][0] == t:
                    del hold[r]
                held_by[e.processor].discard(r)
            acquired.pop(t, None)
        elif e.kind == tr.APPLICATION_STARTED:
            regions = acquired.get(t)
            if regions is None:
                flag(Violation(UNRESERVED_APPLICATION, (e.index,), f"ticket={t}"))
                regions = frozenset()
            if t in queued and queued[t][1] and not (
                    prev is not None and prev.kind == tr.WAIT_TRUE and prev.ticket == t):
                flag(Violation(WAIT_UNCHECKED, (e.index,), f"ticket={t}"))
            for r in sorted(regions):
                if r in occupant and occupant[r][0] != t:
                    flag(Violation(INTERVAL_OVERLAP, (occupant[r][1], e.index), f"region={r}"))
                occupant[r] = (t, e.index)
            open_apps[t] = (e.index, regions)
        elif e.kind in (tr.APPLICATION_COMPLETED, tr.EXCEPTION):
            if t in open_apps:
                _, regions = open_apps.pop(t)
                for r in regions:
                    if occupant.get(r, (None,))[0] == t:
                        del occupant[r]
        elif e.kind == tr.DEREF:
            if e.region not in held_by[e.processor]:
                flag(Violation(ILLEGAL_DEREFERENCE, (e.index,),
                               f"processor={e.processor} region={e.region}"))
        prev = e
    if trace.status == "quiescent":
        for t, (start, _) in sorted(open_apps.items()):
            flag(Violation(UNTERMINATED, (start,), f"ticket={t}"))
    return report


def check_order_and_sync(trace: Trace) -> Report:
    """Per-(caller, region) application order and query-caller silence."""
    _well_formed(trace)
    report = Report("order_and_sync")
    flag = report.violations.append
    logged: dict[tuple, list[int]] = defaultdict(list)
    key_of: dict[int, tuple] = {}
    logged_at: dict[int, int] = {}
    for e in trace.events:
        if e.kind == tr.CALL_LOGGED:
            key = (e.processor, e.region)
            logged[key].append(e.ticket)
            key_of[e.ticket] = key
            logged_at[e.ticket] = e.index
    started: dict[tuple, list[tuple[int, int]]] = defaultdict(list)
    waiting: dict[int, tuple[int, int]] = {}  # caller -> (ticket, QUERY_ISSUED index)
    for e in trace.events:
        if e.processor in waiting:
            ticket, issued = waiting[e.processor]
            if e.kind == tr.QUERY_RESULT and e.ticket == ticket:
                del waiting[e.processor]
            else:
                flag(Violation(QUERY_SILENCE, (issued, e.index),
                               f"caller={e.processor} ticket={ticket}"))
        if e.kind == tr.APPLICATION_STARTED and e.ticket in key_of:
            started[key_of[e.ticket]].append((e.ticket, e.index))
            if logged_at[e.ticket] > e.index:
                flag(Violation(PER_CALLER_ORDER, (e.index, logged_at[e.ticket]),
                               f"ticket={e.ticket} applied before it was logged"))
        elif e.kind == tr.QUERY_ISSUED:
            waiting[e.processor] = (e.ticket, e.index)
    for key, runs in started.items():
        rank = {t: i for i, t in enumerate(logged[key])}
        for (t1, i1), (t2, i2) in zip(runs, runs[1:]):
            if rank[t1] > rank[t2]:
                caller = "-" if key[0] is None else key[0]
                flag(Violation(PER_CALLER_ORDER, (i1, i2),
                               f"caller={caller} region={key[1]} tickets={t1},{t2}"))
    return report


def verify_trace(trace: Trace) -> list[Report]:
    return [check_race_freedom(trace), check_order_and_sync(trace)]

"""Trace mutation catalogue: each entry injects exactly one kind of
violation into a valid trace, and is keyed by the violation name the
checkers must report for it."""

from __future__ import annotations

from collections import defaultdict
from typing import Callable

from .. import trace as tr
from ..trace import Trace, TraceEvent, parse_regions, reindex
from . import checks


class NoMutationSite(ValueError):
    """The trace has no place where this mutation applies."""


def _overlap(trace: Trace) -> Trace:
    events = list(trace.events)
    acquired: dict[int, frozenset[int]] = {}
    last_done: dict[int, int] = {}  # region -> ticket of last completed application
    done_at: dict[int, int] = {}
    for e in events:
        if e.kind == tr.RESERVATION_ACQUIRED:
            acquired[e.ticket] = parse_regions(e.info["regions"])
        elif e.kind == tr.APPLICATION_COMPLETED and e.ticket in acquired:
            for r in acquired[e.ticket]:
                last_done[r] = e.ticket
            done_at[e.ticket] = e.index
        elif e.kind == tr.APPLICATION_STARTED and e.ticket in acquired:
            for r in sorted(acquired[e.ticket]):
                if r in last_done:
                    first = last_done[r]
                    moved = [x for x in events[done_at[first]:e.index]
                             if x.ticket == first and x.kind in
                             (tr.APPLICATION_COMPLETED, tr.RESERVATION_RELEASED)]
                    rest = [x for x in events if x not in moved]
                    at = rest.index(e) + 1
                    return Trace(reindex(rest[:at] + moved + rest[at:]), trace.status)
    raise NoMutationSite("no two applications share a region")


def _reorder(trace: Trace) -> Trace:
    events = list(trace.events)
    logged: dict[tuple, list[int]] = defaultdict(list)
    started = {e.ticket for e in events if e.kind == tr.APPLICATION_STARTED}
    for pos, e in enumerate(events):
        if e.kind == tr.CALL_LOGGED and e.ticket in started:
            key = (e.processor, e.region)
            logged[key].append(pos)
            if len(logged[key]) == 2:
                a, b = logged[key]
                events[a], events[b] = events[b], events[a]
                return Trace(reindex(events), trace.status)
    raise NoMutationSite("no caller applied two calls on one region")


def _silence(trace: Trace) -> Trace:
    events = list(trace.events)
    for pos, e in enumerate(events):
        if e.kind != tr.QUERY_RESULT:
            continue
        for nxt in range(pos + 1, len(events)):
            if events[nxt].processor == e.processor:
                moved = events[pos]
                del events[pos]
                events.insert(nxt, moved)
                return Trace(reindex(events), trace.status)
    raise NoMutationSite("no query caller acts after its result")


def _partial(trace: Trace) -> Trace:
    events = list(trace.events)
    for pos, e in enumerate(events):
        if e.kind == tr.RESERVATION_ACQUIRED:
            regions = sorted(parse_regions(e.info["regions"]))
            if len(regions) >= 2:
                detail = tr.fmt_detail(regions=",".join(map(str, regions[1:])))
                events[pos] = TraceEvent(e.index, e.kind, e.processor, e.region, e.ticket, detail)
                return Trace(events, trace.status)
    raise NoMutationSite("no multi-region reservation")


CATALOGUE: dict[str, Callable[[Trace], Trace]] = {
    checks.INTERVAL_OVERLAP: _overlap,
    checks.PER_CALLER_ORDER: _reorder,
    checks.QUERY_SILENCE: _silence,
    checks.PARTIAL_RESERVATION: _partial,
}


def mutate(trace: Trace, name: str) -> Trace:
    return CATALOGUE[name](trace)

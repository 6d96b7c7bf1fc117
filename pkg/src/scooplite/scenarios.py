"""Canonical programs written against the runtime, with their domain checks.

Each scenario has an installer (creates regions/objects and spawns the
initial calls), a statistics function that works from the trace alone,
and domain checks returned as verify ``Report`` objects.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Callable

from . import trace as tr
from .contracts import Clause
from .errors import ConfigError, DeadlockDetected, StepBudgetExceeded
from .model import ACTIVE, PASSIVE, ObjectState, Routine, SeparateRef
from .runtime import DEFAULT_MAX_STEPS, Runtime
from .trace import Trace
from .verify.checks import Report, Violation, verify_trace


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    params: dict[str, int] = field(default_factory=dict)
    seed: int = 0


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    trace: Trace
    stats: dict[str, Any]
    verdicts: list[Report]
    cycle: list[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.verdicts)


@dataclass(frozen=True)
class Scenario:
    name: str
    defaults: dict[str, int]
    minimums: dict[str, int]
    install: Callable[..., None]
    stats: Callable[..., dict]
    checks: Callable[..., list[Report]]
    expect_deadlock: bool = False

    def validate(self, params: dict[str, int]) -> dict[str, int]:
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise ConfigError(f"{self.name}: unknown parameters {sorted(unknown)}")
        full = {**self.defaults, **params}
        for key, low in self.minimums.items():
            if not isinstance(full[key], int) or isinstance(full[key], bool) or full[key] < low:
                raise ConfigError(f"{self.name}: {key} must be an integer >= {low}, got {full[key]!r}")
        return full

    def installer(self, params: dict[str, int]) -> Callable[[Runtime], None]:
        full = self.validate(params)
        return lambda rt: self.install(rt, **full)

    def extra_checks(self, params: dict[str, int]) -> Callable[[Runtime, Trace], list[Report]]:
        full = self.validate(params)
        return lambda rt, trace: self.checks(rt, trace, **full)


def _started(trace: Trace) -> dict[int, tr.TraceEvent]:
    return {e.ticket: e for e in trace if e.kind == tr.APPLICATION_STARTED}


def _args(event: tr.TraceEvent) -> list[str]:
    return event.info.get("args", "").split(",")


def _completed(trace: Trace, routine: str) -> list[tr.TraceEvent]:
    return [e for e in trace if e.kind == tr.APPLICATION_COMPLETED and e.info.get("routine") == routine]


# --------------------------------------------------------- dining philosophers

def _eat(ctx, self, left, right):
    for fork in sorted({left, right}):
        ctx.deref(fork).uses += 1
    self.meals += 1


def _live(ctx, self):
    for _ in range(self.rounds):
        yield ctx.call(ctx.current, "eat", self.left, self.right)


PHILOSOPHER = {
    "live": Routine(_live),
    "eat": Routine(_eat, ensure=(
        Clause("meals = old meals + 1", lambda self, old: self.meals == old.self.meals + 1),)),
}


def install_philosophers(rt: Runtime, n: int, rounds: int, passive_forks: int = 0) -> None:
    kind = PASSIVE if passive_forks else ACTIVE
    forks = [rt.create_object(rt.create_region(kind), ObjectState({"uses": 0})) for _ in range(n)]
    for i in range(n):
        ref = rt.create_object(rt.create_region(ACTIVE), ObjectState(
            {"left": forks[i], "right": forks[(i + 1) % n], "meals": 0, "rounds": rounds},
            PHILOSOPHER))
        rt.spawn(ref, "live")


def philosopher_stats(trace: Trace, **_: Any) -> dict:
    """Meals per philosopher, in processor order, counted from the trace."""
    diners = sorted({e.processor for e in trace
                     if e.kind == tr.APPLICATION_STARTED and e.info.get("routine") == "live"})
    meals = Counter(e.processor for e in _completed(trace, "eat"))
    return {"meals": [meals[p] for p in diners]}


def philosopher_checks(rt: Runtime, trace: Trace, n: int, rounds: int, **_: Any) -> list[Report]:
    report = Report("philosopher_progress")
    if trace.status == "quiescent":
        meals = philosopher_stats(trace)["meals"]
        if len(meals) != n or any(m != rounds for m in meals):
            report.violations.append(Violation("meals", (), f"meals={meals} expected {rounds} each"))
        states = [rec.fields["meals"] for rec in rt.objects.values() if "meals" in rec.fields]
        if states != [rounds] * n:
            report.violations.append(Violation("meals_state", (), f"object meals={states}"))
    return [report]


# ----------------------------------------------------------- producer-consumer

def _is_full(ctx, self):
    return len(self.items) >= self.capacity


def _is_empty(ctx, self):
    return len(self.items) == 0


def _put(ctx, self, x):
    self.items = self.items + (x,)


def _item(ctx, self):
    return self.items[0]


def _remove(ctx, self):
    self.items = self.items[1:]


BUFFER = {
    "is_full": Routine(_is_full, query=True),
    "is_empty": Routine(_is_empty, query=True),
    "item": Routine(_item, query=True, require=(
        Clause("not is_empty", lambda self: not self.is_empty),)),
    "put": Routine(_put, require=(Clause("not is_full", lambda self: not self.is_full),), ensure=(
        Clause("count = old count + 1",
               lambda self, old: len(self.items) == len(old.self.items) + 1),)),
    "remove": Routine(_remove, require=(Clause("not is_empty", lambda self: not self.is_empty),)),
}


def _store(ctx, self, b, x):
    yield ctx.call(b, "put", x)


def _retrieve(ctx, self, b):
    x = yield ctx.call(b, "item")
    yield ctx.call(b, "remove")
    self.consumed = self.consumed + (x,)
    return x


def _produce(ctx, self):
    for x in self.items:
        yield ctx.call(ctx.current, "store", self.buffer, x)


def _consume(ctx, self):
    for _ in range(self.count):
        yield ctx.call(ctx.current, "retrieve", self.buffer)


PRODUCER = {
    "live": Routine(_produce),
    "store": Routine(_store, require=(Clause("not b.is_full", lambda b: not b.is_full),)),
}
CONSUMER = {
    "live": Routine(_consume),
    "retrieve": Routine(_retrieve, require=(Clause("not b.is_empty", lambda b: not b.is_empty),)),
}


def install_producer_consumer(rt: Runtime, capacity: int, producers: int, consumers: int,
                              items: int) -> None:
    buffer = rt.create_object(rt.create_region(ACTIVE),
                              ObjectState({"items": (), "capacity": capacity}, BUFFER))
    for p in range(producers):
        mine = tuple(range(p, items, producers))
        ref = rt.create_object(rt.create_region(ACTIVE),
                               ObjectState({"buffer": buffer, "items": mine}, PRODUCER))
        rt.spawn(ref, "live")
    for c in range(consumers):
        count = items // consumers + (1 if c < items % consumers else 0)
        ref = rt.create_object(rt.create_region(ACTIVE),
                               ObjectState({"buffer": buffer, "count": count, "consumed": ()},
                                           CONSUMER))
        rt.spawn(ref, "live")


def buffer_stats(trace: Trace, **_: Any) -> dict:
    """Produced and consumed sequences plus buffer occupancy, from the trace."""
    started = _started(trace)
    produced, consumed, occupancy = [], [], [0]
    for e in trace:
        if e.kind != tr.APPLICATION_COMPLETED:
            continue
        routine = e.info.get("routine")
        if routine == "store":
            produced.append(int(_args(started[e.ticket])[1]))
            occupancy.append(occupancy[-1] + 1)
        elif routine == "retrieve":
            consumed.append(int(e.info["result"]))
            occupancy.append(occupancy[-1] - 1)
    return {"produced": produced, "consumed": consumed, "occupancy": occupancy}


def buffer_checks(rt: Runtime, trace: Trace, capacity: int, producers: int, items: int,
                  **_: Any) -> list[Report]:
    stats = buffer_stats(trace)
    bounds = Report("buffer_bounds")
    bad = [i for i, k in enumerate(stats["occupancy"]) if not 0 <= k <= capacity]
    if bad:
        bounds.violations.append(Violation("occupancy", tuple(bad[:5]), f"capacity={capacity}"))
    fifo = Report("fifo")
    queue: deque[int] = deque()
    started = _started(trace)
    for e in trace:
        if e.kind != tr.APPLICATION_COMPLETED:
            continue
        routine = e.info.get("routine")
        if routine == "store":
            queue.append(int(_args(started[e.ticket])[1]))
        elif routine == "retrieve":
            got = int(e.info["result"])
            want = queue.popleft() if queue else None
            if got != want:
                fifo.violations.append(Violation("fifo", (e.index,), f"got={got} expected={want}"))
    if trace.status == "quiescent":
        if Counter(stats["consumed"]) != Counter(range(items)):
            fifo.violations.append(Violation("consumed_multiset", (), "consumed != produced"))
        if producers == 1 and stats["consumed"] != list(range(items)):
            fifo.violations.append(Violation("consumption_order", (), "single-producer order lost"))
    return [bounds, fifo]


# ------------------------------------------------------------------- hexapod

PROTRACTION_WAIT = ("me.legs_retracted", "partner.legs_down", "not partner.protraction_pending")


def _begin_protraction(ctx, self, me, partner):
    group = ctx.deref(me)
    group.legs_down = False
    group.protraction_pending = True


def _end_protraction(ctx, self, me, partner):
    group = ctx.deref(me)
    group.legs_down = True
    group.legs_retracted = False
    group.protraction_pending = False


def _begin_retraction(ctx, self, me, partner):
    ctx.deref(me).retraction_pending = True


def _end_retraction(ctx, self, me, partner):
    group = ctx.deref(me)
    group.legs_retracted = True
    group.retraction_pending = False


GAIT = ("begin_protraction", "end_protraction", "begin_retraction", "end_retraction")


def _walk(ctx, self):
    for _ in range(self.steps):
        for phase in GAIT:
            yield ctx.call(ctx.current, phase, self.me, self.partner)


CONTROLLER = {
    "live": Routine(_walk),
    "begin_protraction": Routine(_begin_protraction, require=(
        Clause("me.legs_retracted", lambda me: me.legs_retracted),
        Clause("partner.legs_down", lambda partner: partner.legs_down),
        Clause("not partner.protraction_pending", lambda partner: not partner.protraction_pending),
    )),
    "end_protraction": Routine(_end_protraction, require=(
        Clause("partner.legs_retracted", lambda partner: partner.legs_retracted),)),
    "begin_retraction": Routine(_begin_retraction, require=(
        Clause("me.legs_down", lambda me: me.legs_down),
        Clause("not me.legs_retracted", lambda me: not me.legs_retracted),)),
    "end_retraction": Routine(_end_retraction),
}


def install_hexapod(rt: Runtime, steps: int) -> None:
    groups = [rt.create_object(rt.create_region(PASSIVE), ObjectState({
        "legs_down": True, "legs_retracted": True,
        "protraction_pending": False, "retraction_pending": False})) for _ in range(2)]
    for i in range(2):
        ref = rt.create_object(rt.create_region(ACTIVE), ObjectState(
            {"me": groups[i], "partner": groups[1 - i], "steps": steps}, CONTROLLER))
        rt.spawn(ref, "live")


def gait_stats(trace: Trace, **_: Any) -> dict:
    """Protraction intervals [begin start, end completion] per leg group."""
    started = _started(trace)
    open_: dict[str, int] = {}
    intervals: dict[str, list[tuple[int, int]]] = {}
    for e in trace:
        if e.kind == tr.APPLICATION_STARTED and e.info.get("routine") == "begin_protraction":
            open_[_args(e)[0]] = e.index
        elif e.kind == tr.APPLICATION_COMPLETED and e.info.get("routine") == "end_protraction":
            group = _args(started[e.ticket])[0]
            intervals.setdefault(group, []).append((open_.pop(group), e.index))
    return {"protractions": intervals}


def gait_checks(rt: Runtime, trace: Trace, steps: int, **_: Any) -> list[Report]:
    alternation = Report("gait_alternation")
    spans = gait_stats(trace)["protractions"]
    flat = sorted((a, b, g) for g, ivs in spans.items() for a, b in ivs)
    for (a1, b1, g1), (a2, b2, g2) in zip(flat, flat[1:]):
        if a2 <= b1:
            alternation.violations.append(Violation("protraction_overlap", (a1, a2), f"{g1} {g2}"))
    if trace.status == "quiescent" and sum(len(v) for v in spans.values()) != 2 * steps:
        alternation.violations.append(Violation("protraction_count", (), f"expected {2 * steps}"))
    guarded = Report("gait_wait_condition")
    events = trace.events
    want = ",".join(PROTRACTION_WAIT)
    for e in events:
        if e.kind == tr.APPLICATION_STARTED and e.info.get("routine") == "begin_protraction":
            prev = events[e.index - 1] if e.index else None
            if not (prev and prev.kind == tr.WAIT_TRUE and prev.ticket == e.ticket
                    and prev.info.get("clauses") == want):
                guarded.violations.append(Violation("unguarded_protraction", (e.index,)))
    return [alternation, guarded]


# --------------------------------------------------------------- nested query

def _ping(ctx, self):
    self.seen = yield ctx.call(self.partner, "peek")


def _peek(ctx, self):
    return self.value


PINGER = {"ping": Routine(_ping), "peek": Routine(_peek, query=True)}


def install_nested_query(rt: Runtime) -> None:
    """Each side holds its own region while querying the other: a 2-cycle."""
    a = rt.create_object(rt.create_region(ACTIVE), ObjectState(
        {"partner": None, "value": 1, "seen": 0}, PINGER))
    b = rt.create_object(rt.create_region(ACTIVE), ObjectState(
        {"partner": a, "value": 2, "seen": 0}, PINGER))
    rt.fields(a)["partner"] = b
    rt.spawn(a, "ping")
    rt.spawn(b, "ping")


def nested_stats(trace: Trace, **_: Any) -> dict:
    return {"status": trace.status}


def nested_checks(rt: Runtime, trace: Trace, **_: Any) -> list[Report]:
    return []


# ------------------------------------------------------------------ exchanges

def _trade(ctx, self, amount):
    self.position += amount


def _position(ctx, self):
    return self.position


def _trade_all(ctx, self):
    for market in self.markets:
        for k in range(1, self.trades + 1):
            yield ctx.call(market, "trade", k)
    total = 0
    for market in self.markets:
        total += yield ctx.call(market, "position")
    self.total = total


MARKET = {"trade": Routine(_trade), "position": Routine(_position, query=True)}
TRADER = {"run": Routine(_trade_all)}


def install_exchanges(rt: Runtime, markets: int, trades: int) -> None:
    """Asynchronous trades on several markets, then one synchronous query each."""
    refs = tuple(rt.create_object(rt.create_region(ACTIVE), ObjectState({"position": 0}, MARKET))
                 for _ in range(markets))
    trader = rt.create_object(rt.create_region(ACTIVE), ObjectState(
        {"markets": refs, "trades": trades, "total": -1}, TRADER))
    rt.spawn(trader, "run")


def exchange_stats(trace: Trace, **_: Any) -> dict:
    positions = [int(e.info["value"]) for e in trace if e.kind == tr.QUERY_RESULT and "value" in e.info]
    return {"positions": positions, "total": sum(positions)}


def exchange_checks(rt: Runtime, trace: Trace, markets: int, trades: int, **_: Any) -> list[Report]:
    report = Report("portfolio")
    if trace.status == "quiescent":
        want = markets * trades * (trades + 1) // 2
        totals = [r.fields["total"] for r in rt.objects.values() if "total" in r.fields]
        if totals != [want]:
            report.violations.append(Violation("total", (), f"got {totals} expected {want}"))
    return [report]


# ------------------------------------------------------------------ registry

def _independent(ctx, self):
    self.ticks += 1


def install_independent(rt: Runtime, k: int) -> None:
    """k processors with one plain command each and nothing shared."""
    for _ in range(k):
        ref = rt.create_object(rt.create_region(ACTIVE),
                               ObjectState({"ticks": 0}, {"tick": Routine(_independent)}))
        rt.spawn(ref, "tick")


SCENARIOS: dict[str, Scenario] = {
    "philosophers": Scenario("philosophers", {"n": 5, "rounds": 10, "passive_forks": 0},
                             {"n": 1, "rounds": 0, "passive_forks": 0},
                             install_philosophers, philosopher_stats, philosopher_checks),
    "producer-consumer": Scenario(
        "producer-consumer", {"capacity": 1, "producers": 1, "consumers": 1, "items": 100},
        {"capacity": 1, "producers": 1, "consumers": 1, "items": 0},
        install_producer_consumer, buffer_stats, buffer_checks),
    "hexapod": Scenario("hexapod", {"steps": 50}, {"steps": 0},
                        install_hexapod, gait_stats, gait_checks),
    "nested-query": Scenario("nested-query", {}, {}, install_nested_query, nested_stats,
                             nested_checks, expect_deadlock=True),
    "exchanges": Scenario("exchanges", {"markets": 3, "trades": 4}, {"markets": 1, "trades": 0},
                          install_exchanges, exchange_stats, exchange_checks),
    "independent": Scenario("independent", {"k": 2}, {"k": 0}, install_independent,
                            lambda trace, **_: {}, lambda rt, trace, **_: []),
}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None


def run_scenario(config: ScenarioConfig, max_steps: int = DEFAULT_MAX_STEPS) -> ScenarioResult:
    """Run to quiescence (or deadlock/budget) and verify the trace.

    Deadlock and budget exhaustion are reported in the verdicts rather than
    raised, so the trace is always available.
    """
    scenario = get_scenario(config.name)
    params = scenario.validate(config.params)
    rt = Runtime(config.seed)
    scenario.install(rt, **params)
    cycle: list[int] = []
    try:
        rt.run(max_steps)
    except DeadlockDetected as exc:
        cycle = exc.cycle
    except StepBudgetExceeded:
        pass
    trace = rt.trace
    verdicts = verify_trace(trace) + scenario.checks(rt, trace, **params)
    liveness = Report("deadlock_free")
    if trace.status == "deadlock":
        liveness.violations.append(Violation("deadlock", (), "cycle=" + ",".join(map(str, cycle))))
    elif trace.status == "budget":
        liveness.violations.append(Violation("step_budget", (), f"max_steps={max_steps}"))
    verdicts.append(liveness)
    stats = scenario.stats(trace, **params)
    return ScenarioResult(config, trace, stats, verdicts, cycle)


def dining_philosophers(n: int, rounds: int, seed: int = 0, passive_forks: bool = False) -> ScenarioResult:
    return run_scenario(ScenarioConfig("philosophers",
                                       {"n": n, "rounds": rounds, "passive_forks": int(passive_forks)},
                                       seed))


def producer_consumer(capacity: int, producers: int, consumers: int, items: int,
                      seed: int = 0) -> ScenarioResult:
    return run_scenario(ScenarioConfig("producer-consumer", {
        "capacity": capacity, "producers": producers, "consumers": consumers, "items": items}, seed))


def hexapod_gait(steps: int, seed: int = 0) -> ScenarioResult:
    return run_scenario(ScenarioConfig("hexapod", {"steps": steps}, seed))


def nested_query(seed: int = 0, max_steps: int = 10_000) -> ScenarioResult:
    return run_scenario(ScenarioConfig("nested-query", {}, seed), max_steps)

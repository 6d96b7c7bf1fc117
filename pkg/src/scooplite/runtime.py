"""The scheduler.

Everything advances one transition at a time under a single logical
context.  A transition is one of

* ``grant``   - atomically reserve every region of a pending request and
                evaluate its wait condition in the same step;
* ``resume``  - run a ready processor's current body up to its next
                request (or to completion);
* ``deliver`` - hand a filled query reply to its blocked caller.

Which enabled transition fires is drawn from a seeded ``random.Random``
(or from an explicit chooser, which is how the explorer enumerates
schedules).  Everything else, such as an idle processor picking up the
head of its request queue, is deterministic bookkeeping done between
transitions.
"""

from __future__ import annotations

import inspect
import itertools
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Generator, Iterable

from . import trace as tr
from .contracts import (
    Contract,
    WaitCondition,
    check_assertions,
    check_postcondition,
    compile_precondition,
    evaluate_wait_condition,
    snapshot,
)
from .errors import (
    ConfigError,
    ContractError,
    DeadlockDetected,
    IllegalDereference,
    OwnershipViolation,
    PoisonedRegion,
    ScoopError,
    StepBudgetExceeded,
    UnknownRegion,
    UnknownTarget,
)
from .model import (
    ACTIVE,
    PASSIVE,
    REGION_KINDS,
    ObjectRecord,
    ObjectState,
    Processor,
    Region,
    Routine,
    SeparateRef,
    Status,
    is_separate,
)
from .trace import Trace, TraceEvent, fmt_detail, format_value

COMMAND = "command"
QUERY = "query"
GRANTED = "granted"
QUEUED = "queued"

DEFAULT_MAX_STEPS = 100_000

Chooser = Callable[[int], int]


@dataclass(frozen=True)
class CallRequest:
    """What a body yields: ``yield ctx.call(ref, "routine", *args)``."""

    target: SeparateRef
    routine: str
    args: tuple = ()


@dataclass
class QueryTicket:
    ticket: int
    filled: bool = False
    value: Any = None
    error: BaseException | None = None

    def fill(self, value: Any = None, error: BaseException | None = None) -> None:
        if self.filled:
            raise ScoopError(f"reply slot of ticket {self.ticket} written twice")
        self.filled, self.value, self.error = True, value, error


@dataclass
class CallSpec:
    caller: int | None
    target: SeparateRef
    routine: str
    args: tuple
    kind: str
    ticket: int | None
    contract: Contract
    executor: int | None = None
    reply: QueryTicket | None = None


@dataclass
class ReservationRequest:
    ticket: int
    requester: int
    regions: frozenset[int]
    wait_condition: WaitCondition
    call: CallSpec
    asserts: tuple = ()
    sync: bool = False
    # Region versions seen at the last false wait check; None = never checked.
    checked: dict[int, int] | None = None


@dataclass
class Frame:
    call: CallSpec
    routine: Routine
    request: ReservationRequest | None
    sync: bool
    asserts: tuple = ()
    gen: Generator | None = None
    started: bool = False
    old: Any = None


@dataclass(frozen=True, order=True)
class Transition:
    kind: str  # "deliver" < "grant" < "resume" keeps listing order stable
    key: int


class ObjectView:
    """Checked access to one object's fields.

    Every read and write verifies, at the moment of access, that the acting
    processor holds the object's region.  Zero-argument pure queries of the
    object's routine table read like fields (``b.is_full``).
    """

    __slots__ = ("_rt", "_pid", "_ref", "_writable")

    def __init__(self, rt: "Runtime", pid: int | None, ref: SeparateRef, writable: bool):
        object.__setattr__(self, "_rt", rt)
        object.__setattr__(self, "_pid", pid)
        object.__setattr__(self, "_ref", ref)
        object.__setattr__(self, "_writable", writable)

    @property
    def ref(self) -> SeparateRef:
        return self._ref

    def _record(self) -> ObjectRecord:
        self._rt._check_access(self._pid, self._ref.region)
        return self._rt.objects[self._ref.object]

    def __getattr__(self, name: str) -> Any:
        record = self._record()
        if name in record.fields:
            return record.fields[name]
        routine = record.routines.get(name)
        if (routine is not None and routine.query and routine.arity == 0
                and not inspect.isgeneratorfunction(routine.body)):
            view = ObjectView(self._rt, self._pid, self._ref, False)
            return routine.body(Context(self._rt, self._pid, None, pure=True), view)
        raise AttributeError(f"object {self._ref} has no field {name!r}")

    def __setattr__(self, name: str, value: Any) -> None:
        if not self._writable:
            raise ContractError(f"write to {self._ref}.{name} during pure evaluation")
        record = self._record()
        if name not in record.fields:
            raise AttributeError(f"object {self._ref} has no field {name!r} (closed value store)")
        record.fields[name] = value

    def __repr__(self) -> str:
        return f"<view {self._ref} by P{self._pid}>"


class Context:
    """The only channel through which a body reaches the runtime."""

    def __init__(self, rt: "Runtime", pid: int | None, frame: Frame | None, pure: bool = False):
        self._rt = rt
        self._frame = frame
        self._pure = pure
        self.processor = pid

    @property
    def current(self) -> SeparateRef | None:
        return self._frame.call.target if self._frame else None

    def call(self, target: SeparateRef, routine: str, *args: Any) -> CallRequest:
        if self._pure:
            raise ContractError("calls are not allowed during contract evaluation")
        return CallRequest(target, routine, tuple(args))

    def deref(self, ref: SeparateRef) -> ObjectView:
        if not isinstance(ref, SeparateRef):
            raise TypeError(f"deref expects a SeparateRef, got {ref!r}")
        rt = self._rt
        if ref.object not in rt.objects or rt.objects[ref.object].region != ref.region:
            raise UnknownTarget(f"no object {ref}")
        rt._check_access(self.processor, ref.region)
        if not self._pure:
            ticket = self._frame.call.ticket if self._frame else None
            rt._emit(tr.DEREF, self.processor, ref.region, ticket, object=ref.object)
        return ObjectView(rt, self.processor, ref, not self._pure)

    def is_separate(self, ref: SeparateRef) -> bool:
        return self._rt.is_separate(self.processor, ref)

    def create_region(self, kind: str) -> int:
        return self._rt.create_region(kind, creator=self.processor)

    def create_object(self, region: int, state: ObjectState) -> SeparateRef:
        return self._rt.create_object(region, state, creator=self.processor)


class Runtime:
    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = random.Random(seed)
        self.regions: dict[int, Region] = {}
        self.processors: dict[int, Processor] = {}
        self.objects: dict[int, ObjectRecord] = {}
        self.trace = Trace()
        self.steps = 0
        self.pending: dict[int, ReservationRequest] = {}
        self.calls: dict[int, CallSpec] = {}
        # (caller, target region) -> tickets logged but not yet started.
        self.outstanding: dict[tuple[int | None, int], list[int]] = defaultdict(list)
        self._region_ids = itertools.count()
        self._proc_ids = itertools.count()
        self._object_ids = itertools.count()
        self._tickets = itertools.count()
        self._deliverable: set[int] = set()

    # ------------------------------------------------------------------ events

    def _emit(self, what: str, proc: int | None, region: int | None, ticket: int | None,
              **detail: Any) -> TraceEvent:
        event = TraceEvent(len(self.trace.events), what, proc, region, ticket, fmt_detail(**detail))
        self.trace.events.append(event)
        return event

    def _ticket(self) -> int:
        return next(self._tickets)

    # --------------------------------------------------------------- structure

    def create_region(self, kind: str, creator: int | None = None) -> int:
        if kind not in REGION_KINDS:
            raise ConfigError(f"region kind must be one of {REGION_KINDS}, got {kind!r}")
        rid = next(self._region_ids)
        pid = None
        if kind == ACTIVE:
            pid = next(self._proc_ids)
            self.processors[pid] = Processor(pid, rid)
        self.regions[rid] = Region(rid, kind, processor=pid, creator=creator)
        self._emit(tr.REGION_CREATED, pid, rid, None, kind=kind)
        return rid

    def create_object(self, region: int, state: ObjectState, creator: int | None = None) -> SeparateRef:
        reg = self.regions.get(region)
        if reg is None:
            raise UnknownRegion(f"no region {region}")
        if creator is not None and region in self.processors[creator].held:
            pass
        elif reg.holder is None and creator in (reg.processor, reg.creator):
            pass
        else:
            who = "environment" if creator is None else f"processor {creator}"
            raise OwnershipViolation(f"{who} may not create objects in region {region}")
        oid = next(self._object_ids)
        self.objects[oid] = ObjectRecord(oid, region, dict(state.fields), state.routines)
        reg.objects.append(oid)
        self._emit(tr.OBJECT_CREATED, creator, region, None, object=oid)
        return SeparateRef(region, oid)

    def home(self, pid: int | None) -> int | None:
        return None if pid is None else self.processors[pid].home

    def is_separate(self, pid: int | None, ref: SeparateRef) -> bool:
        return is_separate(self.home(pid), ref)

    def _check_access(self, pid: int | None, region: int) -> None:
        if pid is None or region not in self.processors[pid].held:
            who = "environment" if pid is None else f"processor {pid}"
            raise IllegalDereference(f"{who} does not hold region {region}")

    def spawn(self, target: SeparateRef, routine: str, *args: Any) -> int:
        """Log a command from outside every processor (scenario setup)."""
        return self.log_command(None, CallRequest(target, routine, tuple(args)))

    # ------------------------------------------------------------ call logging

    def _resolve(self, req: CallRequest) -> tuple[ObjectRecord, Routine]:
        target = req.target
        if not isinstance(target, SeparateRef):
            raise UnknownTarget(f"call target must be a SeparateRef, got {target!r}")
        record = self.objects.get(target.object)
        if record is None or record.region != target.region:
            raise UnknownTarget(f"no object {target}")
        routine = record.routines.get(req.routine)
        if routine is None:
            raise UnknownTarget(f"object {target} has no routine {req.routine!r}")
        if len(req.args) != routine.arity:
            raise UnknownTarget(f"{req.routine} takes {routine.arity} arguments, got {len(req.args)}")
        for arg in req.args:
            if isinstance(arg, SeparateRef):
                rec = self.objects.get(arg.object)
                if rec is None or rec.region != arg.region:
                    raise UnknownTarget(f"argument {arg} does not exist")
        poisoned = self.regions[target.region].poisoned
        if poisoned is not None:
            raise PoisonedRegion(target.region, poisoned)
        return record, routine

    def _separateness(self, executor: int, call: CallSpec, routine: Routine) -> dict[str, bool]:
        home = self.home(executor)
        flags = {"self": is_separate(home, call.target)}
        for name, arg in zip(routine.formals[1:], call.args):
            flags[name] = isinstance(arg, SeparateRef) and is_separate(home, arg)
        return flags

    def log_command(self, caller: int | None, req: CallRequest) -> int | None:
        """Log a command.  Separate active targets return at once with the
        ticket; targets the caller holds, or passive ones, are applied by the
        caller itself (the caller is left READY or BLOCKED accordingly)."""
        record, routine = self._resolve(req)
        if routine.query:
            raise UnknownTarget(f"{req.routine} is a query; its result must be awaited")
        return self._issue(caller, req, routine, COMMAND)

    def call_query(self, caller: int, req: CallRequest) -> int | None:
        record, routine = self._resolve(req)
        if not routine.query:
            raise UnknownTarget(f"{req.routine} is a command")
        return self._issue(caller, req, routine, QUERY)

    def _issue(self, caller: int | None, req: CallRequest, routine: Routine, kind: str) -> int | None:
        region = self.regions[req.target.region]
        held = self.processors[caller].held if caller is not None else set()
        contract = routine.contract
        if req.target.region in held or region.kind == PASSIVE:
            if caller is None:
                raise OwnershipViolation("the environment cannot apply calls on passive regions")
            needed = {req.target.region} | {a.region for a in req.args if isinstance(a, SeparateRef)}
            missing = frozenset(needed - held)
            proc = self.processors[caller]
            if not missing:
                # Usual sequential semantics: applied in place, no scheduling events.
                call = CallSpec(caller, req.target, req.routine, req.args, kind, None, contract, caller)
                flags = self._separateness(caller, call, routine)
                _, asserts = compile_precondition(contract, {k: False for k in flags})
                proc.frames.append(Frame(call, routine, None, sync=True, asserts=asserts))
                proc.status = Status.READY
                proc.resume_with = (None, None)
                return None
            ticket = self._ticket()
            call = CallSpec(caller, req.target, req.routine, req.args, kind, ticket, contract, caller)
            self._log(call)
            self._queue_request(caller, call, routine, missing, sync=True)
            return ticket
        executor = region.processor
        ticket = self._ticket()
        call = CallSpec(caller, req.target, req.routine, req.args, kind, ticket, contract, executor)
        self._log(call)
        self.processors[executor].request_queue.append(call)
        if caller is not None:
            proc = self.processors[caller]
            if kind == QUERY:
                call.reply = QueryTicket(ticket)
                self._emit(tr.QUERY_ISSUED, caller, req.target.region, ticket, routine=req.routine)
                proc.status = Status.BLOCKED
                proc.blocked_on = call.reply
            else:
                proc.status = Status.READY
                proc.resume_with = (ticket, None)
        return ticket

    def _log(self, call: CallSpec) -> None:
        self.calls[call.ticket] = call
        self.outstanding[(call.caller, call.target.region)].append(call.ticket)
        self._emit(tr.CALL_LOGGED, call.caller, call.target.region, call.ticket,
                   routine=call.routine, kind=call.kind, target=call.target,
                   args=",".join(format_value(a) for a in call.args) or None,
                   executor=call.executor)

    def _queue_request(self, requester: int, call: CallSpec, routine: Routine,
                       regions: frozenset[int], sync: bool) -> ReservationRequest:
        wait, asserts = compile_precondition(call.contract, self._separateness(requester, call, routine))
        req = ReservationRequest(call.ticket, requester, regions, wait, call, asserts, sync)
        self.pending[call.ticket] = req
        for rid in sorted(regions):
            self.regions[rid].wait_queue.append(call.ticket)
        proc = self.processors[requester]
        proc.status = Status.BLOCKED
        proc.blocked_on = req
        self._emit(tr.RESERVATION_QUEUED, requester, call.target.region, call.ticket,
                   regions=_regions(regions), wait=wait.label or None)
        return req

    def _pickup(self) -> None:
        for pid in sorted(self.processors):
            proc = self.processors[pid]
            if proc.status is Status.IDLE and not proc.frames and proc.request_queue:
                call = proc.request_queue.popleft()
                routine = self.objects[call.target.object].routines[call.routine]
                regions = frozenset({call.target.region}
                                    | {a.region for a in call.args if isinstance(a, SeparateRef)})
                self._queue_request(pid, call, routine, regions, sync=False)

    # ---------------------------------------------------------- transitions

    def _candidates(self) -> list[ReservationRequest]:
        out = []
        for ticket in sorted(self.pending):
            req = self.pending[ticket]
            if any(self.regions[r].holder is not None for r in req.regions):
                continue
            if req.checked is not None and all(
                    self.regions[r].version == v for r, v in req.checked.items()):
                continue
            # Per-caller order: earlier calls by the same caller to any of
            # these regions must have started first.
            caller = req.call.caller
            if any(t < ticket for r in req.regions for t in self.outstanding.get((caller, r), ())):
                continue
            out.append(req)
        return out

    def _grantable(self) -> list[int]:
        taken: set[int] = set()
        out = []
        for req in self._candidates():
            if not (req.regions & taken):
                out.append(req.ticket)
            taken |= req.regions
        return out

    def enabled(self) -> list[Transition]:
        out = [Transition("deliver", pid) for pid in sorted(self._deliverable)]
        out += [Transition("grant", t) for t in self._grantable()]
        out += [Transition("resume", pid) for pid in sorted(self.processors)
                if self.processors[pid].status is Status.READY]
        return out

    def fire(self, transition: Transition) -> None:
        if transition.kind == "grant":
            self.acquire_and_check(self.pending[transition.key])
        elif transition.kind == "resume":
            self._resume(transition.key)
        else:
            self._deliver(transition.key)
        self._pickup()
        self.steps += 1

    def _choose(self, options: list[Transition], choose: Chooser | None) -> Transition:
        if len(options) == 1:
            return options[0]
        if choose is not None:
            return options[choose(len(options))]
        return options[self.rng.randrange(len(options))]

    def step(self, choose: Chooser | None = None) -> list[TraceEvent]:
        """Fire one enabled transition and return the events it produced
        (possibly none).  Does nothing when no transition is enabled."""
        start = len(self.trace.events)
        self._pickup()
        options = self.enabled()
        if options:
            self.fire(self._choose(options, choose))
        return self.trace.events[start:]

    def has_work(self) -> bool:
        return bool(self.pending or self._deliverable) or any(
            p.status is not Status.IDLE or p.request_queue for p in self.processors.values())

    def run(self, max_steps: int = DEFAULT_MAX_STEPS, choose: Chooser | None = None) -> Trace:
        """Step until quiescence; raise on deadlock or exhausted budget."""
        self._pickup()
        while True:
            options = self.enabled()
            if not options:
                break
            if self.steps >= max_steps:
                self.trace.status = "budget"
                raise StepBudgetExceeded(max_steps, self.trace)
            self.fire(self._choose(options, choose))
        if self.has_work():
            from .verify.deadlock import detect_deadlock

            self.trace.status = "deadlock"
            cycle = detect_deadlock(self.wait_for_graph()) or []
            blocked = sorted(p.id for p in self.processors.values() if p.status is Status.BLOCKED)
            raise DeadlockDetected(cycle, blocked, self.trace)
        self.trace.status = "quiescent"
        return self.trace

    # ------------------------------------------------------------ reservation

    def _env(self, pid: int, call: CallSpec, routine: Routine, writable: bool) -> dict[str, Any]:
        env: dict[str, Any] = {"self": ObjectView(self, pid, call.target, writable)}
        for name, arg in zip(routine.formals[1:], call.args):
            env[name] = ObjectView(self, pid, arg, writable) if isinstance(arg, SeparateRef) else arg
        return env

    def _hold(self, pid: int, regions: Iterable[int]) -> None:
        proc = self.processors[pid]
        for rid in regions:
            self.regions[rid].holder = pid
            proc.held.add(rid)

    def _release(self, pid: int, req: ReservationRequest, dirty: bool) -> None:
        proc = self.processors[pid]
        for rid in req.regions:
            region = self.regions[rid]
            region.holder = None
            proc.held.discard(rid)
            if dirty:
                region.version += 1
        self._emit(tr.RESERVATION_RELEASED, pid, req.call.target.region, req.ticket,
                   regions=_regions(req.regions))

    def _unqueue(self, req: ReservationRequest) -> None:
        del self.pending[req.ticket]
        for rid in req.regions:
            self.regions[rid].wait_queue.remove(req.ticket)
        key = (req.call.caller, req.call.target.region)
        self.outstanding[key].remove(req.ticket)

    def acquire_and_check(self, req: ReservationRequest) -> str:
        """Reserve all of ``req.regions`` and check its wait condition, as one step.

        Returns QUEUED, holding nothing, when a region is taken or the wait
        condition is false; GRANTED when the application has started.
        """
        if any(self.regions[r].holder is not None for r in req.regions):
            return QUEUED
        pid, call = req.requester, req.call
        target_region = call.target.region
        self._hold(pid, req.regions)
        self._emit(tr.RESERVATION_ACQUIRED, pid, target_region, req.ticket,
                   regions=_regions(req.regions))
        routine = self.objects[call.target.object].routines[call.routine]
        if not req.wait_condition.trivial:
            try:
                ok = evaluate_wait_condition(req.wait_condition, self._env(pid, call, routine, False))
            except Exception as exc:
                self._unqueue(req)
                proc = self.processors[pid]
                proc.status, proc.blocked_on = Status.IDLE, None
                frame = Frame(call, routine, req, sync=req.sync)
                self._finish_failed(pid, frame, exc)
                return GRANTED
            self._emit(tr.WAIT_TRUE if ok else tr.WAIT_FALSE, pid, target_region, req.ticket,
                       clauses=req.wait_condition.label)
            if not ok:
                self._release(pid, req, dirty=False)
                req.checked = {r: self.regions[r].version for r in req.regions}
                return QUEUED
        self._unqueue(req)
        proc = self.processors[pid]
        proc.blocked_on = None
        frame = Frame(call, routine, req, sync=req.sync, asserts=req.asserts)
        self._start(pid, frame)
        return GRANTED

    def _start(self, pid: int, frame: Frame) -> None:
        call = frame.call
        self._emit(tr.APPLICATION_STARTED, pid, call.target.region, call.ticket,
                   routine=call.routine, target=call.target,
                   args=",".join(format_value(a) for a in call.args) or None)
        proc = self.processors[pid]
        proc.frames.append(frame)
        proc.status = Status.READY
        proc.resume_with = (None, None)

    # ------------------------------------------------------------- application

    def _resume(self, pid: int) -> None:
        proc = self.processors[pid]
        frame = proc.frames[-1]
        value, error = proc.resume_with
        proc.resume_with = (None, None)
        try:
            if not frame.started:
                frame.started = True
                env = self._env(pid, frame.call, frame.routine, True)
                check_assertions(frame.asserts, self._env(pid, frame.call, frame.routine, False))
                if frame.routine.contract.needs_old:
                    frame.old = snapshot(env, self._fields_of)
                ctx = Context(self, pid, frame)
                result = frame.routine.body(ctx, env["self"], *frame.call.args)
                if not inspect.isgenerator(result):
                    self._complete(pid, frame, result)
                    return
                frame.gen = result
                yielded = frame.gen.send(None)
            elif error is not None:
                yielded = frame.gen.throw(error)
            else:
                yielded = frame.gen.send(value)
        except StopIteration as stop:
            self._complete(pid, frame, stop.value)
            return
        except Exception as exc:
            self._fail(pid, frame, exc)
            return
        self._handle_yield(pid, yielded)

    def _fields_of(self, value: Any) -> dict | None:
        if isinstance(value, ObjectView):
            return self.objects[value.ref.object].fields
        return None

    def _handle_yield(self, pid: int, yielded: Any) -> None:
        proc = self.processors[pid]
        try:
            if not isinstance(yielded, CallRequest):
                raise TypeError(f"bodies may only yield ctx.call(...) requests, got {yielded!r}")
            _, routine = self._resolve(yielded)
            self._issue(pid, yielded, routine, QUERY if routine.query else COMMAND)
        except (ScoopError, TypeError) as exc:
            proc.status = Status.READY
            proc.resume_with = (None, exc)

    def _complete(self, pid: int, frame: Frame, result: Any) -> None:
        if frame.routine.contract.ensure:
            try:
                check_postcondition(frame.routine.contract, frame.old,
                                    self._env(pid, frame.call, frame.routine, False), result)
            except Exception as exc:
                self._fail(pid, frame, exc)
                return
        proc = self.processors[pid]
        proc.frames.pop()
        call = frame.call
        if frame.request is not None:
            self._emit(tr.APPLICATION_COMPLETED, pid, call.target.region, call.ticket,
                       routine=call.routine,
                       result=None if result is None else format_value(result))
            self._release(pid, frame.request, dirty=True)
        if frame.sync:
            proc.status = Status.READY
            proc.resume_with = (result, None)
        elif call.kind == QUERY and call.reply is not None:
            call.reply.fill(result)
            self._deliverable.add(call.caller)
        self._settle(proc)

    def _fail(self, pid: int, frame: Frame, exc: BaseException) -> None:
        self.processors[pid].frames.pop()
        self._finish_failed(pid, frame, exc)

    def _finish_failed(self, pid: int, frame: Frame, exc: BaseException) -> None:
        proc = self.processors[pid]
        call = frame.call
        if call.ticket is not None:
            self._emit(tr.EXCEPTION, pid, call.target.region, call.ticket,
                       routine=call.routine, error=format_value(exc))
        if frame.request is not None:
            self._release(pid, frame.request, dirty=True)
        if frame.sync:
            proc.status = Status.READY
            proc.blocked_on = None
            proc.resume_with = (None, exc)
        elif call.kind == QUERY and call.reply is not None:
            call.reply.fill(error=exc)
            self._deliverable.add(call.caller)
        else:
            self.propagate_async_exception(call.target.region, exc)
        self._settle(proc)

    def _settle(self, proc: Processor) -> None:
        if not proc.frames and proc.status is not Status.BLOCKED:
            proc.status = Status.IDLE
            proc.blocked_on = None

    def propagate_async_exception(self, region_id: int, exc: BaseException) -> None:
        """Poison the region and fail every call still queued for it."""
        region = self.regions[region_id]
        region.poisoned = exc
        if region.processor is None:
            return
        queue = self.processors[region.processor].request_queue
        kept = []
        while queue:
            call = queue.popleft()
            if call.target.region != region_id:
                kept.append(call)
                continue
            self.outstanding[(call.caller, region_id)].remove(call.ticket)
            self._emit(tr.EXCEPTION, region.processor, region_id, call.ticket,
                       routine=call.routine, error=format_value(exc), drained="true")
            if call.kind == QUERY and call.reply is not None:
                call.reply.fill(error=PoisonedRegion(region_id, exc))
                self._deliverable.add(call.caller)
        queue.extend(kept)

    def _deliver(self, pid: int) -> None:
        self._deliverable.discard(pid)
        proc = self.processors[pid]
        reply: QueryTicket = proc.blocked_on
        call = self.calls[reply.ticket]
        if reply.error is not None:
            self._emit(tr.QUERY_RESULT, pid, call.target.region, reply.ticket,
                       error=format_value(reply.error))
        else:
            self._emit(tr.QUERY_RESULT, pid, call.target.region, reply.ticket,
                       value=format_value(reply.value))
        proc.blocked_on = None
        proc.status = Status.READY
        proc.resume_with = (reply.value, reply.error)

    # ---------------------------------------------------------------- analysis

    def wait_for_graph(self):
        """Edges from each blocked processor to every processor it waits on."""
        from .verify.deadlock import WaitForGraph

        graph = WaitForGraph(nodes=set(self.processors))
        for pid in sorted(self.processors):
            proc = self.processors[pid]
            if proc.status is not Status.BLOCKED:
                continue
            waiting = proc.blocked_on
            if isinstance(waiting, ReservationRequest):
                for rid in sorted(waiting.regions):
                    holder = self.regions[rid].holder
                    if holder is not None and holder != pid:
                        graph.add_edge(pid, holder, rid)
                    for t in self.outstanding.get((waiting.call.caller, rid), ()):
                        if t < waiting.ticket:
                            executor = self.calls[t].executor
                            if executor is not None and executor != pid:
                                graph.add_edge(pid, executor, rid)
            elif isinstance(waiting, QueryTicket) and not waiting.filled:
                call = self.calls[waiting.ticket]
                rid = call.target.region
                if call.executor is not None and call.executor != pid:
                    graph.add_edge(pid, call.executor, rid)
                holder = self.regions[rid].holder
                if holder is not None and holder != pid:
                    graph.add_edge(pid, holder, rid)
        return graph

    def object_states(self) -> str:
        """Canonical text of every object's fields, for outcome digests."""
        lines = []
        for oid in sorted(self.objects):
            record = self.objects[oid]
            fields = ",".join(f"{k}={format_value(record.fields[k])}" for k in sorted(record.fields))
            lines.append(f"@{record.region}.{oid} {fields}")
        return "\n".join(lines)

    def fields(self, ref: SeparateRef) -> dict[str, Any]:
        """Unchecked read access for harnesses inspecting a finished run."""
        return self.objects[ref.object].fields


def _regions(regions: Iterable[int]) -> str:
    return ",".join(str(r) for r in sorted(regions))


def run_until_quiescent(install: Callable[[Runtime], Any], seed: int = 0,
                        max_steps: int = DEFAULT_MAX_STEPS,
                        choose: Chooser | None = None) -> Trace:
    rt = Runtime(seed)
    install(rt)
    return rt.run(max_steps, choose)

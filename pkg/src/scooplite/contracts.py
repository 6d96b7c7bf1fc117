"""Routine contracts: precondition compilation into wait/assert clauses,
wait-condition evaluation and postcondition checking.

A clause is a named predicate whose parameter names say which formals it
reads.  ``Clause("not b.is_full", lambda b: not b.is_full)`` reads the formal
``b``; if ``b`` is bound to a separate reference at the call, the clause is a
wait condition, otherwise a plain assertion.  Postcondition predicates may
additionally take ``old`` (entry snapshot of every formal) and ``result``.
"""

from __future__ import annotations

import copy
import inspect
from dataclasses import dataclass, field
from types import SimpleNamespace
from typing import Any, Callable, Mapping

from .errors import ContractError, ContractViolation

# Separators of the trace detail format; clause names travel through it.
_FORBIDDEN = ("|", ",", "\n")
POST_EXTRAS = ("old", "result")


@dataclass(frozen=True)
class Clause:
    name: str
    predicate: Callable[..., Any]
    reads: tuple[str, ...] = field(init=False)

    def __post_init__(self) -> None:
        if not self.name or any(ch in self.name for ch in _FORBIDDEN):
            raise ContractError(f"bad clause name {self.name!r}")
        try:
            params = inspect.signature(self.predicate).parameters.values()
        except (TypeError, ValueError) as exc:
            raise ContractError(f"clause {self.name!r}: predicate has no signature") from exc
        names = []
        for p in params:
            if p.kind in (p.VAR_POSITIONAL, p.VAR_KEYWORD):
                raise ContractError(f"clause {self.name!r}: variadic predicates are not allowed")
            names.append(p.name)
        object.__setattr__(self, "reads", tuple(names))

    def __call__(self, env: Mapping[str, Any]) -> bool:
        return bool(self.predicate(**{n: env[n] for n in self.reads}))


@dataclass(frozen=True)
class Contract:
    require: tuple[Clause, ...] = ()
    ensure: tuple[Clause, ...] = ()

    @property
    def needs_old(self) -> bool:
        return any("old" in c.reads for c in self.ensure)

    def validate(self, formals: tuple[str, ...]) -> None:
        known = set(formals)
        for c in self.require:
            bad = set(c.reads) - known
            if bad:
                raise ContractError(f"precondition {c.name!r} reads unknown formals {sorted(bad)}")
        known |= set(POST_EXTRAS)
        for c in self.ensure:
            bad = set(c.reads) - known
            if bad:
                raise ContractError(f"postcondition {c.name!r} reads unknown formals {sorted(bad)}")


@dataclass(frozen=True)
class WaitCondition:
    clauses: tuple[Clause, ...] = ()

    @property
    def trivial(self) -> bool:
        return not self.clauses

    @property
    def label(self) -> str:
        return ",".join(c.name for c in self.clauses)


TRUE = WaitCondition()


def compile_precondition(
    contract: Contract, separate: Mapping[str, bool]
) -> tuple[WaitCondition, tuple[Clause, ...]]:
    """Split preconditions into (wait condition, assertions).

    A clause reading at least one separate formal waits; every other clause
    asserts.  ``separate`` must cover every formal the clauses read.
    """
    wait, asserts = [], []
    for clause in contract.require:
        missing = [n for n in clause.reads if n not in separate]
        if missing:
            raise ContractError(f"precondition {clause.name!r} reads unknown formals {missing}")
        if any(separate[n] for n in clause.reads):
            wait.append(clause)
        else:
            asserts.append(clause)
    return WaitCondition(tuple(wait)), tuple(asserts)


def evaluate_wait_condition(wc: WaitCondition, env: Mapping[str, Any]) -> bool:
    # Views in env are read-only here; an unheld region raises IllegalDereference.
    return all(clause(env) for clause in wc.clauses)


def _plain_values(env: Mapping[str, Any]) -> dict:
    return {k: v for k, v in env.items() if isinstance(v, (int, bool, str, float, type(None)))}


def check_assertions(clauses: tuple[Clause, ...], env: Mapping[str, Any]) -> None:
    for clause in clauses:
        if not clause(env):
            raise ContractViolation(clause.name, "precondition", _plain_values(env))


class Frozen(SimpleNamespace):
    """Read-only copy of an object's fields, used for ``old`` in postconditions."""

    def __setattr__(self, name, value):
        raise ContractError("entry snapshots are read-only")


def snapshot(env: Mapping[str, Any], fields_of: Callable[[Any], dict | None]) -> SimpleNamespace:
    """Deep-copy the state reachable through each formal at application start.

    ``fields_of(value)`` returns the field dict behind a view, or None for
    plain values, which are copied as they are.
    """
    out = {}
    for name, value in env.items():
        fields = fields_of(value)
        out[name] = Frozen(**copy.deepcopy(fields)) if fields is not None else copy.deepcopy(value)
    return SimpleNamespace(**out)


def check_postcondition(
    contract: Contract,
    old: SimpleNamespace | None,
    env: Mapping[str, Any],
    result: Any = None,
) -> None:
    """Raise ContractViolation naming the first false postcondition clause."""
    full = dict(env)
    full["old"] = old
    full["result"] = result
    for clause in contract.ensure:
        if not clause(full):
            values = _plain_values(env)
            if result is not None:
                values["result"] = result
            raise ContractViolation(clause.name, "postcondition", values)

import pytest
from hypothesis import given, strategies as st

from scooplite import Clause, ContractError, Routine, SeparateRef
from scooplite.errors import DeadlockDetected, PoisonedRegion
from scooplite.model import is_separate

refs = st.builds(SeparateRef, st.integers(0, 50), st.integers(0, 50))


@given(refs, st.none() | st.integers(0, 50))
def test_separate_means_other_region(ref, home):
    assert is_separate(home, ref) == (home != ref.region)


@given(st.lists(refs))
def test_refs_sort_by_region_first(xs):
    assert [r.region for r in sorted(xs)] == sorted(r.region for r in xs)


def test_ref_text():
    assert str(SeparateRef(2, 9)) == "@2.9"


def test_routine_formals_and_arity():
    def body(ctx, self, left, right):
        pass

    r = Routine(body, require=(Clause("distinct", lambda left, right: left != right),))
    assert r.formals == ("self", "left", "right")
    assert r.arity == 2
    assert r.contract.require[0].name == "distinct"


def test_routine_needs_ctx_and_self():
    with pytest.raises(ContractError):
        Routine(lambda ctx: None)


def test_contract_must_read_known_formals():
    with pytest.raises(ContractError):
        Routine(lambda ctx, self: None, require=(Clause("x", lambda other: other),))


def test_error_messages():
    assert "0 -> 1 -> 0" in str(DeadlockDetected([0, 1], [0, 1]))
    assert "stalled" in str(DeadlockDetected([], [3]))
    exc = PoisonedRegion(4, RuntimeError("boom"))
    assert exc.region == 4 and isinstance(exc.cause, RuntimeError)

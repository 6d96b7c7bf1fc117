import pytest
from hypothesis import given, settings, strategies as st

from oracles import enumerate_interleavings, multinomial_interleavings
from scooplite import ACTIVE, ObjectState
from scooplite.runtime import Runtime
from scooplite.scenarios import ScenarioConfig, get_scenario, run_scenario
from scooplite.verify.explore import Budget, explore_interleavings, run_schedule


def installer(name, **params):
    return get_scenario(name).installer(params)


def test_oracles_agree():
    for lengths in ([1], [2, 2], [2, 2, 2], [1, 3, 2], [4, 4]):
        assert multinomial_interleavings(lengths) == enumerate_interleavings(lengths)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_exhaustive_count_for_independent_processors(k):
    # each processor contributes two transitions: grant, then run the body
    result = explore_interleavings(installer("independent", k=k), Budget(exhaustive=1000))
    assert result.schedules == multinomial_interleavings([2] * k)
    assert not result.truncated
    assert len(result.digests) == 1  # no interaction, one outcome
    assert not result.failures


def test_every_exhaustive_path_is_distinct():
    result = explore_interleavings(installer("independent", k=3), Budget(exhaustive=1000))
    assert len({o.path for o in result.outcomes}) == result.schedules


def test_schedule_cap_truncates():
    result = explore_interleavings(installer("independent", k=4),
                                   Budget(exhaustive=1000, max_schedules=100))
    assert result.schedules == 100 and result.truncated


def test_depth_bound_marks_budget_outcomes():
    result = explore_interleavings(installer("philosophers", n=2, rounds=1), Budget(exhaustive=5))
    assert result.count("budget") == result.schedules
    assert all(o.failed for o in result.outcomes)


def test_exhaustive_finds_nested_query_deadlock_on_every_path():
    result = explore_interleavings(installer("nested-query"), Budget(exhaustive=1000))
    assert result.schedules > 1
    assert result.count("deadlock") == result.schedules
    assert {tuple(o.cycle) for o in result.outcomes} == {(0, 1)}


def test_one_seed_matches_a_single_run():
    params = {"n": 3, "rounds": 2, "passive_forks": 0}
    result = explore_interleavings(installer("philosophers", **params), Budget(seeds=1, base_seed=9))
    (outcome,) = result.outcomes
    alone, _ = run_schedule(installer("philosophers", **params), seed=9)
    assert outcome.digest == alone.digest
    assert outcome.replay_hint() == "seed=9"
    direct = run_scenario(ScenarioConfig("philosophers", params, 9))
    assert [(r.name, r.passed) for r in direct.verdicts[:2]] == [
        (r.name, r.passed) for r in outcome.reports[:2]]


@given(st.integers(0, 2**64 - 1))
@settings(max_examples=20, deadline=None)
def test_seeded_schedule_replays_by_path(seed):
    install = installer("exchanges", markets=2, trades=2)
    by_seed, taken = run_schedule(install, seed=seed)
    by_path, _ = run_schedule(install, path=tuple(c for c, _ in taken))
    assert by_seed.digest == by_path.digest


def test_path_out_of_range_is_rejected():
    with pytest.raises(ValueError):
        run_schedule(installer("independent", k=2), path=(7,))


@pytest.mark.parametrize("kwargs", [{}, {"exhaustive": 3, "seeds": 3}, {"seeds": 0},
                                    {"exhaustive": -1}])
def test_budget_validation(kwargs):
    with pytest.raises(ValueError):
        Budget(**kwargs)


def test_digest_depends_on_final_state():
    def install(value):
        def go(rt: Runtime):
            rt.create_object(rt.create_region(ACTIVE), ObjectState({"v": value}))
        return go

    a, _ = run_schedule(install(1))
    b, _ = run_schedule(install(2))
    assert a.digest != b.digest
    assert a.digest.hexdigest() != b.digest.hexdigest()

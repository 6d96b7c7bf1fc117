from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from oracles import fifo_expected, intervals_disjoint
from scooplite.errors import ConfigError
from scooplite.scenarios import (
    PROTRACTION_WAIT,
    SCENARIOS,
    ScenarioConfig,
    dining_philosophers,
    get_scenario,
    hexapod_gait,
    nested_query,
    producer_consumer,
    run_scenario,
)

seeds = st.integers(0, 2**64 - 1)


@given(seeds, st.integers(1, 6), st.integers(0, 4), st.booleans())
@settings(max_examples=40, deadline=None)
def test_philosophers_all_eat_every_round(seed, n, rounds, passive):
    result = dining_philosophers(n, rounds, seed, passive_forks=passive)
    assert result.passed, [line for r in result.verdicts for line in r.lines()]
    assert result.stats["meals"] == [rounds] * n


@given(seeds, st.integers(1, 3), st.integers(1, 3), st.integers(1, 3), st.integers(0, 12))
@settings(max_examples=40, deadline=None)
def test_buffer_keeps_bounds_and_order(seed, capacity, producers, consumers, items):
    result = producer_consumer(capacity, producers, consumers, items, seed)
    assert result.passed, [line for r in result.verdicts for line in r.lines()]
    consumed = result.stats["consumed"]
    assert Counter(consumed) == Counter(range(items))
    # each producer's items come out in the order it produced them
    for p, expected in fifo_expected(producers, items).items():
        assert [x for x in consumed if x % producers == p] == expected
    assert all(0 <= k <= capacity for k in result.stats["occupancy"])


@given(seeds, st.integers(0, 6))
@settings(max_examples=30, deadline=None)
def test_hexapod_groups_never_protract_together(seed, steps):
    result = hexapod_gait(steps, seed)
    assert result.passed, [line for r in result.verdicts for line in r.lines()]
    spans = result.stats["protractions"]
    groups = sorted(spans)
    if steps:
        assert len(groups) == 2 and all(len(spans[g]) == steps for g in groups)
        assert intervals_disjoint(spans[groups[0]], spans[groups[1]])


def test_protraction_wait_lists_three_clauses():
    assert PROTRACTION_WAIT == ("me.legs_retracted", "partner.legs_down",
                                "not partner.protraction_pending")


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_nested_query_deadlocks_on_two_cycle(seed):
    result = nested_query(seed)
    assert result.trace.status == "deadlock"
    assert sorted(result.cycle) == [0, 1]
    assert not result.passed


@given(seeds, st.integers(1, 3), st.integers(0, 4))
@settings(max_examples=20, deadline=None)
def test_exchanges_total(seed, markets, trades):
    result = run_scenario(ScenarioConfig("exchanges", {"markets": markets, "trades": trades}, seed))
    assert result.passed
    assert result.stats["total"] == markets * trades * (trades + 1) // 2


@pytest.mark.parametrize("name, params", [
    ("philosophers", {"n": 0}),
    ("philosophers", {"rounds": -1}),
    ("philosophers", {"n": True}),
    ("producer-consumer", {"capacity": 0}),
    ("hexapod", {"steps": "3"}),
    ("exchanges", {"markets": 0}),
    ("philosophers", {"colour": 3}),
])
def test_bad_parameters_are_config_errors(name, params):
    with pytest.raises(ConfigError):
        run_scenario(ScenarioConfig(name, params, 0))


def test_unknown_scenario():
    with pytest.raises(ConfigError):
        get_scenario("juggling")


def test_defaults_are_valid():
    for scenario in SCENARIOS.values():
        assert scenario.validate({}) == scenario.defaults


def test_budget_exhaustion_is_a_verdict():
    result = run_scenario(ScenarioConfig("philosophers", {"n": 3, "rounds": 3}, 0), max_steps=10)
    assert result.trace.status == "budget"
    assert not result.passed

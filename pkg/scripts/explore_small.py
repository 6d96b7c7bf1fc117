"""Exhaustively explore small scenario configurations and tabulate outcomes."""

from __future__ import annotations

import time

from scooplite.scenarios import get_scenario
from scooplite.verify.explore import Budget, explore_interleavings

CONFIGS = [
    ("independent", {"k": 3}),
    ("philosophers", {"n": 1, "rounds": 2}),
    ("philosophers", {"n": 2, "rounds": 1}),
    ("philosophers", {"n": 2, "rounds": 1, "passive_forks": 1}),
    ("philosophers", {"n": 2, "rounds": 2}),
    ("producer-consumer", {"capacity": 1, "items": 2}),
    ("hexapod", {"steps": 1}),
    ("nested-query", {}),
    ("exchanges", {"markets": 2, "trades": 1}),
]


def main() -> None:
    print(f"{'scenario':<20}{'params':<42}{'schedules':>10}{'outcomes':>9}{'deadlock':>9}"
          f"{'failed':>8}{'trunc':>7}{'secs':>7}")
    for name, params in CONFIGS:
        scenario = get_scenario(name)
        start = time.perf_counter()
        result = explore_interleavings(scenario.installer(params),
                                       Budget(exhaustive=5_000, max_schedules=20_000),
                                       scenario.extra_checks(params))
        secs = time.perf_counter() - start
        print(f"{name:<20}{str(params):<42}{result.schedules:>10}{len(result.digests):>9}"
              f"{result.count('deadlock'):>9}{len(result.failures):>8}"
              f"{str(result.truncated):>7}{secs:>7.1f}")


if __name__ == "__main__":
    main()

"""Run a scenario over a range of seeds and summarise verdicts and timing.

    python scripts/seed_sweep.py philosophers --seeds 1000 --param n=5 --param rounds=10
"""

from __future__ import annotations

import argparse
import statistics
import time
from collections import Counter

from scooplite.scenarios import ScenarioConfig, run_scenario


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("scenario")
    parser.add_argument("--seeds", type=int, default=100)
    parser.add_argument("--base-seed", type=int, default=0)
    parser.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    args = parser.parse_args()
    params = {k: int(v) for k, v in (p.split("=", 1) for p in args.param)}

    failures: Counter[str] = Counter()
    statuses: Counter[str] = Counter()
    lengths = []
    start = time.perf_counter()
    for seed in range(args.base_seed, args.base_seed + args.seeds):
        result = run_scenario(ScenarioConfig(args.scenario, params, seed))
        statuses[result.trace.status] += 1
        lengths.append(len(result.trace))
        for report in result.verdicts:
            if not report.passed:
                failures[report.name] += 1
    elapsed = time.perf_counter() - start
    print(f"scenario={args.scenario} params={params} seeds={args.seeds} time={elapsed:.2f}s "
          f"({1000 * elapsed / args.seeds:.1f} ms/run)")
    print(f"status {dict(statuses)}")
    print(f"events median={statistics.median(lengths)} min={min(lengths)} max={max(lengths)}")
    print("failed verdicts " + (", ".join(f"{k}={v}" for k, v in sorted(failures.items())) or "none"))


if __name__ == "__main__":
    main()

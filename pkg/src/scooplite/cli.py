"""Command-line entry point.

    scooplite run philosophers --n 5 --rounds 10 --seed 7 --trace out.trace
    scooplite verify out.trace
    scooplite replay philosophers --n 2 --rounds 1 --path 0,1,1 --against failing.trace
    scooplite explore philosophers --n 2 --rounds 1 --exhaustive-depth 64

Exit status: 0 when every verdict passes, 1 on a verdict failure or
deadlock, 2 on bad configuration or unreadable/malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, MalformedTrace
from .scenarios import SCENARIOS, ScenarioConfig, get_scenario, run_scenario
from .trace import Trace
from .verify.checks import verify_trace
from .verify.explore import Budget, explore_interleavings, run_schedule

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
MAX_SEED = 2**64 - 1


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _path(text: str) -> tuple[int, ...]:
    if text in ("", "-"):
        return ()
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"path must be comma-separated integers: {text!r}") from None


def _add_scenarios(parser: argparse.ArgumentParser, extra) -> None:
    sub = parser.add_subparsers(dest="scenario", required=True, metavar="SCENARIO")
    for name, scenario in SCENARIOS.items():
        sp = sub.add_parser(name)
        for param, default in scenario.defaults.items():
            sp.add_argument("--" + param.replace("_", "-"), dest=param, type=int, default=default)
        sp.add_argument("--seed", type=_seed, default=0)
        sp.add_argument("--max-steps", type=int, default=100_000)
        extra(sp)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scooplite", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def run_flags(sp):
        sp.add_argument("--trace", type=Path, default=None, help="trace output path")

    def replay_flags(sp):
        sp.add_argument("--path", type=_path, default=None,
                        help="explicit choice path (overrides --seed)")
        sp.add_argument("--trace", type=Path, default=None)
        sp.add_argument("--against", type=Path, default=None,
                        help="compare the replayed trace byte-for-byte with this file")

    def explore_flags(sp):
        group = sp.add_mutually_exclusive_group(required=True)
        group.add_argument("--exhaustive-depth", type=int)
        group.add_argument("--seeds", type=int)
        sp.add_argument("--max-schedules", type=int, default=100_000)

    _add_scenarios(sub.add_parser("run", help="run one scenario under one seed"), run_flags)
    verify = sub.add_parser("verify", help="check a trace file")
    verify.add_argument("trace", type=Path)
    _add_scenarios(sub.add_parser("replay", help="re-execute one schedule"), replay_flags)
    _add_scenarios(sub.add_parser("explore", help="explore schedules"), explore_flags)
    return parser


def _params(args) -> dict[str, int]:
    return {k: getattr(args, k) for k in get_scenario(args.scenario).defaults}


def _print_reports(reports) -> bool:
    for report in reports:
        for line in report.lines():
            print(line)
    return all(r.passed for r in reports)


def cmd_run(args) -> int:
    config = ScenarioConfig(args.scenario, _params(args), args.seed)
    result = run_scenario(config, args.max_steps)
    out = args.trace or Path(f"{args.scenario}-{args.seed}.trace")
    result.trace.write(out)
    print(f"scenario={args.scenario} seed={args.seed} status={result.trace.status} "
          f"events={len(result.trace)} trace={out}")
    for key, value in result.stats.items():
        print(f"STAT {key} {json.dumps(value, separators=(',', ':'))}")
    if result.cycle:
        print("DEADLOCK cycle=" + ",".join(map(str, result.cycle)))
    return EXIT_OK if _print_reports(result.verdicts) else EXIT_FAIL


def cmd_verify(args) -> int:
    trace = Trace.read(args.trace)
    reports = verify_trace(trace)
    print(f"trace={args.trace} events={len(trace)} status={trace.status}")
    return EXIT_OK if _print_reports(reports) else EXIT_FAIL


def cmd_replay(args) -> int:
    scenario = get_scenario(args.scenario)
    params = _params(args)
    outcome, _ = run_schedule(scenario.installer(params), seed=args.seed, path=args.path,
                              max_steps=args.max_steps, extra=scenario.extra_checks(params))
    # run_schedule does not keep the runtime; rebuild the trace text by re-running.
    trace = _replayed_trace(scenario, params, args)
    if args.trace:
        trace.write(args.trace)
    print(f"scenario={args.scenario} {outcome.replay_hint()} status={outcome.status} "
          f"events={len(trace)} digest={outcome.digest.hexdigest()}")
    ok = _print_reports(outcome.reports) and outcome.status == "quiescent"
    if args.against is not None:
        same = args.against.read_bytes() == trace.dumps().encode()
        print("MATCH" if same else "DIFFER")
        ok = ok and same
    return EXIT_OK if ok else EXIT_FAIL


def _replayed_trace(scenario, params, args) -> Trace:
    from .errors import DeadlockDetected, StepBudgetExceeded
    from .runtime import Runtime

    rt = Runtime(args.seed)
    scenario.install(rt, **params)
    choose = None
    if args.path is not None:
        path, pos = args.path, [0]

        def choose(n: int) -> int:
            i = path[pos[0]] if pos[0] < len(path) else 0
            pos[0] += 1
            return i
    try:
        rt.run(args.max_steps, choose)
    except (DeadlockDetected, StepBudgetExceeded):
        pass
    return rt.trace


def cmd_explore(args) -> int:
    scenario = get_scenario(args.scenario)
    params = _params(args)
    if args.exhaustive_depth is not None:
        budget = Budget(exhaustive=args.exhaustive_depth, max_schedules=args.max_schedules)
        mode = f"exhaustive depth={args.exhaustive_depth}"
    else:
        budget = Budget(seeds=args.seeds, base_seed=args.seed, max_schedules=args.max_schedules)
        mode = f"seeds={args.seeds} base_seed={args.seed}"
    result = explore_interleavings(scenario.installer(params), budget,
                                   scenario.extra_checks(params))
    print(f"scenario={args.scenario} mode={mode} schedules={result.schedules} "
          f"digests={len(result.digests)} deadlocks={result.count('deadlock')} "
          f"budget_exceeded={result.count('budget')} truncated={str(result.truncated).lower()}")
    for digest in sorted(d.hexdigest() for d in result.digests):
        print(f"DIGEST {digest}")
    failures = result.failures
    for outcome in failures[:20]:
        failed = [r.name for r in outcome.reports if not r.passed]
        cycle = ",".join(map(str, outcome.cycle)) or "-"
        print(f"FAIL {outcome.replay_hint()} status={outcome.status} cycle={cycle} "
              f"verdicts={','.join(failed) or '-'}")
    if len(failures) > 20:
        print(f"FAIL ... {len(failures) - 20} more")
    return EXIT_FAIL if failures else EXIT_OK


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "replay": cmd_replay, "explore": cmd_explore}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, MalformedTrace, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

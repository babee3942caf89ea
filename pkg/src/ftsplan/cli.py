"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 infeasible, 3 timeout,
4 plan rejected by ``validate``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from .core import validate_plan
from .domains import EXPERIMENTS, build_problem, generate_benchmark
from .grounding import compile_task, format_task
from .planners import ALGORITHMS, INFEASIBLE, SOLVED, TIMEOUT, PlannerConfig, RunResult, solve
from .serialization import (PROBLEM_SCHEMA, FormatError, dumps, load_plan, load_scenario, plan_to_dict,
                            scenario_to_dict)

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_TIMEOUT, EXIT_INVALID = 0, 1, 2, 3, 4
OUTCOME_EXIT = {SOLVED: EXIT_OK, INFEASIBLE: EXIT_INFEASIBLE, TIMEOUT: EXIT_TIMEOUT}
SEED_ENV = "FTSPLAN_SEED"
BENCH_COLUMNS = ("experiment", "size", "trial", "algo", "outcome", "seconds", "sampler_calls")

log = logging.getLogger("ftsplan")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad arguments, which would read as "infeasible"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def run_report(result: RunResult, problem, algorithm: str, config: PlannerConfig, trace: bool = False) -> dict:
    """Deterministic summary of a run: no wall-clock fields."""
    report = {
        "outcome": result.outcome,
        "problem": problem.name,
        "algorithm": algorithm,
        "seed": config.seed,
        "config": config.echo(),
        "plan": plan_to_dict(result.plan) if result.plan is not None else None,
        "stats": result.stats.to_dict(timing=False),
    }
    if result.plan is not None:
        report["valid"] = bool(validate_plan(problem, result.plan))
    if trace:
        report["trace"] = [{"iteration": r.iteration, "episode": r.episode,
                            "lazy_elements": len(r.lazy_elements),
                            "skeleton": list(r.plan.skeleton) if r.plan is not None else None,
                            "sampled": r.sampled_instances(productive=False)} for r in result.trace]
    return report


def _config(args) -> PlannerConfig:
    seed = args.seed if args.seed is not None else default_seed()
    return PlannerConfig(search=args.search, weight=args.weight, seed=seed, timeout=args.timeout_s,
                         axioms=not args.no_axioms, lazy_tokens=args.lazy_tokens, trace=args.trace)


def _write(text: str, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_solve(args) -> int:
    scenario = load_scenario(args.problem)
    problem, samplers = build_problem(scenario)
    config = _config(args)
    result = solve(problem, samplers, args.algo, config)
    _write(dumps(run_report(result, problem, args.algo, config, trace=args.trace)), args.out)
    log.info("%s in %.3f s", result.outcome, result.stats.total_time)
    return OUTCOME_EXIT[result.outcome]


def cmd_validate(args) -> int:
    scenario = load_scenario(args.problem)
    problem, _ = build_problem(scenario)
    plan = load_plan(args.plan)
    if plan is None:
        raise UsageError(f"{args.plan}: report contains no plan")
    result = validate_plan(problem, plan)
    if result.ok:
        print(f"valid: {len(plan)} steps")
        return EXIT_OK
    print(f"invalid: {result.violation}")
    return EXIT_INVALID


def cmd_generate(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    scenario = generate_benchmark(args.experiment, args.size, seed, args.formulation)
    _write(dumps(scenario_to_dict(scenario)), args.out)
    return EXIT_OK


def cmd_ground(args) -> int:
    """Dump the task grounded from the problem's initial elements."""
    problem, _ = build_problem(load_scenario(args.problem))
    _write(format_task(compile_task(problem, problem.initial_elements, axioms=not args.no_axioms)) + "\n", args.out)
    return EXIT_OK


def cmd_schema(args) -> int:
    _write(json.dumps(PROBLEM_SCHEMA, indent=2) + "\n", args.out)
    return EXIT_OK


def bench_trial(job: tuple) -> dict:
    """One isolated benchmark run; a pure function of its arguments."""
    experiment, size, trial, algo, search, seed, timeout, formulation = job
    scenario = generate_benchmark(experiment, size, seed + trial, formulation)
    problem, samplers = build_problem(scenario)
    start = time.monotonic()
    result = solve(problem, samplers, algo, PlannerConfig(search=search, seed=seed + trial, timeout=timeout))
    seconds = time.monotonic() - start
    outcome = result.outcome
    if result.plan is not None and not validate_plan(problem, result.plan):
        outcome = "invalid"
    return {"experiment": experiment, "size": size, "trial": trial, "algo": f"{algo}-{search}",
            "outcome": outcome, "seconds": f"{seconds:.3f}", "sampler_calls": result.stats.total_sampler_calls}


def bench_rows(experiment: str, sizes, trials: int, algos, searches, seed: int, timeout: float,
               formulation: str = "manipulation", jobs: int = 1) -> list:
    work = [(experiment, size, trial, algo, search, seed, timeout, formulation)
            for size in sizes for trial in range(trials) for algo in algos for search in searches]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(bench_trial, work))
    else:
        rows = [bench_trial(w) for w in work]
    return sorted(rows, key=lambda r: (r["experiment"], r["size"], r["trial"], r["algo"]))


def format_rows(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def cmd_bench(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    rows = bench_rows(args.experiment, args.sizes, args.trials, args.algos, args.search, seed, args.timeout_s,
                      args.formulation, args.jobs)
    _write(format_rows(rows), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ftsplan", description="Sampling-based planning for factored transition systems.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def planner_options(p):
        p.add_argument("--search", choices=["bfs", "hff"], default="hff")
        p.add_argument("--seed", type=int, default=None, help=f"sampler seed (default ${SEED_ENV} or 0)")
        p.add_argument("--timeout-s", type=float, default=60.0)

    p = sub.add_parser("solve", help="solve a problem file and print a run report")
    p.add_argument("problem")
    p.add_argument("--algo", choices=sorted(ALGORITHMS), default="focused")
    planner_options(p)
    p.add_argument("--weight", type=float, default=1.0, help="weight on path cost in best-first search")
    p.add_argument("--no-axioms", action="store_true", help="ground without derived variables")
    p.add_argument("--lazy-tokens", choices=["sampler", "instance"], default=None)
    p.add_argument("--trace", action="store_true", help="include per-iteration records in the report")
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="check a plan (or run report) against a problem")
    p.add_argument("problem")
    p.add_argument("plan")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", help="write a benchmark problem file")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("size", type=int)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--formulation", choices=["manipulation", "pickplace"], default="manipulation")
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="run a benchmark grid and print a CSV table")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--sizes", type=int, nargs="+", required=True)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--algos", nargs="+", choices=sorted(ALGORITHMS), default=["focused", "incremental"])
    p.add_argument("--search", nargs="+", choices=["bfs", "hff"], default=["hff"])
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--timeout-s", type=float, default=120.0)
    p.add_argument("--formulation", choices=["manipulation", "pickplace"], default="manipulation")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("ground", help="print the task grounded from a problem's initial elements")
    p.add_argument("problem")
    p.add_argument("--no-axioms", action="store_true")
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("schema", help="print the JSON schema of problem files")
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=cmd_schema)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for bad arguments
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (FormatError, UsageError, ValueError) as exc:
        print(f"ftsplan: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ftsplan: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

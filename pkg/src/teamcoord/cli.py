"""Command-line harness: scenario generation, single runs with trace and
handshake export, and the factorial experiment sweep that fans out over a
worker pool and writes one metrics CSV."""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

from .sim import VARIANTS, PlanIntegrityError, handshake_csv, run, trace_csv, validate
from .world import (GenerationError, ScenarioFormatError, generate_scenario,
                    load_scenario, save_scenario)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_VALIDATION = 3

METRICS_COLUMNS = ["graph_seed", "variant", "H", "sensing_factor",
                   "communication_factor", "total_cost", "steps_used",
                   "truncated", "runtime_ms", "messages_sent", "status"]

SWEEP_FACTORS = (0.2, 0.4, 0.6)


class _Parser(argparse.ArgumentParser):
    """argparse flavor whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("%s: error: %s\n" % (self.prog, message))
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="teamcoord",
                     description="multi-robot planning on graphs whose risky "
                                 "edges get cheap with a stationed supporter")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", parents=[], help="write a random scenario file")
    gen.add_argument("--nodes", type=int, default=20)
    gen.add_argument("--density", type=float, default=0.5,
                     help="fraction of all node pairs that get an edge")
    gen.add_argument("--risky", type=float, default=0.2,
                     help="fraction of edges that are risky")
    gen.add_argument("--robots", type=int, default=7)
    gen.add_argument("--types", type=int, default=1)
    gen.add_argument("--sensing", type=float, default=0.4)
    gen.add_argument("--comm", type=float, default=0.4)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--time-limit", type=int, default=None,
                     help="override the default 10x node count")
    gen.add_argument("--alpha", type=float, default=None)
    gen.add_argument("--epsilon", type=float, default=None)
    gen.add_argument("--subgoal-cap", type=int, default=None)
    gen.add_argument("--exact-cap", type=int, default=None)
    gen.add_argument("--out", required=True)

    one = sub.add_parser("run", help="run one scenario file under one variant")
    one.add_argument("--scenario", required=True)
    one.add_argument("--variant", choices=VARIANTS, default="full")
    one.add_argument("--trace", default=None, help="write the move trace CSV")
    one.add_argument("--handshakes", default=None,
                     help="write the handshake log CSV")
    one.add_argument("--validate", action="store_true",
                     help="replay the trace through the constraint checker")

    exp = sub.add_parser("experiment", help="factorial sweep to a metrics CSV")
    exp.add_argument("--graphs", type=int, default=10)
    exp.add_argument("--nodes", type=int, default=20)
    exp.add_argument("--density", type=float, default=0.5)
    exp.add_argument("--risky", type=float, default=0.2)
    exp.add_argument("--robots", type=int, default=7)
    exp.add_argument("--types", type=int, default=2)
    exp.add_argument("--sensing-factors", type=float, nargs="+",
                     default=list(SWEEP_FACTORS))
    exp.add_argument("--comm-factors", type=float, nargs="+",
                     default=list(SWEEP_FACTORS))
    exp.add_argument("--variants", nargs="+", choices=VARIANTS,
                     default=list(VARIANTS))
    exp.add_argument("--base-seed", type=int, default=0)
    # pairwise decomposition keeps the 360-run default sweep under a minute;
    # exact triples are ~200x slower per plan on a 20-node map
    exp.add_argument("--exact-cap", type=int, default=2)
    exp.add_argument("--workers", type=int, default=None,
                     help="worker processes, default one per CPU")
    exp.add_argument("--out", required=True)
    return parser


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def _cmd_generate(args) -> int:
    try:
        scenario = generate_scenario(
            num_nodes=args.nodes, edge_density=args.density,
            risky_fraction=args.risky, num_robots=args.robots,
            num_types=args.types, sensing_factor=args.sensing,
            communication_factor=args.comm, seed=args.seed)
    except GenerationError as exc:
        sys.stderr.write("generate: %s\n" % exc)
        return EXIT_USAGE
    overrides = {}
    if args.time_limit is not None:
        overrides["time_limit"] = args.time_limit
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    if args.epsilon is not None:
        overrides["epsilon"] = args.epsilon
    if args.subgoal_cap is not None:
        overrides["subgoal_cap"] = args.subgoal_cap
    if args.exact_cap is not None:
        overrides["exact_cap"] = args.exact_cap
    if overrides:
        try:
            scenario = replace(scenario, **{
                {"exact_cap": "exact_group_cap"}.get(k, k): v
                for k, v in overrides.items()})
        except ValueError as exc:
            sys.stderr.write("generate: %s\n" % exc)
            return EXIT_USAGE
    try:
        save_scenario(scenario, args.out)
    except OSError as exc:
        sys.stderr.write("generate: cannot write %s: %s\n" % (args.out, exc))
        return EXIT_RUNTIME
    print("wrote %s: %d nodes, %d edges (%d risky), %d robots"
          % (args.out, scenario.graph.num_nodes, len(scenario.graph.edges),
             sum(e.risky for e in scenario.graph.edges), len(scenario.robots)))
    return EXIT_OK


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def _cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except FileNotFoundError:
        sys.stderr.write("run: no such scenario file: %s\n" % args.scenario)
        return EXIT_RUNTIME
    except ScenarioFormatError as exc:
        sys.stderr.write("run: %s\n" % exc)
        return EXIT_RUNTIME
    try:
        result = run(scenario, args.variant)
    except PlanIntegrityError as exc:
        sys.stderr.write("run: %s\n" % exc)
        return EXIT_RUNTIME
    try:
        if args.trace:
            with open(args.trace, "w", encoding="utf-8") as fh:
                fh.write(trace_csv(result))
        if args.handshakes:
            with open(args.handshakes, "w", encoding="utf-8") as fh:
                fh.write(handshake_csv(result))
    except OSError as exc:
        sys.stderr.write("run: cannot write output: %s\n" % exc)
        return EXIT_RUNTIME
    print("variant=%s total_cost=%r steps_used=%d truncated=%s "
          "messages_sent=%d runtime_ms=%d"
          % (result.variant, result.total_cost, result.steps_used,
             str(result.truncated).lower(), result.messages_sent,
             round(result.runtime_s * 1000)))
    if args.validate:
        issues = validate(scenario, result)
        for issue in issues:
            sys.stderr.write("violation: %s\n" % issue)
        if issues:
            return EXIT_VALIDATION
        print("validation: ok")
    return EXIT_OK


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Task:
    graph_seed: int
    variant: str
    num_nodes: int
    edge_density: float
    risky_fraction: float
    num_robots: int
    num_types: int
    sensing_factor: float
    communication_factor: float
    exact_cap: Optional[int]


def _run_task(task: _Task) -> List[str]:
    """One sweep cell; returns a metrics CSV row. Failures land in the
    status column instead of killing the sweep."""
    try:
        scenario = generate_scenario(
            num_nodes=task.num_nodes, edge_density=task.edge_density,
            risky_fraction=task.risky_fraction, num_robots=task.num_robots,
            num_types=task.num_types, sensing_factor=task.sensing_factor,
            communication_factor=task.communication_factor,
            seed=task.graph_seed)
        if task.exact_cap is not None:
            scenario = replace(scenario, exact_group_cap=task.exact_cap)
        result = run(scenario, task.variant)
        return [str(task.graph_seed), task.variant, str(task.num_types),
                repr(task.sensing_factor), repr(task.communication_factor),
                repr(result.total_cost), str(result.steps_used),
                str(result.truncated).lower(),
                str(round(result.runtime_s * 1000)),
                str(result.messages_sent), "ok"]
    except Exception as exc:  # noqa: BLE001 - sweep must keep going
        return [str(task.graph_seed), task.variant, str(task.num_types),
                repr(task.sensing_factor), repr(task.communication_factor),
                "", "", "", "", "", "error: %s" % exc]


def sweep_tasks(graphs: int, nodes: int, density: float, risky: float,
                robots: int, types: int, sensing_factors: Sequence[float],
                comm_factors: Sequence[float], variants: Sequence[str],
                base_seed: int, exact_cap: Optional[int] = None) -> List[_Task]:
    """Row order of the metrics CSV: graph, then variant, then sensing,
    then communication factor."""
    tasks = []
    for g in range(graphs):
        for variant in variants:
            for s in sensing_factors:
                for c in comm_factors:
                    tasks.append(_Task(
                        graph_seed=base_seed + g, variant=variant,
                        num_nodes=nodes, edge_density=density,
                        risky_fraction=risky, num_robots=robots,
                        num_types=types, sensing_factor=s,
                        communication_factor=c, exact_cap=exact_cap))
    return tasks


def run_experiment(tasks: Sequence[_Task], out_path: str,
                   workers: Optional[int] = None) -> None:
    """Execute a sweep over a process pool; rows keep task order no matter
    how the pool schedules them."""
    if workers is None:
        workers = os.cpu_count() or 1
    workers = max(1, min(workers, len(tasks) or 1))
    if workers == 1:
        rows = [_run_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_task, tasks, chunksize=4))
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_COLUMNS)
        writer.writerows(rows)


def _cmd_experiment(args) -> int:
    tasks = sweep_tasks(args.graphs, args.nodes, args.density, args.risky,
                        args.robots, args.types, args.sensing_factors,
                        args.comm_factors, args.variants, args.base_seed,
                        args.exact_cap)
    try:
        run_experiment(tasks, args.out, args.workers)
    except OSError as exc:
        sys.stderr.write("experiment: cannot write %s: %s\n"
                         % (args.out, exc))
        return EXIT_RUNTIME
    failures = 0
    with open(args.out, "r", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row["status"] != "ok":
                failures += 1
    print("wrote %s: %d runs, %d failed" % (args.out, len(tasks), failures))
    return EXIT_OK if failures == 0 else EXIT_RUNTIME


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handler = {"generate": _cmd_generate, "run": _cmd_run,
               "experiment": _cmd_experiment}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())

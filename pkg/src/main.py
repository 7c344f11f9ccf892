"""
Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
SPDX-License-Identifier: MIT-0
"""
"""
Command line entry point: solve, validate, decompose, gen, oracle, bench
"""
import os
import sys
import json
import argparse
import logging
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence
import networkx as nx
import numpy as np
import pandas as pd
from dotenv import load_dotenv
from pydantic import BaseModel, Field
from builders import (EXACT_ALPHA_CAP, IntervalSeparatorFinder, build_from_separators, clique_tree_chordal,
                      exact_tree_alpha, greedy_clique_separator, interval_graph, random_intervals, read_intervals,
                      write_intervals)
from decomposition import TreeDecomposition, read_td, validate, write_td
from graph_core import (Graph, cycle_graph, gnp_graph, grid_graph, load_graph, path_graph, petersen_graph,
                        random_chordal_graph, random_weights, write_gr, write_weights)
from oracle import cross_check_suite
from solver import SOLVER_THREADS, solve
from type_algebra import PROBLEMS, parse_problem
from utils import InputError, load_config, parse_fraction

load_dotenv()  # load env vars from .env

logging.basicConfig(
    level=os.environ.get("LOG_LEVEL", "INFO"),
    format='%(asctime)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s',
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEGATIVE = 2

BUILDERS = ("auto", "clique-tree", "separators", "interval", "exact")
GENERATORS = ("gnp", "chordal", "interval", "grid", "cycle", "path", "petersen")

DEFAULT_BENCH = {"sizes": [10, 15, 20, 25, 30], "ks": [1, 2], "problem": "induced-forest", "seed": 0, "repeats": 1}
DEFAULT_ORACLE = {"instances": 20, "max_n": 12, "merged_pairs": 20, "trials": 200, "context_size": 8,
                  "compress_probes": 10}


def emit(payload: Any, out: str = '') -> None:
    text = payload if isinstance(payload, str) else json.dumps(payload, ensure_ascii=False)
    if out:
        with open(out, 'w') as f:
            f.write(text + "\n")
        logger.info(f"wrote {out}")
    else:
        print(text)


def build_decomposition(g: Graph, builder: str, intervals_path: str = '', beta: str = "2/3",
                        workers: int = 1) -> TreeDecomposition:
    beta = parse_fraction(beta)
    if builder == "auto":
        if g.n == 0 or nx.is_chordal(g.nx_graph):
            builder = "clique-tree"
        elif intervals_path:
            builder = "interval"
        elif g.n <= EXACT_ALPHA_CAP:
            builder = "exact"
        else:
            builder = "separators"
        logger.info(f"auto builder picked '{builder}'")
    if builder == "clique-tree":
        return clique_tree_chordal(g)
    if builder == "exact":
        return exact_tree_alpha(g)[1]
    if builder == "interval":
        if not intervals_path:
            raise InputError("builder 'interval' needs --intervals")
        intervals = read_intervals(intervals_path)
        if len(intervals) != g.n:
            raise InputError(f"{len(intervals)} intervals for a graph of order {g.n}")
        return build_from_separators(g, IntervalSeparatorFinder(intervals), beta, workers=workers)
    if builder == "separators":
        return build_from_separators(g, greedy_clique_separator, beta, workers=workers)
    raise InputError(f"unknown builder '{builder}', choose from {list(BUILDERS)}")


def cmd_solve(args, conf: Dict[str, Any]) -> int:
    g = load_graph(args.graph, args.weights)
    spec = parse_problem(args.problem, key_filter=args.key_filter)
    td = read_td(args.td) if args.td else build_decomposition(g, args.builder, args.intervals, args.beta, args.threads)
    result = solve(g, td, spec, k=args.k, threads=args.threads, dump_signatures=args.dump_signatures)
    emit(result.report(timing=not args.omit_timing), args.out)
    return EXIT_OK if result.solution.feasible else EXIT_NEGATIVE


def cmd_validate(args, conf: Dict[str, Any]) -> int:
    g = load_graph(args.graph, args.weights)
    td = read_td(args.td)
    report = validate(g, td)
    if report.valid and args.k is not None and report.alpha is not None and report.alpha > args.k:
        logger.warning(f"decomposition is valid but has independence number {report.alpha} > k={args.k}")
        emit(report.model_dump(), args.out)
        return EXIT_NEGATIVE
    emit(report.model_dump(), args.out)
    return EXIT_OK if report.valid else EXIT_NEGATIVE


def cmd_decompose(args, conf: Dict[str, Any]) -> int:
    g = load_graph(args.graph, args.weights)
    td = build_decomposition(g, args.builder, args.intervals, args.beta, args.workers)
    report = validate(g, td)
    if not report.valid:
        emit(report.model_dump(), '')
        return EXIT_NEGATIVE
    if td.claimed_alpha is None:
        td = replace(td, claimed_alpha=report.alpha)
    write_td(td, args.out, g.n, comments=[f"builder {args.builder}", f"graph {args.graph}"])
    emit({"builder": args.builder, "nodes": report.node_count, "width": report.width, "alpha": report.alpha,
          "td": args.out})
    return EXIT_OK


def generate(kind: str, n: int, seed: int, p: float = 0.3, rows: int = 0, cols: int = 0):
    """(graph, intervals or None) for one generator kind."""
    if kind == "gnp":
        return gnp_graph(n, p, seed=seed), None
    if kind == "chordal":
        return random_chordal_graph(n, seed=seed), None
    if kind == "interval":
        intervals = random_intervals(n, seed=seed)
        return interval_graph(intervals), intervals
    if kind == "grid":
        return grid_graph(rows or n, cols or n), None
    if kind == "cycle":
        return cycle_graph(n), None
    if kind == "path":
        return path_graph(n), None
    if kind == "petersen":
        return petersen_graph(), None
    raise InputError(f"unknown generator '{kind}', choose from {list(GENERATORS)}")


def cmd_gen(args, conf: Dict[str, Any]) -> int:
    g, intervals = generate(args.kind, args.n, args.seed, args.p, args.rows, args.cols)
    comments = [f"generator {args.kind} n={args.n} seed={args.seed}" + (f" p={args.p}" if args.kind == "gnp" else "")]
    if args.weighted:
        g = g.with_weights(random_weights(g.n, seed=args.seed))
    write_gr(g, args.out, comments=comments)
    outputs = {"graph": args.out, "n": g.n, "m": g.m, "seed": args.seed}
    if args.weighted:
        weights_out = args.weights_out or f"{args.out}.weights"
        write_weights(g, weights_out)
        outputs["weights"] = weights_out
    if intervals is not None:
        intervals_out = args.intervals_out or f"{args.out}.intervals"
        write_intervals(intervals, intervals_out)
        outputs["intervals"] = intervals_out
    emit(outputs)
    return EXIT_OK


def cmd_oracle(args, conf: Dict[str, Any]) -> int:
    defaults = {**DEFAULT_ORACLE, **conf.get("oracle", {})}

    def pick(name):
        value = getattr(args, name)
        return defaults[name] if value is None else value

    report = cross_check_suite(
        seed=args.seed, instances=pick("instances"), max_n=pick("max_n"), problems=args.problems or None,
        merged_pairs=pick("merged_pairs"), trials=pick("trials"), context_size=pick("context_size"),
        compress_probes=pick("compress_probes"))
    summary = report.model_dump(exclude={"failures"})
    summary["passed"] = report.passed
    summary["failure_count"] = len(report.failures)
    lines = [json.dumps(summary, ensure_ascii=False)]
    lines.extend(json.dumps(f, ensure_ascii=False) for f in report.failures)
    for failure in report.failures:
        logger.error(f"cross-check failure: {failure}")
    emit("\n".join(lines), args.out)
    return EXIT_OK if report.passed else EXIT_NEGATIVE


class BenchSummary(BaseModel):
    problem: str
    seed: int
    slopes: Dict[str, Optional[float]] = Field(default_factory=dict)
    plateau: Dict[str, bool] = Field(default_factory=dict)
    rows: int = 0


def bench_instance(n: int, k: int, seed: int):
    """Chordal graph with its clique tree; for k = 2 a random matching is deleted, leaving bags of α <= 2."""
    g = random_chordal_graph(n, seed=seed)
    td = clique_tree_chordal(g)
    if k >= 2:
        rng = np.random.default_rng(seed)
        used = set()
        dropped = set()
        for i in rng.permutation(len(g.edges)):
            u, v = g.edges[int(i)]
            if u not in used and v not in used and rng.random() < 0.5:
                used.update((u, v))
                dropped.add((u, v))
        g = Graph.from_edges(g.n, [e for e in g.edges if e not in dropped])
        td = TreeDecomposition(bags=td.bags, edges=td.edges, root=td.root)
    return g.with_weights(random_weights(g.n, seed=seed)), td


def plateau_holds(sizes: Sequence[int]) -> bool:
    """Last-quartile max at most twice the mid-quartile max, sizes ordered by n."""
    if len(sizes) < 4:
        return True
    q = max(1, len(sizes) // 4)
    start = (len(sizes) - q) // 2
    return max(sizes[-q:]) <= 2 * max(sizes[start:start + q])


def run_bench(sizes: Sequence[int], ks: Sequence[int], problem: str, seed: int, repeats: int = 1,
              threads: int = 1) -> tuple:
    spec = parse_problem(problem)
    rows: List[Dict[str, Any]] = []
    for k in ks:
        for n in sizes:
            for r in range(repeats):
                inst_seed = seed + 1000 * r + n
                g, td = bench_instance(n, k, inst_seed)
                result = solve(g, td, spec, k=k, threads=threads)
                rows.append({"n": n, "k": k, "t": spec.t, "problem": spec.label, "seed": inst_seed,
                             "wall_time": result.stats.wall_time, "max_family_size": result.stats.max_family_size,
                             "distinct_signatures": result.stats.distinct_signatures, "nodes": result.stats.nodes,
                             "weight": result.solution.weight})
    frame = pd.DataFrame(rows)
    summary = BenchSummary(problem=spec.label, seed=seed, rows=len(rows))
    for k, part in (frame.groupby("k") if len(frame) else []):
        per_n = part.groupby("n").agg({"wall_time": "mean", "max_family_size": "max"}).sort_index()
        if len(per_n) >= 2 and (per_n["wall_time"] > 0).all():
            slope = np.polyfit(np.log(per_n.index.to_numpy(dtype=float)), np.log(per_n["wall_time"].to_numpy()), 1)[0]
            summary.slopes[str(k)] = round(float(slope), 4)
        else:
            summary.slopes[str(k)] = None
        holds = plateau_holds([int(x) for x in per_n["max_family_size"]])
        summary.plateau[str(k)] = holds
        if not holds:
            logger.warning(f"k={k}: max family size keeps growing with n: {list(per_n['max_family_size'])}")
    return frame, summary


def cmd_bench(args, conf: Dict[str, Any]) -> int:
    defaults = {**DEFAULT_BENCH, **conf.get("bench", {})}
    sizes = args.sizes or defaults["sizes"]
    ks = args.ks or defaults["ks"]
    problem = args.problem or defaults["problem"]
    seed = defaults["seed"] if args.seed is None else args.seed
    repeats = args.repeats or defaults["repeats"]
    frame, summary = run_bench(sizes, ks, problem, seed, repeats, threads=args.threads)
    frame.to_csv(args.out, index=False)
    logger.info(f"wrote {len(frame)} rows to {args.out}")
    emit(summary.model_dump(), args.summary)
    return EXIT_OK


def build_parser(conf: Dict[str, Any]) -> argparse.ArgumentParser:
    problems = conf.get("problems") or sorted(PROBLEMS)
    parser = argparse.ArgumentParser(description="Maximum weight induced subgraphs of bounded treewidth over "
                                                 "tree decompositions of bounded independence number")
    parser.add_argument('--conf', default='conf/config.json', help="json config file with bench/oracle defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance and print the solution json")
    p.add_argument('--graph', required=True, help=".gr file")
    p.add_argument('--td', default='', help=".td file; built with --builder when absent")
    p.add_argument('--builder', default='auto', choices=BUILDERS)
    p.add_argument('--intervals', default='', help="intervals file for the interval builder")
    p.add_argument('--beta', default='2/3', help="separator balance")
    p.add_argument('--problem', required=True, help=f"one of {problems}, optionally with @mod<p>=<r>")
    p.add_argument('--k', type=int, default=None, help="independence bound, defaults to the decomposition's")
    p.add_argument('--weights', default='', help="weights file '<v> <num>/<den>' per line")
    p.add_argument('--out', default='', help="write the json here instead of stdout")
    p.add_argument('--threads', type=int, default=SOLVER_THREADS)
    p.add_argument('--key-filter', action='store_true', help="enable the problem's extra key filter")
    p.add_argument('--dump-signatures', action='store_true', help="include root family signatures")
    p.add_argument('--omit-timing', action='store_true', help="leave wall_time out of the json")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="check a decomposition against a graph")
    p.add_argument('--graph', required=True)
    p.add_argument('--td', required=True)
    p.add_argument('--weights', default='')
    p.add_argument('--k', type=int, default=None)
    p.add_argument('--out', default='')
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("decompose", help="build a decomposition and write it as .td")
    p.add_argument('--graph', required=True)
    p.add_argument('--weights', default='')
    p.add_argument('--builder', default='auto', choices=BUILDERS)
    p.add_argument('--intervals', default='')
    p.add_argument('--beta', default='2/3')
    p.add_argument('--workers', type=int, default=1)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("gen", help="generate a graph")
    p.add_argument('kind', choices=GENERATORS)
    p.add_argument('--n', type=int, default=10)
    p.add_argument('--p', type=float, default=0.3)
    p.add_argument('--rows', type=int, default=0)
    p.add_argument('--cols', type=int, default=0)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--weighted', action='store_true', help="also write random rational weights")
    p.add_argument('--weights-out', default='')
    p.add_argument('--intervals-out', default='')
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("oracle", help="run the seeded cross-check suite")
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--instances', type=int, default=None)
    p.add_argument('--max-n', dest="max_n", type=int, default=None)
    p.add_argument('--problems', nargs='*', default=None)
    p.add_argument('--merged-pairs', dest="merged_pairs", type=int, default=None)
    p.add_argument('--trials', type=int, default=None)
    p.add_argument('--context-size', dest="context_size", type=int, default=None)
    p.add_argument('--compress-probes', dest="compress_probes", type=int, default=None)
    p.add_argument('--out', default='')
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="time the solver over growing n and write a csv")
    p.add_argument('--sizes', type=int, nargs='*', default=None)
    p.add_argument('--ks', type=int, nargs='*', default=None)
    p.add_argument('--problem', default=None)
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--repeats', type=int, default=None)
    p.add_argument('--threads', type=int, default=SOLVER_THREADS)
    p.add_argument('--out', default='bench.csv')
    p.add_argument('--summary', default='', help="write the slope/plateau json here instead of stdout")
    p.set_defaults(func=cmd_bench)
    return parser


def _conf_path(argv: Sequence[str]) -> str:
    for i, a in enumerate(argv):
        if a == '--conf' and i + 1 < len(argv):
            return argv[i + 1]
        if a.startswith('--conf='):
            return a.split('=', 1)[1]
    return 'conf/config.json' if os.path.exists('conf/config.json') else ''


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        conf = load_config(_conf_path(argv))
    except InputError as e:
        logger.error(f"config: {e}")
        return EXIT_ERROR
    parser = build_parser(conf)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_ERROR
    try:
        return args.func(args, conf)
    except Exception as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())

"""
Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
SPDX-License-Identifier: MIT-0
"""
"""
Ground truth for the solver: exhaustive search, random-context equivalence tests and
the seeded cross-check suite
"""
import os
import logging
from fractions import Fraction
from typing import Dict, List, Optional, Sequence
import numpy as np
from dotenv import load_dotenv
from pydantic import BaseModel, Field
from builders import (EXACT_ALPHA_CAP, IntervalSeparatorFinder, build_from_separators, clique_tree_chordal,
                      exact_tree_alpha, greedy_clique_separator, interval_graph, random_intervals)
from decomposition import TreeDecomposition, alpha_of_decomposition
from graph_core import Graph, gnp_graph, induced_subgraph, random_chordal_graph, random_weights, subset_treewidth_below
from rep_family import FamilyEntry, MergedPair, compress
from solver import solve
from type_algebra import (COMPLEMENT_ALIASES, PROBLEMS, BoundariedGraph, ProblemSpec, Solution, accepts, forget_all,
                          glue, make_solution, parse_problem)
from utils import InputError, ResourceLimitError

load_dotenv()  # load env vars from .env

logging.basicConfig(
    level=os.environ.get("LOG_LEVEL", "INFO"),
    format='%(asctime)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s',
)
logger = logging.getLogger(__name__)

BRUTE_FORCE_CAP = int(os.environ.get("BRUTE_FORCE_CAP", 20))
CONTEXT_DENSITIES = (0.0, 0.15, 0.3, 0.5)
CONTEXT_REJECTIONS = 20
SEPARATOR_BETA = Fraction(2, 3)
INSTANCE_FAMILIES = ("gnp-0.2", "gnp-0.4", "gnp-0.6", "chordal", "interval")


def brute_force_solve(g: Graph, spec: ProblemSpec) -> Solution:
    """Best of all 2^n subsets. Uses nothing but the graph model and the problem's acceptance test."""
    if g.n > BRUTE_FORCE_CAP:
        raise ResourceLimitError(f"brute force on {g.n} vertices exceeds BRUTE_FORCE_CAP={BRUTE_FORCE_CAP}")
    best = None
    best_weight = Fraction(-1)
    for mask in range(1 << g.n):
        vs = tuple(v for v in range(g.n) if mask >> v & 1)
        w = g.weight_of(vs)
        if w < best_weight or (w == best_weight and vs > best):
            continue
        if not subset_treewidth_below(g, vs, spec.t):
            continue
        if not accepts(spec, induced_subgraph(g, vs)):
            continue
        best, best_weight = vs, w
    return make_solution(spec, g, best)


class EquivalenceVerdict(BaseModel):
    equivalent: bool
    trials: int
    counterexample: Optional[dict] = None


def _outcome(spec: ProblemSpec, g: Graph) -> bool:
    return subset_treewidth_below(g, range(g.n), spec.t) and accepts(spec, g)


def random_context(spec: ProblemSpec, boundary_size: int, context_size: int, rng: np.random.Generator) -> BoundariedGraph:
    """Erdős–Rényi context whose first boundary_size vertices form its boundary, rejected until tw < t."""
    n = boundary_size + int(rng.integers(0, max(0, context_size - boundary_size) + 1))
    p = float(rng.choice(CONTEXT_DENSITIES))
    for _ in range(CONTEXT_REJECTIONS):
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
        g = Graph.from_edges(n, edges)
        if subset_treewidth_below(g, range(n), spec.t):
            return BoundariedGraph(g, tuple(range(boundary_size)))
    return BoundariedGraph(Graph.from_edges(n, []), tuple(range(boundary_size)))


def contextual_equivalence(spec: ProblemSpec, g1: BoundariedGraph, g2: BoundariedGraph, trials: int = 200,
                           context_size: int = 8, seed: int = 0) -> EquivalenceVerdict:
    """Compare both pieces in random contexts; the first trial uses the empty context."""
    m = len(g1.boundary)
    if len(g2.boundary) != m:
        raise InputError(f"boundary lengths differ: {m} vs {len(g2.boundary)}")
    matching = [(i, i) for i in range(m)]
    streams = np.random.SeedSequence(seed).spawn(trials)
    for i, stream in enumerate(streams):
        if i == 0:
            context = BoundariedGraph(Graph.from_edges(m, []), tuple(range(m)))
        else:
            context = random_context(spec, m, context_size, np.random.default_rng(stream))
        left = _outcome(spec, forget_all(glue(g1, context, matching)).graph)
        right = _outcome(spec, forget_all(glue(g2, context, matching)).graph)
        if left != right:
            return EquivalenceVerdict(equivalent=False, trials=i + 1, counterexample={
                "trial": i, "context_order": context.graph.n,
                "context_edges": [list(e) for e in context.graph.edges], "first": left, "second": right})
    return EquivalenceVerdict(equivalent=True, trials=trials)


def check_instance(g: Graph, td: TreeDecomposition, spec: ProblemSpec, k: Optional[int] = None,
                   merge_log: Optional[List[MergedPair]] = None) -> Optional[dict]:
    """Failure record when the solver disagrees with brute force or raises, None otherwise."""
    try:
        expected = brute_force_solve(g, spec)
        got = solve(g, td, spec, k=k, merge_log=merge_log).solution
    except Exception as e:
        return {"kind": "error", "problem": spec.label, "error": f"{type(e).__name__}: {e}"}
    if got.feasible != expected.feasible or got.weight != expected.weight:
        return {"kind": "mismatch", "problem": spec.label, "expected": expected.weight, "got": got.weight}
    if got.feasible and not all(got.certificate.values()):
        return {"kind": "certificate", "problem": spec.label, "certificate": got.certificate}
    return None


def compress_probe(spec: ProblemSpec, g: Graph, rng: np.random.Generator, size: int = 32) -> Optional[dict]:
    """Subset, dominance and idempotence of compress on a random family sharing a boundary."""
    b_size = int(rng.integers(0, min(spec.t, g.n) + 1))
    b = tuple(sorted(int(x) for x in rng.choice(g.n, size=b_size, replace=False))) if b_size else ()
    if not subset_treewidth_below(g, b, spec.t):
        return None
    family = []
    for _ in range(size):
        extra = [v for v in range(g.n) if v not in b and rng.random() < 0.4]
        vs = tuple(sorted(set(b) | set(extra)))
        if subset_treewidth_below(g, vs, spec.t):
            family.append(FamilyEntry.of(g, vs))
    if not family:
        return None
    ell = max(1, len(b))
    out = compress(spec, g, b, family, ell)
    by_key: Dict[bytes, Fraction] = {}
    if [e.vertices for e in compress(spec, g, b, family[::-1], ell)] != [e.vertices for e in out]:
        return {"kind": "compress-order", "boundary": list(b)}
    inputs = {e.vertices for e in family}
    if not all(e.vertices in inputs for e in out):
        return {"kind": "compress-subset", "boundary": list(b)}
    for e in family:
        k = compress(spec, g, b, [e], ell)[0].key
        by_key[k] = max(by_key.get(k, Fraction(-1)), e.weight)
    if {e.key: e.weight for e in out} != by_key:
        return {"kind": "compress-dominance", "boundary": list(b)}
    if [e.vertices for e in compress(spec, g, b, out, ell)] != [e.vertices for e in out]:
        return {"kind": "compress-idempotence", "boundary": list(b)}
    return None


class InstanceRecord(BaseModel):
    index: int
    family: str
    seed: int
    n: int
    m: int
    builder: str
    alpha: int


class CrossCheckReport(BaseModel):
    seed: int
    problems: List[str]
    instances: List[InstanceRecord] = Field(default_factory=list)
    checks: int = 0
    merged_pairs: int = 0
    merged_pairs_tested: int = 0
    compress_probes: int = 0
    failures: List[dict] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def random_instance(family: str, n: int, seed: int) -> tuple:
    """(graph, decomposition, builder name) for one of the suite's instance families."""
    if family == "interval":
        intervals = random_intervals(n, seed=seed, span=3 * n)
        g = interval_graph(intervals)
        finder = IntervalSeparatorFinder(intervals)
    elif family == "chordal":
        g = random_chordal_graph(n, seed=seed)
        finder = greedy_clique_separator
    else:
        g = gnp_graph(n, float(family.split("-")[1]), seed=seed)
        finder = greedy_clique_separator
    g = g.with_weights(random_weights(g.n, seed=seed))
    if seed % 2 == 0 and g.n <= EXACT_ALPHA_CAP:
        _, td = exact_tree_alpha(g)
        return g, td, "exact"
    if family == "chordal" and seed % 4 == 1:
        return g, clique_tree_chordal(g), "clique-tree"
    return g, build_from_separators(g, finder, SEPARATOR_BETA), "separators"


def default_problems() -> List[str]:
    names = [name for name in PROBLEMS if name not in COMPLEMENT_ALIASES]
    return names + [f"{name}@mod2=0" for name in names]


def cross_check_suite(seed: int = 0, instances: int = 20, max_n: int = 12, problems: Optional[Sequence[str]] = None,
                      merged_pairs: int = 20, trials: int = 200, context_size: int = 8,
                      compress_probes: int = 10) -> CrossCheckReport:
    """Seeded oracle run; the report holds no timings so equal seeds give identical reports."""
    names = list(problems) if problems else default_problems()
    specs = [parse_problem(name) for name in names]
    report = CrossCheckReport(seed=seed, problems=names)
    root = np.random.SeedSequence(seed)
    streams = root.spawn(instances + compress_probes + 1)
    merged: List[tuple] = []
    for i in range(instances):
        rng = np.random.default_rng(streams[i])
        family = INSTANCE_FAMILIES[i % len(INSTANCE_FAMILIES)]
        n = int(rng.integers(3, max_n + 1))
        inst_seed = int(rng.integers(0, 2 ** 31))
        try:
            g, td, builder = random_instance(family, n, inst_seed)
        except Exception as e:
            report.failures.append({"kind": "build-error", "index": i, "family": family, "seed": inst_seed,
                                    "error": f"{type(e).__name__}: {e}"})
            continue
        report.instances.append(InstanceRecord(index=i, family=family, seed=inst_seed, n=g.n, m=g.m,
                                               builder=builder, alpha=alpha_of_decomposition(g, td)))
        for spec in specs:
            log: List[MergedPair] = []
            report.checks += 1
            failure = check_instance(g, td, spec, merge_log=log)
            if failure is not None:
                failure.update({"index": i, "family": family, "seed": inst_seed, "builder": builder})
                report.failures.append(failure)
            merged.extend((i, spec, g, pair) for pair in log)
    report.merged_pairs = len(merged)

    pick = np.random.default_rng(streams[instances])
    chosen = sorted(pick.choice(len(merged), size=min(merged_pairs, len(merged)), replace=False).tolist()) if merged else []
    for j in chosen:
        i, spec, g, pair = merged[j]
        verdict = contextual_equivalence(spec, _boundaried(g, pair.kept, pair.boundary),
                                         _boundaried(g, pair.dropped, pair.boundary),
                                         trials=trials, context_size=context_size, seed=seed + j)
        report.merged_pairs_tested += 1
        if not verdict.equivalent:
            report.failures.append({"kind": "merged-pair", "index": i, "problem": spec.label,
                                    "boundary": [v + 1 for v in pair.boundary],
                                    "kept": [v + 1 for v in pair.kept], "dropped": [v + 1 for v in pair.dropped],
                                    "counterexample": verdict.counterexample})

    for j in range(compress_probes):
        rng = np.random.default_rng(streams[instances + 1 + j])
        spec = specs[j % len(specs)]
        g = gnp_graph(int(rng.integers(3, 11)), 0.3, seed=int(rng.integers(0, 2 ** 31)))
        g = g.with_weights(random_weights(g.n, seed=j))
        failure = compress_probe(spec, g, rng)
        report.compress_probes += 1
        if failure is not None:
            failure.update({"probe": j, "problem": spec.label})
            report.failures.append(failure)
    logger.info(f"cross-check seed {seed}: {report.checks} checks, {report.merged_pairs_tested} merged pairs, "
                f"{len(report.failures)} failures")
    return report


def _boundaried(g: Graph, vertices: Sequence[int], boundary: Sequence[int]) -> BoundariedGraph:
    position = {v: i for i, v in enumerate(vertices)}
    return BoundariedGraph(induced_subgraph(g, vertices), tuple(position[v] for v in boundary))

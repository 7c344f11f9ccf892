"""
Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
SPDX-License-Identifier: MIT-0
"""
"""
Dynamic program over a nice tree decomposition of bounded independence number.

Table F[u, B] holds feasible sets F of the subtree below u with F ∩ X_u = B and
tw(g[F]) < t, compressed to one representative per canonical signature. Keys
never exceed ell = max(1, k*t) vertices.
"""
import os
import time
import asyncio
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Set
from dotenv import load_dotenv
from pydantic import BaseModel, Field
from decomposition import NodeKind, TreeDecomposition, alpha_of_decomposition, make_nice
from graph_core import Graph, VertexSet, induced_subgraph, subset_treewidth_below
from rep_family import FamilyEntry, MergedPair, SignatureCache, compress
from signature_engine import compute_signature, signature_to_json
from type_algebra import ProblemSpec, Solution, accepts, make_solution
from utils import ContractError, InputError, env_flag, format_fraction

load_dotenv()  # load env vars from .env

logging.basicConfig(
    level=os.environ.get("LOG_LEVEL", "INFO"),
    format='%(asctime)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s',
)
logger = logging.getLogger(__name__)

SOLVER_THREADS = int(os.environ.get("SOLVER_THREADS", 1))
DEBUG_CHECKS = env_flag("DEBUG_CHECKS")

Table = Dict[VertexSet, List[FamilyEntry]]


class SolveStats(BaseModel):
    nodes: int = 0
    node_kinds: Dict[str, int] = Field(default_factory=dict)
    k: int = 0
    t: int = 0
    ell: int = 0
    max_family_size: int = 0
    distinct_signatures: int = 0
    wall_time: float = 0.0


class SolveResult(BaseModel):
    solution: Solution
    stats: SolveStats
    signatures: Optional[List[dict]] = None

    def report(self, timing: bool = True) -> dict:
        out = self.solution.report()
        out["stats"] = self.stats.model_dump(exclude=None if timing else {"wall_time"})
        if self.signatures is not None:
            out["signatures"] = self.signatures
        return out


def _join_passes(g: Graph, union: VertexSet, t: int) -> bool:
    return subset_treewidth_below(g, union, t)


def best_candidate(spec: ProblemSpec, g: Graph, candidates: List[FamilyEntry]) -> Optional[FamilyEntry]:
    """Heaviest accepted candidate, ties to the lexicographically smallest set."""
    best = None
    for entry in candidates:
        if not accepts(spec, induced_subgraph(g, entry.vertices)):
            continue
        if best is None or entry.weight > best.weight or (entry.weight == best.weight and entry.vertices < best.vertices):
            best = entry
    return best


@dataclass
class _Context:
    spec: ProblemSpec
    g: Graph
    td: TreeDecomposition
    ell: int
    threads: int
    cache: SignatureCache = field(default_factory=dict)
    merge_log: Optional[List[MergedPair]] = None
    signatures: Set[bytes] = field(default_factory=set)
    max_family_size: int = 0
    debug: bool = DEBUG_CHECKS


class DPSolver:
    """Bottom-up table computation; one instance per solve call."""

    def __init__(self, g: Graph, nice: TreeDecomposition, spec: ProblemSpec, k: int,
                 threads: int = SOLVER_THREADS, merge_log: Optional[List[MergedPair]] = None,
                 debug: bool = DEBUG_CHECKS):
        if nice.tags is None:
            raise ContractError("solver needs a nice decomposition")
        self.k = k
        self.ctx = _Context(spec=spec, g=g, td=nice, ell=max(1, k * spec.t), threads=max(1, threads),
                            merge_log=merge_log, debug=debug)

    async def _map(self, jobs: Dict[VertexSet, Callable[[], tuple]]) -> Dict[VertexSet, tuple]:
        keys = sorted(jobs)
        if self.ctx.threads == 1 or len(keys) < 2:
            return {key: jobs[key]() for key in keys}
        results = await asyncio.gather(*[asyncio.to_thread(jobs[key]) for key in keys])
        return dict(zip(keys, results))

    def _collect(self, done: Dict[VertexSet, tuple]) -> Table:
        """Merge per-key results in key order so logs and stats do not depend on scheduling."""
        table: Table = {}
        for key in sorted(done):
            entries, merged = done[key]
            if self.ctx.merge_log is not None:
                self.ctx.merge_log.extend(merged)
            if entries:
                table[key] = entries
                self.ctx.signatures.update(e.key for e in entries if e.key is not None)
                self.ctx.max_family_size = max(self.ctx.max_family_size, len(entries))
        return table

    def _compress_job(self, b: VertexSet, family: List[FamilyEntry]) -> Callable[[], tuple]:
        ctx = self.ctx

        def job():
            merged: List[MergedPair] = [] if ctx.merge_log is not None else None
            out = compress(ctx.spec, ctx.g, b, family, ctx.ell, cache=ctx.cache, merge_log=merged)
            return out, merged or []
        return job

    def table_leaf(self, u: int) -> Table:
        td = self.ctx.td
        if td.tags[u].kind != NodeKind.LEAF or td.bags[u]:
            raise ContractError(f"node {u} is not an empty leaf")
        return {(): [FamilyEntry((), Fraction(0))]}

    def table_introduce(self, u: int, v: int, child: Table) -> Table:
        ctx = self.ctx
        g, spec = ctx.g, ctx.spec
        table: Table = dict(child)
        for b, family in child.items():
            if len(b) >= ctx.ell:
                continue
            nb = tuple(sorted(b + (v,)))
            if not subset_treewidth_below(g, nb, spec.t):
                continue
            if spec.key_filter is not None and not spec.key_filter(g, nb):
                continue
            grown = []
            for entry in family:
                vs = tuple(sorted(entry.vertices + (v,)))
                if subset_treewidth_below(g, vs, spec.t):
                    grown.append(FamilyEntry(vs, entry.weight + g.weights[v]))
            if grown:
                table[nb] = grown
        if ctx.debug:
            self._check_table(u, table)
            bag = set(ctx.td.bags[u])
            for b, family in table.items():
                if v in b:
                    for entry in family:
                        if not (g.adj[v] & set(entry.vertices)) <= bag:
                            raise ContractError(f"introduced vertex {v + 1} has a chosen neighbour outside bag {u}")
        return table

    async def table_forget(self, u: int, v: int, child: Table) -> Table:
        gathered: Dict[VertexSet, List[FamilyEntry]] = {}
        for b, family in child.items():
            key = tuple(x for x in b if x != v)
            gathered.setdefault(key, []).extend(family)
        done = await self._map({b: self._compress_job(b, fam) for b, fam in gathered.items()})
        table = self._collect(done)
        if self.ctx.debug:
            self._check_table(u, table)
        return table

    async def table_join(self, u: int, left: Table, right: Table) -> Table:
        ctx = self.ctx
        td = ctx.td
        kids = td.children(u)
        if len(kids) != 2 or not td.bags[kids[0]] == td.bags[kids[1]] == td.bags[u]:
            raise InputError(f"join node {u} does not have two children with its bag")
        jobs = {}
        for b in sorted(set(left) & set(right)):
            unions = []
            for f1 in left[b]:
                for f2 in right[b]:
                    vs = tuple(sorted(set(f1.vertices) | set(f2.vertices)))
                    if _join_passes(ctx.g, vs, ctx.spec.t):
                        unions.append(FamilyEntry(vs, ctx.g.weight_of(vs)))
            if unions:
                jobs[b] = self._compress_job(b, unions)
        table = self._collect(await self._map(jobs))
        if ctx.debug:
            self._check_table(u, table)
        return table

    def _check_table(self, u: int, table: Table) -> None:
        ctx = self.ctx
        bag = set(ctx.td.bags[u])
        for b, family in table.items():
            if len(b) > ctx.ell:
                raise ContractError(f"key of size {len(b)} at node {u} exceeds ell={ctx.ell}")
            for entry in family:
                if set(entry.vertices) & bag != set(b):
                    raise ContractError(f"entry at node {u} meets the bag outside its key")
                if not subset_treewidth_below(ctx.g, entry.vertices, ctx.spec.t):
                    raise ContractError(f"entry at node {u} has treewidth >= {ctx.spec.t}")

    async def run(self) -> Table:
        ctx = self.ctx
        td = ctx.td
        executor = None
        if ctx.threads > 1:
            executor = ThreadPoolExecutor(max_workers=ctx.threads)
            asyncio.get_running_loop().set_default_executor(executor)
        tables: Dict[int, Table] = {}
        try:
            for u in td.postorder():
                tag = td.tags[u]
                kids = td.children(u)
                if tag.kind == NodeKind.LEAF:
                    tables[u] = self.table_leaf(u)
                elif tag.kind == NodeKind.INTRODUCE:
                    tables[u] = self.table_introduce(u, tag.vertex, tables.pop(kids[0]))
                elif tag.kind == NodeKind.FORGET:
                    tables[u] = await self.table_forget(u, tag.vertex, tables.pop(kids[0]))
                else:
                    tables[u] = await self.table_join(u, tables.pop(kids[0]), tables.pop(kids[1]))
                logger.debug(f"node {u} ({tag.kind.value}): {len(tables[u])} keys, "
                             f"{sum(len(f) for f in tables[u].values())} entries")
        finally:
            if executor is not None:
                executor.shutdown(wait=True)
        return tables[td.root]


def extract_root(root: Table, spec: ProblemSpec, g: Graph) -> Solution:
    if any(b for b in root):
        raise ContractError("root table has a non-empty key")
    best = best_candidate(spec, g, root.get((), []))
    return make_solution(spec, g, best.vertices if best is not None else None)


def solve(g: Graph, td: TreeDecomposition, spec: ProblemSpec, k: Optional[int] = None,
          threads: int = SOLVER_THREADS, merge_log: Optional[List[MergedPair]] = None,
          dump_signatures: bool = False, debug: bool = DEBUG_CHECKS) -> SolveResult:
    """Maximum weight F with tw(g[F]) < t accepted by the problem, or an infeasible solution."""
    start = time.perf_counter()
    alpha = alpha_of_decomposition(g, td)
    if k is None:
        k = alpha
    elif alpha > k:
        raise InputError(f"decomposition has independence number {alpha} > k={k}")
    nice = make_nice(g, td)
    solver = DPSolver(g, nice, spec, k, threads=threads, merge_log=merge_log, debug=debug)
    root = asyncio.run(solver.run())
    solution = extract_root(root, spec, g)
    ctx = solver.ctx
    kinds = Counter(tag.kind.value for tag in nice.tags)
    stats = SolveStats(
        nodes=nice.node_count, node_kinds=dict(sorted(kinds.items())), k=k, t=spec.t, ell=ctx.ell,
        max_family_size=ctx.max_family_size, distinct_signatures=len(ctx.signatures),
        wall_time=round(time.perf_counter() - start, 6))
    signatures = None
    if dump_signatures:
        signatures = [dict(signature_to_json(compute_signature(spec, g, e.vertices, (), ctx.ell)),
                           vertices=[v + 1 for v in e.vertices], weight=format_fraction(e.weight))
                      for e in root.get((), [])]
    logger.info(f"{spec.label}: weight {solution.weight} over {stats.nodes} nodes, "
                f"max family {stats.max_family_size}, {stats.distinct_signatures} signatures, {stats.wall_time}s")
    return SolveResult(solution=solution, stats=stats, signatures=signatures)

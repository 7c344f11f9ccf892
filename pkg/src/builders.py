"""
Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
SPDX-License-Identifier: MIT-0
"""
"""
Decomposition builders: clique trees of chordal graphs, clique-based separator
recursion, exact tree-independence number for tiny graphs, and exact bounded-width
decompositions used for solution pieces
"""
import os
import logging
from bisect import bisect_left, bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import networkx as nx
import numpy as np
from dotenv import load_dotenv
from graph_core import (Graph, VertexSet, independence_number, induced_subgraph, optimal_elimination_order,
                        reach_through, series_parallel_order, TW_SUBSET_CAP)
from decomposition import TreeDecomposition
from utils import ContractError, InputError, ResourceLimitError, iter_bits, parse_fraction

load_dotenv()  # load env vars from .env

logging.basicConfig(
    level=os.environ.get("LOG_LEVEL", "INFO"),
    format='%(asctime)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s',
)
logger = logging.getLogger(__name__)

EXACT_ALPHA_CAP = int(os.environ.get("EXACT_ALPHA_CAP", 12))

Interval = Tuple[Fraction, Fraction]


@dataclass(frozen=True)
class CliqueSeparator:
    cliques: Tuple[VertexSet, ...]
    beta: Fraction

    @property
    def size(self) -> int:
        return len(self.cliques)

    @property
    def union(self) -> VertexSet:
        return tuple(sorted(set().union(*self.cliques))) if self.cliques else ()


def _components(g: Graph, removed: frozenset = frozenset()) -> List[List[int]]:
    """Components of g minus removed, each sorted, ordered by smallest vertex."""
    kept = g.nx_graph.subgraph(v for v in range(g.n) if v not in removed)
    return sorted(sorted(c) for c in nx.connected_components(kept))


def _largest(comps: List[List[int]]) -> int:
    return max((len(c) for c in comps), default=0)


def _check_beta(beta) -> Fraction:
    beta = Fraction(beta)
    if not Fraction(1, 2) <= beta < 1:
        raise InputError(f"balance beta must satisfy 1/2 <= beta < 1, got {beta}")
    return beta


def check_separator(g: Graph, sep: CliqueSeparator, beta) -> None:
    """Raise ContractError naming the first non-clique or the balance failure."""
    for clique in sep.cliques:
        for i, u in enumerate(clique):
            if not 0 <= u < g.n:
                raise ContractError(f"separator clique {list(clique)} holds vertex {u} outside the graph")
            for v in clique[i + 1:]:
                if v not in g.adj[u]:
                    raise ContractError(f"separator set {list(clique)} is not a clique: {u} and {v} are not adjacent")
    worst = _largest(_components(g, frozenset(sep.union)))
    if worst > Fraction(beta) * g.n:
        raise ContractError(f"separator {[list(c) for c in sep.cliques]} leaves a component of {worst} > {beta}*{g.n} vertices")


# ---------------------------------------------------------------------------
# chordal graphs
# ---------------------------------------------------------------------------

def _chordless_cycle(g: Graph) -> List[int]:
    for cycle in nx.chordless_cycles(g.nx_graph):
        if len(cycle) >= 4:
            return [int(v) for v in cycle]
    return []


def clique_tree_chordal(g: Graph) -> TreeDecomposition:
    """Clique tree: maximal cliques joined by a maximum-weight spanning tree of their intersections."""
    h = g.nx_graph
    if not nx.is_chordal(h):
        cycle = _chordless_cycle(g)
        raise InputError(f"graph is not chordal, chordless cycle {cycle}")
    if g.n == 0:
        return TreeDecomposition(bags=(), edges=(), claimed_alpha=0)
    cliques = sorted(tuple(sorted(c)) for c in nx.chordal_graph_cliques(h))
    if len(cliques) == 1:
        return TreeDecomposition(bags=(cliques[0],), edges=(), alpha_bounds=(1,), claimed_alpha=1)
    weighted = nx.Graph()
    weighted.add_nodes_from(range(len(cliques)))
    sets = [set(c) for c in cliques]
    for i in range(len(cliques)):
        for j in range(i + 1, len(cliques)):
            # weight-0 pairs keep the tree connected across components
            weighted.add_edge(i, j, weight=len(sets[i] & sets[j]))
    tree = nx.maximum_spanning_tree(weighted, weight="weight")
    edges = tuple(sorted((min(a, b), max(a, b)) for a, b in tree.edges()))
    return TreeDecomposition(bags=tuple(cliques), edges=edges, alpha_bounds=(1,) * len(cliques), claimed_alpha=1)


# ---------------------------------------------------------------------------
# separators
# ---------------------------------------------------------------------------

def _bfs_layers(g: Graph, source: int) -> List[List[int]]:
    return [sorted(layer) for layer in nx.bfs_layers(g.nx_graph, source)]


def _cover_by_cliques(g: Graph, vertices: Sequence[int]) -> Tuple[VertexSet, ...]:
    uncovered = set(vertices)
    pool = sorted(vertices)
    cliques = []
    for v in pool:
        if v not in uncovered:
            continue
        clique = [v]
        # uncovered candidates first, then already covered ones, both ascending
        for u in sorted(pool, key=lambda x: (x not in uncovered, x)):
            if u != v and all(u in g.adj[w] for w in clique):
                clique.append(u)
        clique.sort()
        uncovered.difference_update(clique)
        cliques.append(tuple(clique))
    return tuple(cliques)


def greedy_clique_separator(g: Graph, beta) -> CliqueSeparator:
    """Heuristic clique-based separator: BFS layer, local pruning, greedy clique cover."""
    beta = _check_beta(beta)
    limit = beta * g.n
    comps = _components(g)
    if _largest(comps) <= limit:
        return CliqueSeparator(cliques=(), beta=beta)
    component = max(comps, key=lambda c: (len(c), -c[0]))
    sub = induced_subgraph(g, component)
    first = _bfs_layers(sub, 0)
    layers = _bfs_layers(sub, first[-1][0])

    def worst_after(removed: set) -> int:
        return _largest(_components(g, frozenset(removed)))

    best: Optional[Tuple[int, int, int]] = None
    for i, layer in enumerate(layers):
        removed = {component[x] for x in layer}
        worst = worst_after(removed)
        key = (0 if worst <= limit else 1, len(layer) if worst <= limit else worst, worst, i)
        if best is None or key < best:
            best = key
    chosen = {component[x] for x in layers[best[3]]}
    while worst_after(chosen) > limit:
        remaining = _components(g, frozenset(chosen))
        big = max(remaining, key=lambda c: (len(c), -c[0]))
        big_set = set(big)
        chosen.add(max(big, key=lambda v: (len(g.adj[v] & big_set), -v)))
    # local search: drop vertices that are not needed for balance
    for v in sorted(chosen):
        if worst_after(chosen - {v}) <= limit:
            chosen.discard(v)
    sep = CliqueSeparator(cliques=_cover_by_cliques(g, sorted(chosen)), beta=beta)
    logger.debug(f"greedy separator on n={g.n}: {sep.size} cliques covering {len(chosen)} vertices")
    return sep


def interval_graph(intervals: Sequence[Interval]) -> Graph:
    """Intersection graph of closed intervals, built with a left-to-right sweep."""
    events = sorted(range(len(intervals)), key=lambda i: (intervals[i][0], i))
    active: List[int] = []
    edges = []
    for i in events:
        lo, hi = intervals[i]
        if lo > hi:
            raise InputError(f"interval {i} has lo {lo} > hi {hi}")
        active = [j for j in active if intervals[j][1] >= lo]
        edges.extend((j, i) for j in active)
        active.append(i)
    return Graph.from_edges(len(intervals), edges)


def random_intervals(n: int, seed: int = 0, span: int = 100, unit: bool = False) -> List[Interval]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        lo = Fraction(int(rng.integers(0, span * 4)), 4)
        length = Fraction(4 if unit else int(rng.integers(1, 4 * max(span // 10, 1) + 1)), 4)
        out.append((lo, lo + length))
    return out


def parse_intervals(text: str) -> List[Interval]:
    out = []
    for line_num, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith('c'):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InputError(f"malformed interval line '{line}', expected '<lo> <hi>'", line=line_num)
        lo, hi = parse_fraction(parts[0], line=line_num), parse_fraction(parts[1], line=line_num)
        if lo > hi:
            raise InputError(f"interval lo {lo} > hi {hi}", line=line_num)
        out.append((lo, hi))
    return out


def read_intervals(path: str) -> List[Interval]:
    with open(path, 'r') as f:
        return parse_intervals(f.read())


def write_intervals(intervals: Sequence[Interval], path: str) -> None:
    with open(path, 'w') as f:
        for lo, hi in intervals:
            f.write(f"{lo} {hi}\n")


def interval_clique_separator(intervals: Sequence[Interval], beta) -> CliqueSeparator:
    """One clique: every interval through the stabbing point x minimising (max side, clique size, x)."""
    beta = _check_beta(beta)
    n = len(intervals)
    if n == 0:
        return CliqueSeparator(cliques=(), beta=beta)
    los = sorted(lo for lo, _ in intervals)
    his = sorted(hi for _, hi in intervals)
    best = None
    for x in sorted(set(his)):
        left = bisect_left(his, x)
        right = n - bisect_right(los, x)
        key = (max(left, right), n - left - right, x)
        if best is None or key < best:
            best = key
    x = best[2]
    clique = tuple(i for i, (lo, hi) in enumerate(intervals) if lo <= x <= hi)
    return CliqueSeparator(cliques=(clique,), beta=beta)


class IntervalSeparatorFinder:
    """Separator oracle for subgraphs of an interval graph; maps through `Graph.origin`."""

    def __init__(self, intervals: Sequence[Interval]):
        self.intervals = list(intervals)

    def __call__(self, g: Graph, beta) -> CliqueSeparator:
        local = [self.intervals[o] for o in g.origin]
        sep = interval_clique_separator(local, beta)
        return sep


SeparatorFinder = Callable[[Graph, Fraction], CliqueSeparator]


@dataclass
class _Task:
    vertices: VertexSet
    interface: frozenset
    parent: int
    stacked: int


def build_from_separators(g: Graph, finder: SeparatorFinder, beta, workers: int = 1) -> TreeDecomposition:
    """Separator recursion. A node over vertex set W with inherited interface I gets the bag
    I ∪ U, U the union of the separator cliques of g[W]; each component C of g[W] - U
    recurses with interface I ∪ (U ∩ N(C)). Each bag records the number of cliques
    stacked on its root path as its α bound.
    """
    beta = _check_beta(beta)
    bags: List[VertexSet] = []
    bounds: List[int] = []
    edges: List[Tuple[int, int]] = []
    level = [_Task(tuple(range(g.n)), frozenset(), -1, 0)]
    depth = 0

    def separate(task: _Task) -> Tuple[Graph, CliqueSeparator]:
        sub = induced_subgraph(g, task.vertices)
        sep = finder(sub, beta)
        check_separator(sub, sep, beta)
        return sub, sep

    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while level:
            depth += 1
            results = list(executor.map(separate, level)) if executor else [separate(t) for t in level]
            following = []
            for task, (sub, sep) in zip(level, results):
                union = {task.vertices[x] for x in sep.union}
                node = len(bags)
                bags.append(tuple(sorted(task.interface | union)))
                stacked = task.stacked + sep.size
                bounds.append(stacked)
                if task.parent >= 0:
                    edges.append((task.parent, node))
                for comp in _components(sub, frozenset(sep.union)):
                    members = [task.vertices[x] for x in comp]
                    member_set = set(members)
                    touching = {u for u in union if g.adj[u] & member_set}
                    following.append(_Task(tuple(members), task.interface | touching, node, stacked))
            level = following
    finally:
        if executor:
            executor.shutdown()
    td = TreeDecomposition(bags=tuple(bags), edges=tuple(edges), root=0 if bags else None, alpha_bounds=tuple(bounds))
    logger.info(f"separator recursion: {len(bags)} bags, depth {depth}, max stacked cliques {max(bounds, default=0)}")
    return td


# ---------------------------------------------------------------------------
# elimination orderings
# ---------------------------------------------------------------------------

def decomposition_from_order(g: Graph, order: Sequence[int]) -> TreeDecomposition:
    """Bags {v} ∪ higher fill neighbours; each bag hangs under its earliest higher neighbour."""
    if g.n == 0:
        return TreeDecomposition(bags=((),), edges=(), root=0)
    position = {v: i for i, v in enumerate(order)}
    full = (1 << g.n) - 1
    bags = []
    parent = []
    done = 0
    for v in order:
        later = list(iter_bits(reach_through(g.masks, done, v, full)))
        bags.append(tuple(sorted(later + [v])))
        parent.append(min(later, key=position.__getitem__) if later else None)
        done |= 1 << v
    edges = []
    roots = []
    for i, p in enumerate(parent):
        if p is None:
            roots.append(i)
        else:
            edges.append((position[p], i))
    edges.extend((roots[i], roots[i + 1]) for i in range(len(roots) - 1))
    return TreeDecomposition(bags=tuple(bags), edges=tuple(edges), root=roots[-1])


def exact_tree_alpha(g: Graph) -> Tuple[int, TreeDecomposition]:
    """Exact tree-independence number by subset DP over elimination orderings."""
    if g.n > EXACT_ALPHA_CAP:
        raise ResourceLimitError(f"exact tree-independence number on {g.n} vertices exceeds EXACT_ALPHA_CAP={EXACT_ALPHA_CAP}")
    memo: Dict[int, int] = {}

    def bag_alpha(v: int, later: int) -> int:
        bag = later | (1 << v)
        if bag not in memo:
            memo[bag] = independence_number(g, list(iter_bits(bag)))
        return memo[bag]

    k, order = optimal_elimination_order(g, bag_alpha)
    return k, replace(decomposition_from_order(g, order), claimed_alpha=k)


def bounded_width_decomposition(g: Graph, t: int) -> TreeDecomposition:
    """Exact decomposition of width < t, ContractError when tw(g) >= t."""
    if g.n == 0:
        return TreeDecomposition(bags=((),), edges=(), root=0)
    if t == 1:
        if g.m:
            raise ContractError(f"graph with {g.m} edges has no decomposition of width < 1")
        return TreeDecomposition(bags=tuple((v,) for v in range(g.n)),
                                 edges=tuple((v, v + 1) for v in range(g.n - 1)), root=0)
    if t == 2:
        if not nx.is_forest(g.nx_graph):
            raise ContractError("graph has a cycle, no decomposition of width < 2")
        parent: Dict[int, Optional[int]] = {}
        roots = []
        for comp in _components(g):
            roots.append(comp[0])
            parent[comp[0]] = None
            parent.update(nx.bfs_predecessors(g.nx_graph, comp[0]))
        bags = tuple((v,) if parent[v] is None else tuple(sorted((v, parent[v]))) for v in range(g.n))
        edges = [(parent[v], v) for v in range(g.n) if parent[v] is not None]
        edges.extend((roots[i], roots[i + 1]) for i in range(len(roots) - 1))
        return TreeDecomposition(bags=bags, edges=tuple(edges), root=roots[0])
    if t == 3:
        order = series_parallel_order(g, range(g.n))
        if order is None:
            raise ContractError("graph has treewidth >= 3")
        return decomposition_from_order(g, order)
    if g.n > TW_SUBSET_CAP:
        raise ResourceLimitError(f"exact decomposition on {g.n} vertices exceeds TW_SUBSET_CAP={TW_SUBSET_CAP}")
    width, order = optimal_elimination_order(g, lambda v, later: bin(later).count("1"))
    if width >= t:
        raise ContractError(f"graph has treewidth {width} >= {t}")
    return decomposition_from_order(g, order)

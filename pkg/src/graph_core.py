"""
Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
SPDX-License-Identifier: MIT-0
"""
"""
Graph model with exact rational weights, induced subgraphs, independence number,
exact treewidth bound tests and the PACE .gr format
"""
import os
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple
import networkx as nx
import numpy as np
from dotenv import load_dotenv
from utils import InputError, ResourceLimitError, format_fraction, iter_bits, mask_of, parse_fraction

load_dotenv()  # load env vars from .env

logging.basicConfig(
    level=os.environ.get("LOG_LEVEL", "INFO"),
    format='%(asctime)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s',
)
logger = logging.getLogger(__name__)

ALPHA_CAP = int(os.environ.get("ALPHA_CAP", 40))
TW_SUBSET_CAP = int(os.environ.get("TW_SUBSET_CAP", 25))

VertexSet = Tuple[int, ...]


@dataclass(frozen=True)
class Graph:
    """Immutable simple undirected graph on vertices 0..n-1.

    `origin[i]` is the id vertex i had in the graph it was cut from, so induced
    subgraphs can always be mapped back.
    """
    n: int
    adj: Tuple[frozenset, ...]
    weights: Tuple[Fraction, ...]
    origin: Tuple[int, ...]

    def __post_init__(self):
        if len(self.adj) != self.n or len(self.weights) != self.n or len(self.origin) != self.n:
            raise InputError(f"graph of order {self.n} has mismatched adjacency/weight/origin lengths")
        for v, nbrs in enumerate(self.adj):
            if v in nbrs:
                raise InputError(f"self-loop at vertex {v}")
            for u in nbrs:
                if not 0 <= u < self.n:
                    raise InputError(f"edge ({v}, {u}) leaves the vertex range 0..{self.n - 1}")
                if v not in self.adj[u]:
                    raise InputError(f"adjacency is not symmetric on ({v}, {u})")
        for v, w in enumerate(self.weights):
            if w < 0:
                raise InputError(f"negative weight {w} at vertex {v}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]],
                   weights: Optional[Sequence] = None, origin: Optional[Sequence[int]] = None) -> "Graph":
        if n < 0:
            raise InputError(f"negative vertex count {n}")
        sets = [set() for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge ({u}, {v}) leaves the vertex range 0..{n - 1}")
            if u == v:
                raise InputError(f"self-loop at vertex {u}")
            sets[u].add(v)
            sets[v].add(u)
        w = tuple(Fraction(x) for x in weights) if weights is not None else (Fraction(1),) * n
        org = tuple(origin) if origin is not None else tuple(range(n))
        return cls(n, tuple(frozenset(s) for s in sets), w, org)

    def with_weights(self, weights: Sequence) -> "Graph":
        return Graph(self.n, self.adj, tuple(Fraction(x) for x in weights), self.origin)

    @property
    def vertices(self) -> range:
        return range(self.n)

    @cached_property
    def edges(self) -> List[Tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in sorted(self.adj[u]) if u < v]

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def masks(self) -> Tuple[int, ...]:
        return tuple(mask_of(nbrs) for nbrs in self.adj)

    @cached_property
    def nx_graph(self) -> nx.Graph:
        h = nx.Graph()
        h.add_nodes_from(range(self.n))
        h.add_edges_from(self.edges)
        return h

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj[u]

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def weight_of(self, s: Iterable[int]) -> Fraction:
        return sum((self.weights[v] for v in s), Fraction(0))


def vertex_set(s: Iterable[int], n: int) -> VertexSet:
    """Canonical ascending tuple of distinct vertex ids, range-checked."""
    out = tuple(sorted(set(s)))
    if out and (out[0] < 0 or out[-1] >= n):
        bad = out[0] if out[0] < 0 else out[-1]
        raise InputError(f"vertex {bad} outside 0..{n - 1}")
    return out


def induced_subgraph(g: Graph, s: Iterable[int]) -> Graph:
    verts = vertex_set(s, g.n)
    index = {v: i for i, v in enumerate(verts)}
    adj = tuple(frozenset(index[u] for u in g.adj[v] if u in index) for v in verts)
    return Graph(len(verts), adj, tuple(g.weights[v] for v in verts), tuple(g.origin[v] for v in verts))


# ---------------------------------------------------------------------------
# independence number
# ---------------------------------------------------------------------------

def perfect_elimination_order(g: Graph, verts: Sequence[int]) -> Optional[List[int]]:
    """Perfect elimination ordering of g[verts] via maximum cardinality search, None if not chordal."""
    vs = set(verts)
    if not vs:
        return []
    weight = {v: 0 for v in vs}
    numbered: List[int] = []
    unnumbered = set(vs)
    while unnumbered:
        z = max(unnumbered, key=lambda v: (weight[v], -v))
        unnumbered.remove(z)
        numbered.append(z)
        for u in g.adj[z]:
            if u in unnumbered:
                weight[u] += 1
    order = numbered[::-1]
    # verify: for each v, its later neighbours minus the earliest one must be adjacent to that one
    position = {v: i for i, v in enumerate(order)}
    for v in order:
        later = [u for u in g.adj[v] if u in vs and position[u] > position[v]]
        if not later:
            continue
        parent = min(later, key=position.__getitem__)
        for u in later:
            if u != parent and u not in g.adj[parent]:
                return None
    return order


def _chordal_alpha(g: Graph, order: List[int]) -> int:
    # greedy over a perfect elimination ordering is exact on chordal graphs
    removed = set()
    count = 0
    for v in order:
        if v in removed:
            continue
        count += 1
        removed.add(v)
        removed.update(g.adj[v])
    return count


def _alpha_mask(mask: int, masks: Sequence[int], memo: Dict[int, int]) -> int:
    if mask == 0:
        return 0
    hit = memo.get(mask)
    if hit is not None:
        return hit
    best_v, best_deg = -1, -1
    low_v = -1
    for v in iter_bits(mask):
        d = bin(masks[v] & mask).count("1")
        if d <= 1:
            low_v = v
            break
        if d > best_deg:
            best_v, best_deg = v, d
    if low_v >= 0:
        # a vertex of degree <= 1 is always in some maximum independent set
        result = 1 + _alpha_mask(mask & ~(masks[low_v] | (1 << low_v)), masks, memo)
    else:
        v = best_v
        take = 1 + _alpha_mask(mask & ~(masks[v] | (1 << v)), masks, memo)
        rest = mask & ~(1 << v)
        result = take
        if bin(rest).count("1") > take:
            result = max(take, _alpha_mask(rest, masks, memo))
    memo[mask] = result
    return result


def independence_number(g: Graph, s: Optional[Iterable[int]] = None) -> int:
    """α(g[s]); exact. Chordal sets take a polynomial path, the rest branch and bound under ALPHA_CAP."""
    verts = vertex_set(range(g.n) if s is None else s, g.n)
    if not verts:
        return 0
    order = perfect_elimination_order(g, verts)
    if order is not None:
        return _chordal_alpha(g, order)
    if len(verts) > ALPHA_CAP:
        raise ResourceLimitError(
            f"independence number of a {len(verts)}-vertex non-chordal set exceeds ALPHA_CAP={ALPHA_CAP}")
    return _alpha_mask(mask_of(verts), g.masks, {})


# ---------------------------------------------------------------------------
# treewidth bounds
# ---------------------------------------------------------------------------

def _has_edge_inside(g: Graph, vs: frozenset) -> bool:
    return any(g.adj[v] & vs for v in vs)


def _is_forest(g: Graph, vs: frozenset) -> bool:
    parent = {v: v for v in vs}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for v in vs:
        for u in g.adj[v]:
            if u in vs and u > v:
                ru, rv = find(u), find(v)
                if ru == rv:
                    return False
                parent[ru] = rv
    return True


def series_parallel_order(g: Graph, vs: Iterable[int]) -> Optional[List[int]]:
    """Elimination order of g[vs] in which every vertex has at most two higher fill neighbours.

    Series-parallel reduction: delete degree <= 1, suppress degree 2 merging parallels.
    Returns None exactly when tw(g[vs]) >= 3.
    """
    vs = frozenset(vs)
    nbrs = {v: set(g.adj[v] & vs) for v in vs}
    order = []
    stack = sorted((v for v in vs if len(nbrs[v]) <= 2), reverse=True)
    while stack:
        v = stack.pop()
        if v not in nbrs or len(nbrs[v]) > 2:
            continue
        ns = nbrs.pop(v)
        order.append(v)
        for u in ns:
            nbrs[u].discard(v)
        if len(ns) == 2:
            a, b = ns
            nbrs[a].add(b)
            nbrs[b].add(a)
        for u in sorted(ns, reverse=True):
            if len(nbrs[u]) <= 2:
                stack.append(u)
    return None if nbrs else order


def reach_through(masks: Sequence[int], eliminated: int, v: int, universe: int) -> int:
    """Vertices of universe outside eliminated ∪ {v} reachable from v via eliminated vertices."""
    seen = 1 << v
    frontier = 1 << v
    found = 0
    while frontier:
        nxt = 0
        for x in iter_bits(frontier):
            nxt |= masks[x]
        nxt &= universe & ~seen
        seen |= nxt
        found |= nxt & ~eliminated
        frontier = nxt & eliminated
    return found


def _elimination_width_at_most(g: Graph, verts: VertexSet, limit: int) -> bool:
    universe = mask_of(verts)
    masks = g.masks
    layer = {0}
    for _ in range(len(verts)):
        nxt = set()
        for done in layer:
            for v in iter_bits(universe & ~done):
                if bin(reach_through(masks, done, v, universe)).count("1") <= limit:
                    nxt.add(done | (1 << v))
        if not nxt:
            return False
        layer = nxt
    return True


def subset_treewidth_below(g: Graph, s: Iterable[int], t: int) -> bool:
    """tw(g[s]) < t without building the induced subgraph."""
    if t < 1:
        raise InputError(f"treewidth bound t must be >= 1, got {t}")
    vs = frozenset(s)
    if len(vs) <= t:
        return True
    if t == 1:
        return not _has_edge_inside(g, vs)
    if t == 2:
        return _is_forest(g, vs)
    if t == 3:
        return series_parallel_order(g, vs) is not None
    if len(vs) > TW_SUBSET_CAP:
        raise ResourceLimitError(
            f"exact treewidth test on {len(vs)} vertices exceeds TW_SUBSET_CAP={TW_SUBSET_CAP}")
    return _elimination_width_at_most(g, tuple(sorted(vs)), t - 1)


def treewidth_less_than(g: Graph, t: int) -> bool:
    return subset_treewidth_below(g, range(g.n), t)


def optimal_elimination_order(g: Graph, bag_cost: Callable[[int, int], int]) -> Tuple[int, List[int]]:
    """Minimise max bag_cost(v, later_mask) over elimination orderings by subset DP.

    bag_cost receives the eliminated vertex and the mask of its higher neighbours in the
    fill graph; the bag is that mask plus v.
    """
    n = g.n
    if n == 0:
        return 0, []
    full = (1 << n) - 1
    masks = g.masks
    best = [0] + [None] * full
    choice = [-1] * (full + 1)
    for done in range(1, full + 1):
        value, pick = None, -1
        for v in iter_bits(done):
            prev = done & ~(1 << v)
            cost = bag_cost(v, reach_through(masks, prev, v, full))
            cand = max(best[prev], cost)
            if value is None or cand < value:
                value, pick = cand, v
        best[done] = value
        choice[done] = pick
    order = []
    done = full
    while done:
        v = choice[done]
        order.append(v)
        done &= ~(1 << v)
    order.reverse()
    return best[full], order


# ---------------------------------------------------------------------------
# PACE .gr files and weights sidecar
# ---------------------------------------------------------------------------

def parse_gr(text: str) -> Graph:
    n, declared_m = None, None
    edges = []
    for line_num, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith('c'):
            continue
        parts = line.split()
        if parts[0] == 'p':
            if n is not None:
                raise InputError("duplicate 'p' header", line=line_num)
            if len(parts) != 4 or parts[1] != 'tw':
                raise InputError(f"malformed header '{line}', expected 'p tw <n> <m>'", line=line_num)
            try:
                n, declared_m = int(parts[2]), int(parts[3])
            except ValueError:
                raise InputError(f"non-integer header values in '{line}'", line=line_num)
            continue
        if n is None:
            raise InputError("edge line before 'p tw' header", line=line_num)
        if len(parts) != 2:
            raise InputError(f"malformed edge line '{line}'", line=line_num)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise InputError(f"non-integer vertex in '{line}'", line=line_num)
        if not (1 <= u <= n and 1 <= v <= n):
            raise InputError(f"vertex out of range 1..{n} in '{line}'", line=line_num)
        if u == v:
            raise InputError(f"self-loop at vertex {u}", line=line_num)
        edges.append((u - 1, v - 1))
    if n is None:
        raise InputError("missing 'p tw <n> <m>' header")
    g = Graph.from_edges(n, edges)
    if g.m != declared_m:
        logger.warning(f"header declares {declared_m} edges, found {g.m} distinct edges")
    return g


def read_gr(path: str) -> Graph:
    with open(path, 'r') as f:
        return parse_gr(f.read())


def format_gr(g: Graph, comments: Sequence[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    lines.append(f"p tw {g.n} {g.m}")
    lines.extend(f"{u + 1} {v + 1}" for u, v in g.edges)
    return "\n".join(lines) + "\n"


def write_gr(g: Graph, path: str, comments: Sequence[str] = ()) -> None:
    with open(path, 'w') as f:
        f.write(format_gr(g, comments))


def parse_weights(text: str, n: int) -> List[Fraction]:
    weights = [Fraction(1)] * n
    for line_num, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith('c'):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InputError(f"malformed weight line '{line}', expected '<vertex> <num>/<den>'", line=line_num)
        try:
            v = int(parts[0])
        except ValueError:
            raise InputError(f"non-integer vertex '{parts[0]}'", line=line_num)
        if not 1 <= v <= n:
            raise InputError(f"vertex {v} out of range 1..{n}", line=line_num)
        w = parse_fraction(parts[1], line=line_num)
        if w < 0:
            raise InputError(f"negative weight {parts[1]}", line=line_num)
        weights[v - 1] = w
    return weights


def read_weights(path: str, n: int) -> List[Fraction]:
    with open(path, 'r') as f:
        return parse_weights(f.read(), n)


def write_weights(g: Graph, path: str) -> None:
    with open(path, 'w') as f:
        for v, w in enumerate(g.weights):
            if w != 1:
                f.write(f"{v + 1} {format_fraction(w)}\n")


def load_graph(gr_path: str, weights_path: str = '') -> Graph:
    g = read_gr(gr_path)
    if weights_path:
        g = g.with_weights(read_weights(weights_path, g.n))
    logger.info(f"loaded graph {gr_path}: n={g.n} m={g.m}")
    return g


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def gnp_graph(n: int, p: float, seed: int = 0) -> Graph:
    rng = np.random.default_rng(seed)
    coins = rng.random((n, n))
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if coins[u, v] < p]
    return Graph.from_edges(n, edges)


def random_chordal_graph(n: int, seed: int = 0, max_clique: int = 4) -> Graph:
    """Grow a chordal graph: each new vertex attaches to a sub-clique of a random known clique."""
    rng = np.random.default_rng(seed)
    cliques: List[List[int]] = []
    edges = []
    for v in range(n):
        if not cliques:
            cliques.append([v])
            continue
        base = cliques[int(rng.integers(len(cliques)))]
        size = int(rng.integers(0, min(len(base), max_clique - 1) + 1))
        attach = sorted(int(x) for x in rng.choice(base, size=size, replace=False)) if size else []
        edges.extend((u, v) for u in attach)
        cliques.append(attach + [v])
    return Graph.from_edges(n, edges)


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise InputError(f"a cycle needs at least 3 vertices, got {n}")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def grid_graph(rows: int, cols: int) -> Graph:
    def vid(r, c):
        return r * cols + c

    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((vid(r, c), vid(r, c + 1)))
            if r + 1 < rows:
                edges.append((vid(r, c), vid(r + 1, c)))
    return Graph.from_edges(rows * cols, edges)


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def petersen_graph() -> Graph:
    h = nx.petersen_graph()
    return Graph.from_edges(10, h.edges())


def random_weights(n: int, seed: int = 0, high: int = 5, denominators: Sequence[int] = (1, 2)) -> List[Fraction]:
    rng = np.random.default_rng(seed)
    return [Fraction(int(rng.integers(1, high + 1)), int(rng.choice(denominators))) for _ in range(n)]

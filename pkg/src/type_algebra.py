"""
Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
SPDX-License-Identifier: MIT-0
"""
"""
Boundaried graphs, gluing and forgetting, and the per-problem fingerprint plugins
that summarise a piece well enough to decide the target property in any context
"""
import re
import logging
import os
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Set, Tuple
import networkx as nx
from dotenv import load_dotenv
from pydantic import BaseModel, Field
from graph_core import Graph, VertexSet, induced_subgraph, subset_treewidth_below
from utils import ContractError, InputError, format_fraction

load_dotenv()  # load env vars from .env

logging.basicConfig(
    level=os.environ.get("LOG_LEVEL", "INFO"),
    format='%(asctime)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s',
)
logger = logging.getLogger(__name__)

# disjoint boundary-to-boundary paths as (i, j, parity) triples, plus the mask of boundary positions they occupy
Link = Tuple[Tuple[Tuple[int, int, int], ...], int]


def _move_mask(mask: int, new_position: Sequence[int]) -> int:
    return sum(1 << new_position[i] for i in range(len(new_position)) if mask >> i & 1)


@dataclass(frozen=True)
class Fingerprint:
    """Finite summary of a boundaried piece. Positions index the ordered boundary."""
    tag: str
    size: int
    blocks: Tuple[Tuple[int, ...], ...] = ()
    edges: Tuple[Tuple[int, int], ...] = ()
    degrees: Tuple[int, ...] = ()
    links: Tuple[Link, ...] = ()
    residue: Optional[int] = None
    dead: bool = False

    def permute(self, new_position: Sequence[int]) -> "Fingerprint":
        """Move old boundary position i to new_position[i]."""
        if self.dead:
            return self
        blocks = tuple(sorted(tuple(sorted(new_position[i] for i in b)) for b in self.blocks))
        edges = tuple(sorted(tuple(sorted((new_position[a], new_position[b]))) for a, b in self.edges))
        degrees = self.degrees
        if degrees:
            moved = [0] * len(degrees)
            for i, d in enumerate(degrees):
                moved[new_position[i]] = d
            degrees = tuple(moved)
        links = tuple(sorted(
            (tuple(sorted((*sorted((new_position[i], new_position[j])), parity) for i, j, parity in paths)),
             _move_mask(used, new_position))
            for paths, used in self.links))
        return replace(self, blocks=blocks, edges=edges, degrees=degrees, links=links)

    def key(self) -> tuple:
        return (self.tag, self.size, self.blocks, self.edges, self.degrees, self.links, self.residue, self.dead)

    def to_json(self) -> dict:
        out = {"tag": self.tag, "size": self.size}
        if self.dead:
            out["dead"] = True
            return out
        if self.blocks:
            out["blocks"] = [list(b) for b in self.blocks]
        if self.edges:
            out["edges"] = [list(e) for e in self.edges]
        if self.degrees:
            out["degrees"] = list(self.degrees)
        if self.links:
            out["links"] = [{"paths": [list(p) for p in paths], "used": used} for paths, used in self.links]
        if self.residue is not None:
            out["residue"] = self.residue
        return out


@dataclass(frozen=True)
class BoundariedGraph:
    graph: Graph
    boundary: VertexSet  # ordered, order is part of identity

    def __post_init__(self):
        if len(set(self.boundary)) != len(self.boundary):
            raise InputError(f"boundary {list(self.boundary)} repeats a vertex")
        for v in self.boundary:
            if not 0 <= v < self.graph.n:
                raise InputError(f"boundary vertex {v} outside 0..{self.graph.n - 1}")


def glue(g1: BoundariedGraph, g2: BoundariedGraph, matching: Sequence[Tuple[int, int]]) -> BoundariedGraph:
    """Disjoint union fusing g1.boundary[i] with g2.boundary[j] for each (i, j) in matching.

    g1 keeps its vertex ids; unmatched vertices of g2 follow in ascending order. The
    result boundary is g1's boundary followed by g2's unmatched boundary positions.
    """
    used1, used2 = set(), set()
    fuse: Dict[int, int] = {}
    for i, j in matching:
        if not 0 <= i < len(g1.boundary) or not 0 <= j < len(g2.boundary):
            raise InputError(f"matching pair ({i}, {j}) references a missing boundary position")
        if i in used1 or j in used2:
            raise InputError(f"matching pairs boundary position {i if i in used1 else j} twice")
        used1.add(i)
        used2.add(j)
        fuse[g2.boundary[j]] = g1.boundary[i]
    mapping: Dict[int, int] = {}
    next_id = g1.graph.n
    weights = list(g1.graph.weights)
    for x in range(g2.graph.n):
        if x in fuse:
            mapping[x] = fuse[x]
        else:
            mapping[x] = next_id
            next_id += 1
            weights.append(g2.graph.weights[x])
    edges = set(g1.graph.edges)
    for a, b in g2.graph.edges:
        u, v = mapping[a], mapping[b]
        edges.add((min(u, v), max(u, v)))
    graph = Graph.from_edges(next_id, sorted(edges), weights=weights)
    boundary = tuple(g1.boundary) + tuple(mapping[g2.boundary[j]] for j in range(len(g2.boundary)) if j not in used2)
    return BoundariedGraph(graph, boundary)


def forget(g: BoundariedGraph, position: int) -> BoundariedGraph:
    if not 0 <= position < len(g.boundary):
        raise InputError(f"cannot forget position {position} of a {len(g.boundary)}-vertex boundary")
    return BoundariedGraph(g.graph, g.boundary[:position] + g.boundary[position + 1:])


def forget_all(g: BoundariedGraph) -> BoundariedGraph:
    return BoundariedGraph(g.graph, ())


# ---------------------------------------------------------------------------
# plugin helpers
# ---------------------------------------------------------------------------

def _boundary_blocks(graph: Graph, boundary: VertexSet) -> Tuple[Tuple[int, ...], ...]:
    groups: Dict[int, List[int]] = {}
    for pos, v in enumerate(boundary):
        groups.setdefault(min(nx.node_connected_component(graph.nx_graph, v)), []).append(pos)
    return tuple(sorted(tuple(g) for g in groups.values()))


def _boundary_edges(graph: Graph, boundary: VertexSet) -> Tuple[Tuple[int, int], ...]:
    return tuple((i, j) for i, u in enumerate(boundary) for j in range(i + 1, len(boundary))
                 if boundary[j] in graph.adj[u])


def _interior_degrees(graph: Graph, boundary: VertexSet) -> Tuple[int, ...]:
    inside = set(boundary)
    return tuple(sum(1 for w in graph.adj[v] if w not in inside) for v in boundary)


def _is_acyclic(graph: Graph) -> bool:
    return subset_treewidth_below(graph, range(graph.n), 2)


def _mwis_fingerprint(graph: Graph, boundary: VertexSet) -> Fingerprint:
    return Fingerprint(tag="mwis", size=len(boundary))


def _forest_fingerprint(graph: Graph, boundary: VertexSet) -> Fingerprint:
    if not _is_acyclic(graph):
        return Fingerprint(tag="forest", size=len(boundary), dead=True)
    return Fingerprint(tag="forest", size=len(boundary), blocks=_boundary_blocks(graph, boundary),
                       edges=_boundary_edges(graph, boundary))


def _linear_forest_fingerprint(graph: Graph, boundary: VertexSet) -> Fingerprint:
    if not _is_acyclic(graph) or any(len(a) > 2 for a in graph.adj):
        return Fingerprint(tag="linear-forest", size=len(boundary), dead=True)
    return Fingerprint(tag="linear-forest", size=len(boundary), blocks=_boundary_blocks(graph, boundary),
                       edges=_boundary_edges(graph, boundary), degrees=_interior_degrees(graph, boundary))


def _matching_fingerprint(graph: Graph, boundary: VertexSet) -> Fingerprint:
    inside = set(boundary)
    # interior vertices never gain edges, boundary vertices never lose them
    if any(len(graph.adj[v]) != 1 for v in range(graph.n) if v not in inside) \
            or any(len(graph.adj[v]) > 1 for v in boundary):
        return Fingerprint(tag="matching", size=len(boundary), dead=True)
    return Fingerprint(tag="matching", size=len(boundary), edges=_boundary_edges(graph, boundary),
                       degrees=_interior_degrees(graph, boundary))


def _is_odd_cactus(graph: Graph) -> bool:
    """Every block is a bridge or an odd cycle, i.e. no even cycle at all."""
    for block in nx.biconnected_component_edges(graph.nx_graph):
        if len(block) == 1:
            continue
        nodes = {v for e in block for v in e}
        if len(block) != len(nodes) or len(nodes) % 2 == 0:
            return False
    return True


def _cactus_core(graph: Graph, boundary: VertexSet) -> nx.Graph:
    """Strip everything no boundary-to-boundary path can visit: pendant trees and cycles hanging off one vertex."""
    core = graph.nx_graph.copy()
    keep = set(boundary)
    changed = True
    while changed:
        changed = False
        for comp in list(nx.connected_components(core)):
            if not comp & keep:
                core.remove_nodes_from(comp)
        leaves = [v for v in core if v not in keep and core.degree(v) <= 1]
        if leaves:
            core.remove_nodes_from(leaves)
            changed = True
            continue
        anchors = keep | set(nx.articulation_points(core))
        for block in nx.biconnected_components(core):
            if len(block) > 2 and len(block & anchors) <= 1:
                core.remove_nodes_from(block - anchors)
                changed = True
                break
    return core


def _boundary_links(graph: Graph, boundary: VertexSet) -> Tuple[Link, ...]:
    core = _cactus_core(graph, boundary)
    position = {v: i for i, v in enumerate(boundary)}
    found: Dict[Tuple[int, int, int, int], List[FrozenSet[int]]] = {}
    for i, u in enumerate(boundary):
        for j in range(i + 1, len(boundary)):
            w = boundary[j]
            if u not in core or w not in core:
                continue
            for path in nx.all_simple_paths(core, u, w):
                used = sum(1 << position[x] for x in path if x in position)
                inner = frozenset(x for x in path if x not in position)
                found.setdefault((i, j, (len(path) - 1) % 2, used), []).append(inner)
    paths = []
    for key in sorted(found):
        inners = sorted(set(found[key]), key=lambda s: (len(s), sorted(s)))
        # a path whose interior contains another's is never the only disjoint choice
        minimal: List[FrozenSet[int]] = []
        for s in inners:
            if not any(m <= s for m in minimal):
                minimal.append(s)
        paths.extend((key, s) for s in minimal)

    links: Set[Link] = set()

    def extend(start: int, used: int, inner: FrozenSet[int], chosen: Tuple[Tuple[int, int, int], ...]) -> None:
        for idx in range(start, len(paths)):
            (i, j, parity, mask), s = paths[idx]
            if mask & used or s & inner:
                continue
            grown = tuple(sorted(chosen + ((i, j, parity),)))
            links.add((grown, used | mask))
            extend(idx + 1, used | mask, inner | s, grown)

    extend(0, 0, frozenset(), ())
    return tuple(sorted(links))


def _odd_cactus_fingerprint(graph: Graph, boundary: VertexSet) -> Fingerprint:
    if not _is_odd_cactus(graph):
        return Fingerprint(tag="odd-cactus", size=len(boundary), dead=True)
    return Fingerprint(tag="odd-cactus", size=len(boundary), edges=_boundary_edges(graph, boundary),
                       links=_boundary_links(graph, boundary))


def _accept_all(graph: Graph) -> bool:
    return True


def _accept_linear_forest(graph: Graph) -> bool:
    return all(len(a) <= 2 for a in graph.adj) and _is_acyclic(graph)


def _accept_matching(graph: Graph) -> bool:
    # ∅ is accepted vacuously
    return all(len(a) == 1 for a in graph.adj)


def _independent_key(graph: Graph, b: VertexSet) -> bool:
    members = set(b)
    return not any(graph.adj[v] & members for v in b)


# ---------------------------------------------------------------------------
# problem specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProblemSpec:
    name: str
    t: int
    fingerprint_fn: Callable[[Graph, VertexSet], Fingerprint]
    accepts_fn: Callable[[Graph], bool]
    modulus: Optional[int] = None
    residue: int = 0
    # hereditary filter on DP keys B, off unless requested
    key_filter: Optional[Callable[[Graph, VertexSet], bool]] = None
    report_complement: bool = False
    description: str = ""

    @property
    def label(self) -> str:
        return self.name if self.modulus is None else f"{self.name}@mod{self.modulus}={self.residue}"


def fingerprint(spec: ProblemSpec, g: BoundariedGraph) -> Fingerprint:
    if len(g.boundary) > 2 * spec.t:
        raise ContractError(f"{spec.label}: boundary of {len(g.boundary)} exceeds 2t={2 * spec.t}")
    if not subset_treewidth_below(g.graph, range(g.graph.n), spec.t):
        raise ContractError(f"{spec.label}: fingerprint requested for a piece of treewidth >= {spec.t}")
    fp = spec.fingerprint_fn(g.graph, tuple(g.boundary))
    if spec.modulus is not None and not fp.dead:
        fp = replace(fp, residue=g.graph.n % spec.modulus)
    return fp


def accepts(spec: ProblemSpec, g: Graph) -> bool:
    if not spec.accepts_fn(g):
        return False
    if spec.modulus is not None:
        return g.n % spec.modulus == spec.residue
    return True


class Solution(BaseModel):
    """Vertex ids are 0-based here; `report()` renders the 1-based file view."""
    problem: str
    feasible: bool
    weight: Optional[str] = None
    vertices: List[int] = Field(default_factory=list)
    complement: Optional[List[int]] = None
    complement_weight: Optional[str] = None
    certificate: Dict[str, bool] = Field(default_factory=dict)

    @property
    def weight_value(self) -> Optional[Fraction]:
        return Fraction(self.weight) if self.weight is not None else None

    def report(self) -> dict:
        out = {"problem": self.problem, "status": "solved" if self.feasible else "infeasible",
               "weight": self.weight, "vertices": [v + 1 for v in self.vertices]}
        if self.complement is not None:
            out["complement"] = [v + 1 for v in self.complement]
            out["complement_weight"] = self.complement_weight
        out["certificate"] = self.certificate
        return out


def make_solution(spec: ProblemSpec, g: Graph, vertices: Optional[VertexSet]) -> Solution:
    """Solution record with its independent certificate, infeasible when vertices is None."""
    if vertices is None:
        return Solution(problem=spec.label, feasible=False)
    sub = induced_subgraph(g, vertices)
    sol = Solution(
        problem=spec.label, feasible=True, weight=format_fraction(g.weight_of(vertices)), vertices=list(vertices),
        certificate={"treewidth_below_t": subset_treewidth_below(g, vertices, spec.t), "accepts": accepts(spec, sub)})
    if spec.report_complement:
        rest = sorted(set(g.vertices) - set(vertices))
        sol.complement = rest
        sol.complement_weight = format_fraction(g.weight_of(rest))
    return sol


PROBLEMS: Dict[str, ProblemSpec] = {
    "mwis": ProblemSpec(
        name="mwis", t=1, fingerprint_fn=_mwis_fingerprint, accepts_fn=_accept_all,
        description="maximum weight independent set"),
    "induced-forest": ProblemSpec(
        name="induced-forest", t=2, fingerprint_fn=_forest_fingerprint, accepts_fn=_is_acyclic,
        description="maximum weight induced forest"),
    "feedback-vertex-set": ProblemSpec(
        name="feedback-vertex-set", t=2, fingerprint_fn=_forest_fingerprint, accepts_fn=_is_acyclic,
        report_complement=True, description="minimum weight feedback vertex set, the complement of a maximum induced forest"),
    "induced-linear-forest": ProblemSpec(
        name="induced-linear-forest", t=2, fingerprint_fn=_linear_forest_fingerprint, accepts_fn=_accept_linear_forest,
        description="maximum weight induced disjoint union of paths"),
    "induced-matching": ProblemSpec(
        name="induced-matching", t=2, fingerprint_fn=_matching_fingerprint, accepts_fn=_accept_matching,
        description="maximum weight induced matching, every chosen vertex has exactly one chosen neighbour"),
    "induced-odd-cactus": ProblemSpec(
        name="induced-odd-cactus", t=3, fingerprint_fn=_odd_cactus_fingerprint, accepts_fn=_is_odd_cactus,
        description="maximum weight induced subgraph whose blocks are edges or odd cycles"),
    "even-cycle-transversal": ProblemSpec(
        name="even-cycle-transversal", t=3, fingerprint_fn=_odd_cactus_fingerprint, accepts_fn=_is_odd_cactus,
        report_complement=True, description="minimum weight even cycle transversal, the complement of a maximum induced odd cactus"),
}

# names that only restate another problem through its complement
COMPLEMENT_ALIASES = ("feedback-vertex-set", "even-cycle-transversal")

KEY_FILTERS: Dict[str, Callable[[Graph, VertexSet], bool]] = {
    "mwis": _independent_key,
}

_PROBLEM_RE = re.compile(r"^(?P<name>[a-z][a-z-]*)(?:@mod(?P<p>\d+)=(?P<r>\d+))?$")


def parse_problem(text: str, key_filter: bool = False) -> ProblemSpec:
    """`name` or `name@mod<p>=<r>`."""
    m = _PROBLEM_RE.match(text.strip())
    if not m:
        raise InputError(f"cannot parse problem '{text}', expected <name> or <name>@mod<p>=<r>")
    name = m.group("name")
    if name not in PROBLEMS:
        raise InputError(f"unknown problem '{name}', choose from {sorted(PROBLEMS)}")
    spec = PROBLEMS[name]
    if key_filter and name in KEY_FILTERS:
        spec = replace(spec, key_filter=KEY_FILTERS[name])
    if m.group("p") is not None:
        p, r = int(m.group("p")), int(m.group("r"))
        if p < 2:
            raise InputError(f"modulus must be >= 2, got {p}")
        if not 0 <= r < p:
            raise InputError(f"residue {r} outside 0..{p - 1}")
        spec = replace(spec, modulus=p, residue=r)
    return spec

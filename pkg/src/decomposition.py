"""
Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
SPDX-License-Identifier: MIT-0
"""
"""
Tree decompositions: validation, width and independence number, rooting and
binarization, nice-form conversion and the PACE .td format
"""
import os
import logging
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
from pydantic import BaseModel, Field
from dotenv import load_dotenv
from graph_core import Graph, VertexSet, independence_number
from utils import InputError, ResourceLimitError

load_dotenv()  # load env vars from .env

logging.basicConfig(
    level=os.environ.get("LOG_LEVEL", "INFO"),
    format='%(asctime)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s',
)
logger = logging.getLogger(__name__)

TD_NODE_CAP = int(os.environ.get("TD_NODE_CAP", 1_000_000))
# make_nice emits at most NICE_NODE_FACTOR * (width + 1) * n nodes
NICE_NODE_FACTOR = 4


class DecompositionKind(str, Enum):
    RAW = "raw"
    ROOTED_BINARY = "rooted-binary"
    NICE = "nice"


class NodeKind(str, Enum):
    LEAF = "leaf"
    INTRODUCE = "introduce"
    FORGET = "forget"
    JOIN = "join"


@dataclass(frozen=True)
class NiceTag:
    kind: NodeKind
    vertex: Optional[int] = None


@dataclass(frozen=True)
class TreeDecomposition:
    """Tree of bags. Node ids are 0..len(bags)-1, edges are undirected pairs."""
    bags: Tuple[VertexSet, ...]
    edges: Tuple[Tuple[int, int], ...]
    root: Optional[int] = None
    kind: DecompositionKind = DecompositionKind.RAW
    tags: Optional[Tuple[NiceTag, ...]] = None
    # per-bag α upper bounds recorded by builders, re-checked by validate
    alpha_bounds: Optional[Tuple[int, ...]] = None
    claimed_alpha: Optional[int] = None

    @classmethod
    def build(cls, bags: Iterable[Iterable[int]], edges: Iterable[Tuple[int, int]], **kwargs) -> "TreeDecomposition":
        return cls(tuple(tuple(sorted(set(b))) for b in bags), tuple((int(a), int(b)) for a, b in edges), **kwargs)

    @property
    def node_count(self) -> int:
        return len(self.bags)

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    @cached_property
    def neighbors(self) -> Tuple[Tuple[int, ...], ...]:
        nbrs = [[] for _ in self.bags]
        for a, b in self.edges:
            nbrs[a].append(b)
            nbrs[b].append(a)
        return tuple(tuple(sorted(x)) for x in nbrs)

    @cached_property
    def _rooted(self) -> Tuple[Tuple[int, ...], Tuple[Tuple[int, ...], ...], Tuple[int, ...]]:
        if self.root is None:
            raise InputError("decomposition has no root")
        parent = [-1] * self.node_count
        children: List[List[int]] = [[] for _ in self.bags]
        order = []
        seen = {self.root}
        queue = deque([self.root])
        while queue:
            u = queue.popleft()
            order.append(u)
            for c in self.neighbors[u]:
                if c not in seen:
                    seen.add(c)
                    parent[c] = u
                    children[u].append(c)
                    queue.append(c)
        return tuple(parent), tuple(tuple(c) for c in children), tuple(order)

    def parent(self, u: int) -> int:
        return self._rooted[0][u]

    def children(self, u: int) -> Tuple[int, ...]:
        return self._rooted[1][u]

    def postorder(self) -> List[int]:
        """Children before parents; iterative so deep trees do not hit the recursion limit."""
        return list(reversed(self._rooted[2]))

    def preorder(self) -> List[int]:
        out = []
        stack = [self.root]
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(reversed(self.children(u)))
        return out


class Violation(BaseModel):
    kind: str
    detail: str
    witness: List[int] = Field(default_factory=list)


class ValidationReport(BaseModel):
    valid: bool
    width: int
    alpha: Optional[int] = None
    node_count: int
    violations: List[Violation] = Field(default_factory=list)


def _tree_violations(td: TreeDecomposition) -> List[Violation]:
    out = []
    n_nodes = td.node_count
    for a, b in td.edges:
        if not (0 <= a < n_nodes and 0 <= b < n_nodes):
            out.append(Violation(kind="not-a-tree", detail=f"tree edge ({a}, {b}) references a missing node", witness=[a, b]))
        elif a == b:
            out.append(Violation(kind="not-a-tree", detail=f"tree edge ({a}, {b}) is a loop", witness=[a]))
    if out:
        return out
    distinct = {frozenset(e) for e in td.edges}
    if len(td.edges) != max(n_nodes - 1, 0) or len(distinct) != len(td.edges):
        out.append(Violation(kind="not-a-tree", detail=f"{len(td.edges)} tree edges for {n_nodes} nodes"))
        return out
    if n_nodes:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for c in td.neighbors[u]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        if len(seen) != n_nodes:
            missing = min(set(range(n_nodes)) - seen)
            out.append(Violation(kind="not-a-tree", detail=f"tree is disconnected, node {missing} unreachable", witness=[missing]))
    if td.root is not None and not 0 <= td.root < n_nodes:
        out.append(Violation(kind="root", detail=f"root {td.root} is not a node", witness=[td.root]))
    return out


def _nice_violations(td: TreeDecomposition) -> List[Violation]:
    out = []
    if td.tags is None or len(td.tags) != td.node_count or td.root is None:
        return [Violation(kind="nice-form", detail="nice decomposition without root or per-node tags")]
    if td.bags[td.root]:
        out.append(Violation(kind="nice-form", detail="root bag is not empty", witness=[td.root]))
    for u, tag in enumerate(td.tags):
        kids = td.children(u)
        bag = set(td.bags[u])
        ok = True
        if tag.kind == NodeKind.LEAF:
            ok = not kids and not bag
        elif tag.kind == NodeKind.INTRODUCE:
            ok = len(kids) == 1 and tag.vertex in bag and set(td.bags[kids[0]]) == bag - {tag.vertex}
        elif tag.kind == NodeKind.FORGET:
            ok = len(kids) == 1 and tag.vertex not in bag and set(td.bags[kids[0]]) == bag | {tag.vertex}
        elif tag.kind == NodeKind.JOIN:
            ok = len(kids) == 2 and all(set(td.bags[c]) == bag for c in kids)
        if not ok:
            out.append(Violation(kind="nice-form", detail=f"node {u} tagged {tag.kind.value} does not match its children", witness=[u]))
    return out


def validate(g: Graph, td: TreeDecomposition) -> ValidationReport:
    """Check the three decomposition axioms plus tree shape, recorded α bounds and nice-form tags."""
    report = ValidationReport(valid=False, width=td.width, node_count=td.node_count)
    if td.node_count > TD_NODE_CAP:
        report.violations.append(Violation(kind="node-cap", detail=f"{td.node_count} nodes exceed TD_NODE_CAP={TD_NODE_CAP}"))
        return report
    violations = report.violations
    in_range = True
    for u, bag in enumerate(td.bags):
        for v in bag:
            if not 0 <= v < g.n:
                violations.append(Violation(kind="bag-range", detail=f"bag {u} holds vertex {v} outside the graph", witness=[u, v]))
                in_range = False
    tree_problems = _tree_violations(td)
    violations.extend(tree_problems)

    occurrences: Dict[int, List[int]] = {v: [] for v in range(g.n)}
    for u, bag in enumerate(td.bags):
        for v in bag:
            if v in occurrences:
                occurrences[v].append(u)
    for v in range(g.n):
        if not occurrences[v]:
            violations.append(Violation(kind="vertex-uncovered", detail=f"vertex {v} is in no bag", witness=[v]))
    node_sets = {v: set(nodes) for v, nodes in occurrences.items()}
    for a, b in g.edges:
        if not node_sets[a] & node_sets[b]:
            violations.append(Violation(kind="edge-uncovered", detail=f"edge ({a}, {b}) is in no bag", witness=[a, b]))
    if not tree_problems:
        for v, nodes in occurrences.items():
            if len(nodes) < 2:
                continue
            inside = node_sets[v]
            internal = sum(1 for a, b in td.edges if a in inside and b in inside)
            if internal != len(nodes) - 1:
                violations.append(Violation(kind="disconnected-occurrence", detail=f"nodes holding vertex {v} do not form a subtree", witness=[v]))
        if td.kind == DecompositionKind.NICE:
            violations.extend(_nice_violations(td))
        elif td.kind == DecompositionKind.ROOTED_BINARY and td.root is not None:
            for u in range(td.node_count):
                if len(td.children(u)) > 2:
                    violations.append(Violation(kind="not-binary", detail=f"node {u} has {len(td.children(u))} children", witness=[u]))

    if in_range:
        try:
            per_bag = _bag_alphas(g, td)
            report.alpha = max(per_bag, default=0)
            if td.claimed_alpha is not None and report.alpha > td.claimed_alpha:
                violations.append(Violation(kind="alpha-claim", detail=f"claimed alpha {td.claimed_alpha} but a bag has alpha {report.alpha}"))
            if td.alpha_bounds is not None:
                for u, (actual, bound) in enumerate(zip(per_bag, td.alpha_bounds)):
                    if actual > bound:
                        violations.append(Violation(kind="alpha-bound", detail=f"bag {u} has alpha {actual} above its recorded bound {bound}", witness=[u]))
        except ResourceLimitError as e:
            violations.append(Violation(kind="alpha-cap", detail=str(e)))
    report.valid = not violations
    return report


def _bag_alphas(g: Graph, td: TreeDecomposition) -> List[int]:
    cache: Dict[VertexSet, int] = {}
    out = []
    for bag in td.bags:
        if bag not in cache:
            cache[bag] = independence_number(g, bag)
        out.append(cache[bag])
    return out


def alpha_of_decomposition(g: Graph, td: TreeDecomposition) -> int:
    for u, bag in enumerate(td.bags):
        if bag and (bag[0] < 0 or bag[-1] >= g.n):
            raise InputError(f"bag {u} leaves the vertex range of the graph")
    return max(_bag_alphas(g, td), default=0)


def require_valid(g: Graph, td: TreeDecomposition) -> ValidationReport:
    report = validate(g, td)
    if not report.valid:
        first = report.violations[0]
        raise InputError(f"invalid tree decomposition ({len(report.violations)} violations, first: {first.detail})",
                         report=report.model_dump())
    return report


def root_and_binarize(td: TreeDecomposition, root: int) -> TreeDecomposition:
    """Root at `root` and give every node at most two children.

    A node with d > 2 children becomes a chain of d copies of its bag, each copy
    holding one original child and the next copy; the last copy holds the last child.
    """
    if not 0 <= root < td.node_count:
        raise InputError(f"unknown root node {root}")
    rooted = replace(td, root=root, kind=DecompositionKind.RAW, tags=None)
    bags = list(td.bags)
    bounds = list(td.alpha_bounds) if td.alpha_bounds is not None else None
    edges = []
    for u in rooted.preorder():
        kids = rooted.children(u)
        if len(kids) <= 2:
            edges.extend((u, c) for c in kids)
            continue
        holder = u
        for i, c in enumerate(kids):
            edges.append((holder, c))
            if i < len(kids) - 1:
                copy = len(bags)
                bags.append(td.bags[u])
                if bounds is not None:
                    bounds.append(bounds[u])
                edges.append((holder, copy))
                holder = copy
    return TreeDecomposition(
        bags=tuple(bags), edges=tuple(edges), root=root, kind=DecompositionKind.ROOTED_BINARY,
        alpha_bounds=tuple(bounds) if bounds is not None else None, claimed_alpha=td.claimed_alpha)


def _contracted_children(td: TreeDecomposition) -> Dict[int, List[int]]:
    """Children lists after merging every node whose bag is a subset of its parent's bag."""
    out: Dict[int, List[int]] = {}
    stack = [td.root]
    while stack:
        u = stack.pop()
        bag = set(td.bags[u])
        kids = []
        pending = list(td.children(u))
        while pending:
            c = pending.pop()
            if set(td.bags[c]) <= bag:
                pending.extend(td.children(c))
            else:
                kids.append(c)
                stack.append(c)
        out[u] = sorted(kids)
    return out


class _NiceBuilder:
    def __init__(self):
        self.bags: List[VertexSet] = []
        self.tags: List[NiceTag] = []
        self.edges: List[Tuple[int, int]] = []

    def add(self, bag: Iterable[int], tag: NiceTag, children: Sequence[int] = ()) -> int:
        node = len(self.bags)
        self.bags.append(tuple(sorted(bag)))
        self.tags.append(tag)
        self.edges.extend((node, c) for c in children)
        return node

    def leaf(self) -> int:
        return self.add((), NiceTag(NodeKind.LEAF))

    def introduce_all(self, top: int, vertices: Iterable[int]) -> int:
        for v in sorted(vertices):
            top = self.add(set(self.bags[top]) | {v}, NiceTag(NodeKind.INTRODUCE, v), [top])
        return top

    def forget_all(self, top: int, vertices: Iterable[int]) -> int:
        for v in sorted(vertices):
            top = self.add(set(self.bags[top]) - {v}, NiceTag(NodeKind.FORGET, v), [top])
        return top

    def join(self, left: int, right: int) -> int:
        return self.add(self.bags[left], NiceTag(NodeKind.JOIN), [left, right])


def make_nice(g: Graph, td: TreeDecomposition) -> TreeDecomposition:
    """Convert a valid decomposition to nice form.

    Every output bag is a subset of an input bag. Along each tree edge the child
    side first forgets, then introduces, one vertex per node in ascending order.
    """
    require_valid(g, td)
    if td.node_count == 0:
        return TreeDecomposition(bags=((),), edges=(), root=0, kind=DecompositionKind.NICE, tags=(NiceTag(NodeKind.LEAF),))
    rooted = td if td.root is not None else replace(td, root=0)
    kids = _contracted_children(rooted)
    nb = _NiceBuilder()
    top: Dict[int, int] = {}
    # postorder over the contracted tree
    order = []
    stack = [rooted.root]
    while stack:
        u = stack.pop()
        order.append(u)
        stack.extend(kids[u])
    for u in reversed(order):
        bag = set(rooted.bags[u])
        if not kids[u]:
            top[u] = nb.introduce_all(nb.leaf(), bag)
            continue
        branches = []
        for c in kids[u]:
            child_bag = set(rooted.bags[c])
            node = nb.forget_all(top.pop(c), child_bag - bag)
            branches.append(nb.introduce_all(node, bag - child_bag))
        node = branches[0]
        for other in branches[1:]:
            node = nb.join(node, other)
        top[u] = node
    root = nb.forget_all(top[rooted.root], rooted.bags[rooted.root])
    nice = TreeDecomposition(bags=tuple(nb.bags), edges=tuple(nb.edges), root=root,
                             kind=DecompositionKind.NICE, tags=tuple(nb.tags))
    logger.info(f"nice decomposition: {td.node_count} bags -> {nice.node_count} nodes, width {nice.width}")
    return nice


# ---------------------------------------------------------------------------
# PACE .td files
# ---------------------------------------------------------------------------

def parse_td(text: str) -> TreeDecomposition:
    header = None
    bags: Dict[int, VertexSet] = {}
    edges = []
    claimed_alpha = None
    bounds: Dict[int, int] = {}
    root = None
    for line_num, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == 'c':
                if len(parts) == 3 and parts[1] == 'alpha':
                    claimed_alpha = int(parts[2])
                elif len(parts) == 4 and parts[1] == 'bound':
                    bounds[int(parts[2])] = int(parts[3])
                elif len(parts) == 3 and parts[1] == 'root':
                    root = int(parts[2]) - 1
                continue
            if parts[0] == 's':
                if header is not None:
                    raise InputError("duplicate 's td' line", line=line_num)
                if len(parts) != 5 or parts[1] != 'td':
                    raise InputError(f"malformed solution line '{line}', expected 's td <bags> <width+1> <n>'", line=line_num)
                header = (int(parts[2]), int(parts[3]), int(parts[4]))
                continue
            if header is None:
                raise InputError("content before 's td' line", line=line_num)
            if parts[0] == 'b':
                if len(parts) < 2:
                    raise InputError(f"malformed bag line '{line}'", line=line_num)
                bag_id = int(parts[1])
                if not 1 <= bag_id <= header[0]:
                    raise InputError(f"bag id {bag_id} outside 1..{header[0]}", line=line_num)
                if bag_id in bags:
                    raise InputError(f"duplicate bag id {bag_id}", line=line_num)
                vs = [int(x) - 1 for x in parts[2:]]
                if any(not 0 <= v < header[2] for v in vs):
                    raise InputError(f"bag {bag_id} holds a vertex outside 1..{header[2]}", line=line_num)
                bags[bag_id] = tuple(sorted(set(vs)))
                continue
            if len(parts) != 2:
                raise InputError(f"malformed tree edge '{line}'", line=line_num)
            a, b = int(parts[0]), int(parts[1])
            if not (1 <= a <= header[0] and 1 <= b <= header[0]):
                raise InputError(f"tree edge ({a}, {b}) references a missing bag", line=line_num)
            edges.append((a - 1, b - 1))
        except InputError:
            raise
        except ValueError:
            raise InputError(f"non-integer token in '{line}'", line=line_num)
    if header is None:
        raise InputError("missing 's td' line")
    if len(bags) != header[0]:
        raise InputError(f"header declares {header[0]} bags, found {len(bags)}")
    n_bags = header[0]
    alpha_bounds = tuple(bounds.get(i + 1, 0) for i in range(n_bags)) if bounds else None
    if alpha_bounds is not None and len(bounds) != n_bags:
        raise InputError(f"'c bound' lines cover {len(bounds)} of {n_bags} bags")
    return TreeDecomposition(bags=tuple(bags[i + 1] for i in range(n_bags)), edges=tuple(edges), root=root,
                             alpha_bounds=alpha_bounds, claimed_alpha=claimed_alpha)


def read_td(path: str) -> TreeDecomposition:
    with open(path, 'r') as f:
        return parse_td(f.read())


def format_td(td: TreeDecomposition, n: int, comments: Sequence[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    lines.append(f"s td {td.node_count} {td.width + 1} {n}")
    if td.claimed_alpha is not None:
        lines.append(f"c alpha {td.claimed_alpha}")
    if td.root is not None:
        lines.append(f"c root {td.root + 1}")
    if td.alpha_bounds is not None:
        lines.extend(f"c bound {u + 1} {k}" for u, k in enumerate(td.alpha_bounds))
    for u, bag in enumerate(td.bags):
        lines.append(" ".join(["b", str(u + 1)] + [str(v + 1) for v in bag]))
    lines.extend(f"{a + 1} {b + 1}" for a, b in td.edges)
    return "\n".join(lines) + "\n"


def write_td(td: TreeDecomposition, path: str, n: int, comments: Sequence[str] = ()) -> None:
    with open(path, 'w') as f:
        f.write(format_td(td, n, comments))

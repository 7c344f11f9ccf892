"""
Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
SPDX-License-Identifier: MIT-0
"""
"""
Signatures of boundaried solution pieces and their canonical byte keys.

A signature cuts g[F] along the bags of the lowest-common-ancestor closure Q of
the nodes marking the boundary B. What remains is the graph H on the extended
boundary B' plus one fingerprint per piece hanging off Q. Slots 0..|B|-1 hold B
in ascending vertex order, the remaining slots are anonymous.
"""
import os
import json
import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple
from dotenv import load_dotenv
from decomposition import TreeDecomposition, root_and_binarize
from builders import bounded_width_decomposition
from graph_core import Graph, VertexSet, induced_subgraph, subset_treewidth_below, vertex_set
from type_algebra import BoundariedGraph, Fingerprint, ProblemSpec, fingerprint, forget, glue
from utils import ContractError, ResourceLimitError

load_dotenv()  # load env vars from .env

logging.basicConfig(
    level=os.environ.get("LOG_LEVEL", "INFO"),
    format='%(asctime)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s',
)
logger = logging.getLogger(__name__)

CanonicalSignature = bytes


@dataclass(frozen=True)
class Signature:
    s: int
    boundary_ids: VertexSet
    n_omega: int
    piece_boundaries: Tuple[Tuple[int, ...], ...]
    h_edges: Tuple[Tuple[int, int], ...]
    piece_types: Tuple[Fingerprint, ...]
    # vertex ids behind the anonymous slots, for dumps only
    omega_ids: VertexSet = ()

    @property
    def slot_count(self) -> int:
        return len(self.boundary_ids) + self.n_omega


@dataclass(frozen=True)
class SignatureParts:
    """A signature together with the concrete pieces it summarises."""
    signature: Signature
    h: Graph
    pieces: Tuple[BoundariedGraph, ...]
    q_nodes: Tuple[int, ...]


def _marked_nodes(td: TreeDecomposition, local_b: Sequence[int]) -> Set[int]:
    first: Dict[int, int] = {}
    for u, bag in enumerate(td.bags):
        for v in bag:
            first.setdefault(v, u)
    return {first[v] for v in local_b}


def _lca_closure(td: TreeDecomposition, marked: Set[int]) -> Set[int]:
    order = td.preorder()
    rank = {u: i for i, u in enumerate(order)}
    depth = {td.root: 0}
    for u in order[1:]:
        depth[u] = depth[td.parent(u)] + 1

    def lca(a: int, b: int) -> int:
        while depth[a] > depth[b]:
            a = td.parent(a)
        while depth[b] > depth[a]:
            b = td.parent(b)
        while a != b:
            a, b = td.parent(a), td.parent(b)
        return a

    ordered = sorted(marked, key=rank.__getitem__)
    closure = set(ordered)
    for a, b in zip(ordered, ordered[1:]):
        closure.add(lca(a, b))
    return closure


def _q_parent(td: TreeDecomposition, q_nodes: Set[int], q: int) -> Optional[int]:
    u = td.parent(q)
    while u >= 0 and u not in q_nodes:
        u = td.parent(u)
    return u if u >= 0 else None


def _components_off(td: TreeDecomposition, q_nodes: Set[int]) -> List[Tuple[List[int], Set[int]]]:
    """Components of the tree minus Q, each with the Q nodes adjacent to it."""
    seen: Set[int] = set()
    out = []
    for start in range(td.node_count):
        if start in q_nodes or start in seen:
            continue
        seen.add(start)
        comp, touching = [], set()
        queue = deque([start])
        while queue:
            u = queue.popleft()
            comp.append(u)
            for w in td.neighbors[u]:
                if w in q_nodes:
                    touching.add(w)
                elif w not in seen:
                    seen.add(w)
                    queue.append(w)
        out.append((comp, touching))
    return out


def signature_parts(spec: ProblemSpec, g: Graph, f: Iterable[int], b: Iterable[int], ell: int) -> SignatureParts:
    f = vertex_set(f, g.n)
    b = vertex_set(b, g.n)
    if not set(b) <= set(f):
        raise ContractError(f"boundary {list(b)} is not contained in the piece")
    if len(b) > ell:
        raise ContractError(f"boundary of size {len(b)} exceeds ell={ell}")
    piece = induced_subgraph(g, f)
    local = {v: i for i, v in enumerate(f)}
    local_b = [local[v] for v in b]
    try:
        raw = bounded_width_decomposition(piece, spec.t)
    except ContractError as e:
        raise ContractError(f"piece on {len(f)} vertices violates treewidth < {spec.t}: {e}")
    td = root_and_binarize(raw, raw.root)

    marked = _marked_nodes(td, local_b)
    if not marked:
        marked = {td.root}
    q_nodes = _lca_closure(td, marked)

    extended = set()
    for q in q_nodes:
        extended.update(td.bags[q])
    omega = sorted(extended - set(local_b))
    slots = list(local_b) + omega
    slot_of = {v: i for i, v in enumerate(slots)}

    # group the components by the compressed Q edge they hang from
    q_parent = {q: _q_parent(td, q_nodes, q) for q in q_nodes}
    q_root = [q for q in q_nodes if q_parent[q] is None]
    if len(q_root) != 1:
        raise ContractError(f"closure has {len(q_root)} top nodes")
    q_root = q_root[0]
    first_child = min((q for q in q_nodes if q_parent[q] == q_root), default=None)
    groups: Dict[Tuple[int, ...], List[int]] = {}
    for comp, touching in _components_off(td, q_nodes):
        if len(touching) == 2:
            a, c = sorted(touching)
            key = (a, c) if q_parent.get(c) == a else (c, a)
            if q_parent.get(key[1]) != key[0]:
                raise ContractError(f"component touches unrelated closure nodes {sorted(touching)}")
        elif len(touching) == 1:
            (q,) = touching
            if q_parent[q] is not None:
                key = (q_parent[q], q)
            elif first_child is not None:
                key = (q, first_child)
            else:
                key = (q,)
        else:
            raise ContractError(f"component touches {len(touching)} closure nodes")
        groups.setdefault(key, []).extend(comp)

    pieces, boundaries, types = [], [], []
    for key in sorted(groups):
        boundary_vertices = set()
        for q in key:
            boundary_vertices.update(td.bags[q])
        members = set(boundary_vertices)
        for u in groups[key]:
            members.update(td.bags[u])
        piece_slots = tuple(sorted(slot_of[v] for v in boundary_vertices))
        sub_vertices = sorted(members)
        position = {v: i for i, v in enumerate(sub_vertices)}
        bg = BoundariedGraph(induced_subgraph(piece, sub_vertices), tuple(position[slots[x]] for x in piece_slots))
        pieces.append(bg)
        boundaries.append(piece_slots)
        types.append(fingerprint(spec, bg))

    h = induced_subgraph(piece, slots)
    # induced_subgraph sorts, so map back onto slot order
    h_sorted = sorted(slots)
    h_edges = tuple(sorted(tuple(sorted((slot_of[h_sorted[a]], slot_of[h_sorted[c]]))) for a, c in h.edges))
    h_graph = Graph.from_edges(len(slots), h_edges, weights=[piece.weights[v] for v in slots],
                               origin=[f[v] for v in slots])

    sig = Signature(
        s=len(pieces), boundary_ids=b, n_omega=len(omega), piece_boundaries=tuple(boundaries),
        h_edges=h_edges, piece_types=tuple(types), omega_ids=tuple(f[v] for v in omega))
    _check_bounds(spec, g, sig, h_graph, len(q_nodes), ell)
    return SignatureParts(signature=sig, h=h_graph, pieces=tuple(pieces), q_nodes=tuple(sorted(q_nodes)))


def _check_bounds(spec: ProblemSpec, g: Graph, sig: Signature, h: Graph, q_size: int, ell: int) -> None:
    t = spec.t
    if q_size >= 2 * ell:
        raise ContractError(f"closure of {q_size} nodes reaches 2*ell={2 * ell}")
    if sig.s > 2 * ell:
        raise ContractError(f"{sig.s} pieces exceed 2*ell={2 * ell}")
    if sig.slot_count > 2 * ell * t:
        raise ContractError(f"extended boundary of {sig.slot_count} slots exceeds 2*ell*t={2 * ell * t}")
    for pb in sig.piece_boundaries:
        if len(pb) > 2 * t:
            raise ContractError(f"piece boundary of {len(pb)} slots exceeds 2t={2 * t}")
    nb = len(sig.boundary_ids)
    for i in range(nb):
        for j in range(i + 1, nb):
            if h.has_edge(i, j) != g.has_edge(sig.boundary_ids[i], sig.boundary_ids[j]):
                raise ContractError(f"H disagrees with the graph on boundary pair {sig.boundary_ids[i]}, {sig.boundary_ids[j]}")
    if not subset_treewidth_below(h, range(h.n), t):
        raise ContractError(f"H on {h.n} slots has treewidth >= {t}")


def compute_signature(spec: ProblemSpec, g: Graph, f: Iterable[int], b: Iterable[int], ell: int) -> Signature:
    return signature_parts(spec, g, f, b, ell).signature


def reconstruct(parts: SignatureParts) -> BoundariedGraph:
    """Glue H and the pieces back together; the result has the signature's boundary."""
    sig = parts.signature
    acc = BoundariedGraph(parts.h, tuple(range(sig.slot_count)))
    for piece, slots in zip(parts.pieces, sig.piece_boundaries):
        acc = glue(acc, piece, [(slot, j) for j, slot in enumerate(slots)])
    for _ in range(sig.n_omega):
        acc = forget(acc, len(sig.boundary_ids))
    return acc


# ---------------------------------------------------------------------------
# canonical form
# ---------------------------------------------------------------------------

def _serialize(sig: Signature, labeling: Sequence[int]) -> str:
    edges = sorted(sorted((labeling[a], labeling[c])) for a, c in sig.h_edges)
    pieces = []
    for slots, fp in zip(sig.piece_boundaries, sig.piece_types):
        labels = sorted(labeling[x] for x in slots)
        new_position = [labels.index(labeling[x]) for x in slots]
        pieces.append([labels, list(fp.permute(new_position).key())])
    pieces.sort(key=lambda p: json.dumps(p))
    return json.dumps([list(sig.boundary_ids), sig.n_omega, sig.s, edges, pieces], separators=(",", ":"))


def _refine(sig: Signature, nbrs: List[List[int]], colors: List[int]) -> List[int]:
    """Equitable-style colour refinement; colour order of existing cells is preserved."""
    while True:
        piece_colors = []
        for slots, fp in zip(sig.piece_boundaries, sig.piece_types):
            residue = -1 if fp.residue is None else fp.residue
            piece_colors.append((fp.tag, fp.size, fp.dead, residue, tuple(sorted(colors[x] for x in slots))))
        incidence: List[List[tuple]] = [[] for _ in colors]
        for slots, pc in zip(sig.piece_boundaries, piece_colors):
            for x in slots:
                incidence[x].append(pc)
        raw = [(colors[x], tuple(sorted(colors[y] for y in nbrs[x])), tuple(sorted(incidence[x])))
               for x in range(len(colors))]
        palette = {r: i for i, r in enumerate(sorted(set(raw)))}
        refined = [palette[r] for r in raw]
        if len(palette) == len(set(colors)):
            return refined
        colors = refined


def _validated_bijection(colors: Sequence[int], n_boundary: int) -> Optional[List[int]]:
    """Labeling of a discrete colouring, None unless injective and fixing the boundary."""
    if len(set(colors)) != len(colors):
        return None
    rank = {c: i for i, c in enumerate(sorted(colors))}
    labeling = [rank[c] for c in colors]
    if any(labeling[i] != i for i in range(n_boundary)):
        return None
    return labeling


def _swap_is_automorphism(sig: Signature, identity: str, x: int, y: int) -> bool:
    labeling = list(range(sig.slot_count))
    labeling[x], labeling[y] = y, x
    return _serialize(sig, labeling) == identity


def _orbit_roots(cell: List[int], automorphisms: List[List[int]], fixed: Sequence[int]) -> Dict[int, int]:
    """Orbits of the cell under the known automorphisms that fix every individualised slot."""
    parent = {x: x for x in cell}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for gamma in automorphisms:
        if any(gamma[p] != p for p in fixed):
            continue
        for x in cell:
            y = gamma[x]
            if y in parent:
                rx, ry = find(x), find(y)
                if rx != ry:
                    parent[max(rx, ry)] = min(rx, ry)
    return {x: find(x) for x in cell}


class _CanonicalSearch:
    def __init__(self, sig: Signature):
        self.sig = sig
        self.nb = len(sig.boundary_ids)
        self.total = sig.slot_count
        self.nbrs: List[List[int]] = [[] for _ in range(self.total)]
        for a, c in sig.h_edges:
            self.nbrs[a].append(c)
            self.nbrs[c].append(a)
        self.identity = _serialize(sig, list(range(self.total)))
        self.best: Optional[str] = None
        self.best_labeling: Optional[List[int]] = None
        self.automorphisms: List[List[int]] = []

    def run(self) -> str:
        start = [i if i < self.nb else self.nb for i in range(self.total)]
        self._visit(_refine(self.sig, self.nbrs, start), ())
        return self.best

    def _leaf(self, colors: List[int]) -> None:
        labeling = _validated_bijection(colors, self.nb)
        if labeling is None:
            raise ContractError("colour refinement produced a non-bijective leaf")
        text = _serialize(self.sig, labeling)
        if self.best is None or text < self.best:
            self.best, self.best_labeling = text, labeling
        elif text == self.best:
            inverse = {lab: x for x, lab in enumerate(self.best_labeling)}
            self.automorphisms.append([inverse.get(labeling[x], x) for x in range(self.total)])

    def _visit(self, colors: List[int], fixed: Tuple[int, ...]) -> None:
        cells: Dict[int, List[int]] = {}
        for x in range(self.nb, self.total):
            cells.setdefault(colors[x], []).append(x)
        target = min((c for c, members in cells.items() if len(members) > 1), default=None)
        if target is None:
            self._leaf(colors)
            return
        cell = cells[target]
        tried: List[int] = []
        for x in cell:
            roots = _orbit_roots(cell, self.automorphisms, fixed)
            if any(roots[x] == roots[r] for r in tried):
                continue
            if any(_swap_is_automorphism(self.sig, self.identity, r, x) for r in tried):
                continue
            tried.append(x)
            split = [2 * c + (1 if c == target and y != x else 0) for y, c in enumerate(colors)]
            self._visit(_refine(self.sig, self.nbrs, split), fixed + (x,))


def canonicalize(sig: Signature) -> CanonicalSignature:
    """Least serialization over an individualisation-refinement search of the anonymous slots."""
    if sig.n_omega == 0:
        return _serialize(sig, list(range(sig.slot_count))).encode()
    return _CanonicalSearch(sig).run().encode()


def signature_key(spec: ProblemSpec, g: Graph, f: Iterable[int], b: Iterable[int], ell: int) -> CanonicalSignature:
    return canonicalize(compute_signature(spec, g, f, b, ell))


def signature_count_probe(spec: ProblemSpec, ell: int, sample: Iterable[Tuple[Graph, VertexSet, VertexSet]]) -> int:
    """Number of distinct canonical signatures over (graph, piece, boundary) samples."""
    keys = set()
    for g, f, b in sample:
        try:
            keys.add(signature_key(spec, g, f, b, ell))
        except ResourceLimitError as e:
            logger.warning(f"skipping sample: {e}")
    return len(keys)


def signature_to_json(sig: Signature) -> dict:
    return {
        "s": sig.s,
        "boundary": [v + 1 for v in sig.boundary_ids],
        "anonymous": [v + 1 for v in sig.omega_ids],
        "h_edges": [list(e) for e in sig.h_edges],
        "pieces": [{"slots": list(slots), "type": fp.to_json()}
                   for slots, fp in zip(sig.piece_boundaries, sig.piece_types)],
    }

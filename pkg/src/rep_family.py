"""
Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
SPDX-License-Identifier: MIT-0
"""
"""
Representative families: keep the heaviest feasible set per canonical signature
"""
import os
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple
from dotenv import load_dotenv
from graph_core import Graph, VertexSet, subset_treewidth_below
from signature_engine import CanonicalSignature, signature_key
from type_algebra import ProblemSpec
from utils import ContractError, cache_lock

load_dotenv()  # load env vars from .env

logging.basicConfig(
    level=os.environ.get("LOG_LEVEL", "INFO"),
    format='%(asctime)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s',
)
logger = logging.getLogger(__name__)

SignatureCache = Dict[Tuple[VertexSet, VertexSet], CanonicalSignature]


@dataclass(frozen=True)
class FamilyEntry:
    vertices: VertexSet
    weight: Fraction
    key: Optional[CanonicalSignature] = None

    @classmethod
    def of(cls, g: Graph, vertices: Iterable[int]) -> "FamilyEntry":
        vs = tuple(sorted(set(vertices)))
        return cls(vs, g.weight_of(vs))


@dataclass(frozen=True)
class MergedPair:
    """A dropped entry and the representative that replaced it."""
    boundary: VertexSet
    kept: VertexSet
    dropped: VertexSet


def _better(a: FamilyEntry, b: FamilyEntry) -> bool:
    """True when a should represent the class instead of b."""
    if a.weight != b.weight:
        return a.weight > b.weight
    return a.vertices < b.vertices


def keyed(spec: ProblemSpec, g: Graph, b: VertexSet, entry: FamilyEntry, ell: int,
          cache: Optional[SignatureCache] = None) -> FamilyEntry:
    """Entry with its canonical signature attached, computed at most once per (F, B)."""
    if entry.key is not None:
        return entry
    ck = (entry.vertices, b)
    if cache is not None:
        with cache_lock:
            hit = cache.get(ck)
        if hit is not None:
            return FamilyEntry(entry.vertices, entry.weight, hit)
    key = signature_key(spec, g, entry.vertices, b, ell)
    if cache is not None:
        with cache_lock:
            cache[ck] = key
    return FamilyEntry(entry.vertices, entry.weight, key)


def check_entry(spec: ProblemSpec, g: Graph, b: VertexSet, entry: FamilyEntry) -> None:
    members = set(entry.vertices)
    if not set(b) <= members:
        raise ContractError(f"entry {[v + 1 for v in entry.vertices]} misses boundary vertices "
                            f"{[v + 1 for v in sorted(set(b) - members)]}")
    if not subset_treewidth_below(g, entry.vertices, spec.t):
        raise ContractError(f"entry {[v + 1 for v in entry.vertices]} has treewidth >= {spec.t}")


def compress(spec: ProblemSpec, g: Graph, b: VertexSet, family: Iterable[FamilyEntry], ell: int,
             cache: Optional[SignatureCache] = None, merge_log: Optional[List[MergedPair]] = None) -> List[FamilyEntry]:
    """One representative per canonical signature: the heaviest, then the lexicographically smallest set.

    Output is ordered by signature key so it does not depend on input order.
    """
    b = tuple(sorted(b))
    best: Dict[CanonicalSignature, FamilyEntry] = {}
    for entry in family:
        check_entry(spec, g, b, entry)
        entry = keyed(spec, g, b, entry, ell, cache)
        current = best.get(entry.key)
        if current is None:
            best[entry.key] = entry
            continue
        if current.vertices == entry.vertices:
            continue
        if _better(entry, current):
            best[entry.key] = entry
            kept, dropped = entry, current
        else:
            kept, dropped = current, entry
        if merge_log is not None:
            merge_log.append(MergedPair(boundary=b, kept=kept.vertices, dropped=dropped.vertices))
    return [best[k] for k in sorted(best)]

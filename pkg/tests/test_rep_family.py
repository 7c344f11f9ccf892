from fractions import Fraction

import numpy as np
import pytest

import rep_family
from graph_core import Graph, gnp_graph, path_graph, random_chordal_graph
from oracle import _boundaried, compress_probe, contextual_equivalence
from rep_family import FamilyEntry, check_entry, compress
from type_algebra import PROBLEMS
from utils import ContractError

FOREST = PROBLEMS["induced-forest"]
MWIS = PROBLEMS["mwis"]


def star() -> Graph:
    # centre 0 with two pendants of different weight
    return Graph.from_edges(3, [(0, 1), (0, 2)], weights=[0, 3, 5])


def test_distinct_signatures_are_all_kept():
    g = path_graph(3)
    family = [FamilyEntry.of(g, [0]), FamilyEntry.of(g, [0, 1])]
    out = compress(FOREST, g, (), family, ell=1)
    assert sorted(e.vertices for e in out) == [(0,), (0, 1)]
    assert all(e.key is not None for e in out)


def test_duplicates_collapse_without_a_merge():
    g = path_graph(3)
    log = []
    out = compress(FOREST, g, (0,), [FamilyEntry.of(g, [0, 1])] * 3, ell=1, merge_log=log)
    assert [e.vertices for e in out] == [(0, 1)]
    assert log == []


def test_heavier_representative_wins():
    g = Graph.from_edges(2, [(0, 1)], weights=[3, 5])
    out = compress(MWIS, g, (), [FamilyEntry.of(g, [0]), FamilyEntry.of(g, [1])], ell=1)
    assert [e.vertices for e in out] == [(1,)]
    assert out[0].weight == Fraction(5)


def test_inverted_preference_keeps_the_lighter_set(monkeypatch):
    original = rep_family._better
    monkeypatch.setattr(rep_family, "_better", lambda a, b: not original(a, b))
    g = Graph.from_edges(2, [(0, 1)], weights=[3, 5])
    out = compress(MWIS, g, (), [FamilyEntry.of(g, [0]), FamilyEntry.of(g, [1])], ell=1)
    assert [e.vertices for e in out] == [(0,)]


def test_ties_break_towards_the_smaller_set():
    g = path_graph(4)
    out = compress(MWIS, g, (), [FamilyEntry.of(g, [3]), FamilyEntry.of(g, [1])], ell=1)
    assert [e.vertices for e in out] == [(1,)]


def test_merged_pendants_are_interchangeable():
    g = star()
    log = []
    out = compress(FOREST, g, (0,), [FamilyEntry.of(g, [0, 1]), FamilyEntry.of(g, [0, 2])], ell=1, merge_log=log)
    assert [e.vertices for e in out] == [(0, 2)]
    assert len(log) == 1
    pair = log[0]
    assert pair.kept == (0, 2) and pair.dropped == (0, 1)
    verdict = contextual_equivalence(FOREST, _boundaried(g, pair.kept, pair.boundary),
                                     _boundaried(g, pair.dropped, pair.boundary), trials=50)
    assert verdict.equivalent


def test_output_does_not_depend_on_input_order():
    g = random_chordal_graph(9, seed=4)
    rng = np.random.default_rng(1)
    family = []
    for _ in range(20):
        vs = [v for v in range(g.n) if rng.random() < 0.3]
        if all(not (g.adj[v] & set(vs)) for v in vs):
            family.append(FamilyEntry.of(g, vs))
    forward = compress(MWIS, g, (), family, ell=1)
    backward = compress(MWIS, g, (), family[::-1], ell=1)
    assert [e.vertices for e in forward] == [e.vertices for e in backward]


def test_cache_is_filled_once_per_entry():
    g = path_graph(3)
    cache = {}
    family = [FamilyEntry.of(g, [0]), FamilyEntry.of(g, [0, 1])]
    first = compress(FOREST, g, (0,), family, ell=1, cache=cache)
    assert len(cache) == 2
    again = compress(FOREST, g, (0,), family, ell=1, cache=cache)
    assert [e.key for e in first] == [e.key for e in again]


def test_check_entry():
    g = path_graph(4)
    check_entry(FOREST, g, (1,), FamilyEntry.of(g, [0, 1, 2]))
    with pytest.raises(ContractError):
        check_entry(FOREST, g, (3,), FamilyEntry.of(g, [0, 1]))
    with pytest.raises(ContractError):
        check_entry(MWIS, g, (), FamilyEntry.of(g, [0, 1]))


@pytest.mark.parametrize("seed", range(4))
def test_compress_check_finds_nothing(seed):
    g = gnp_graph(9, 0.3, seed=seed)
    for name in ("mwis", "induced-forest", "induced-matching"):
        assert compress_probe(PROBLEMS[name], g, np.random.default_rng(seed), size=12) is None

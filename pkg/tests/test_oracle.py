import numpy as np
import pytest

import oracle
from graph_core import Graph, cycle_graph, path_graph, petersen_graph
from decomposition import TreeDecomposition, validate
from oracle import (BRUTE_FORCE_CAP, INSTANCE_FAMILIES, brute_force_solve, check_instance, contextual_equivalence,
                    cross_check_suite, default_problems, random_context, random_instance)
from type_algebra import PROBLEMS, BoundariedGraph, parse_problem
from utils import InputError, ResourceLimitError

FOREST = PROBLEMS["induced-forest"]


def test_brute_force_small_cases():
    edge = Graph.from_edges(2, [(0, 1)], weights=[2, 3])
    assert brute_force_solve(edge, PROBLEMS["mwis"]).weight == "3"
    assert brute_force_solve(cycle_graph(4), FOREST).weight == "3"
    assert not brute_force_solve(path_graph(3), parse_problem("induced-matching@mod2=1")).feasible


@pytest.mark.parametrize("name, weight", [
    ("mwis", "4"),
    ("induced-forest", "7"),
    ("induced-linear-forest", "6"),
])
def test_brute_force_on_petersen(name, weight):
    assert brute_force_solve(petersen_graph(), PROBLEMS[name]).weight == weight


def test_brute_force_cap(monkeypatch):
    monkeypatch.setattr(oracle, "BRUTE_FORCE_CAP", 4)
    with pytest.raises(ResourceLimitError):
        brute_force_solve(path_graph(5), FOREST)
    assert BRUTE_FORCE_CAP >= 12


def test_identical_pieces_are_equivalent():
    piece = BoundariedGraph(path_graph(3), (0, 2))
    assert contextual_equivalence(FOREST, piece, piece, trials=30).equivalent


def test_forest_equivalence_of_boundary_paths():
    p3 = BoundariedGraph(path_graph(3), (0, 2))
    p4 = BoundariedGraph(path_graph(4), (0, 3))
    edge = BoundariedGraph(path_graph(2), (0, 1))
    assert contextual_equivalence(FOREST, p3, p4, trials=60).equivalent
    # a context edge between the ends closes a cycle only through the longer path
    assert not contextual_equivalence(FOREST, p3, edge, trials=200).equivalent


def test_split_ends_are_distinguished():
    joined = BoundariedGraph(path_graph(3), (0, 2))
    split = BoundariedGraph(Graph.from_edges(3, [(0, 1)]), (0, 2))
    verdict = contextual_equivalence(FOREST, joined, split, trials=200)
    assert not verdict.equivalent
    assert verdict.counterexample["first"] != verdict.counterexample["second"]


def test_matching_pendant_differs_from_isolated_vertex():
    matching = PROBLEMS["induced-matching"]
    pendant = BoundariedGraph(path_graph(2), (0,))
    alone = BoundariedGraph(Graph.from_edges(1, []), (0,))
    verdict = contextual_equivalence(matching, pendant, alone, trials=5)
    assert not verdict.equivalent
    # the empty context already separates them
    assert verdict.counterexample["trial"] == 0


def test_equivalence_needs_equal_boundaries():
    with pytest.raises(InputError):
        contextual_equivalence(FOREST, BoundariedGraph(path_graph(2), (0,)), BoundariedGraph(path_graph(2), (0, 1)))


def test_random_context_respects_treewidth():
    rng = np.random.default_rng(3)
    for _ in range(20):
        ctx = random_context(FOREST, 2, 8, rng)
        assert ctx.boundary == (0, 1)
        assert 2 <= ctx.graph.n <= 8
        assert oracle.subset_treewidth_below(ctx.graph, range(ctx.graph.n), FOREST.t)


@pytest.mark.parametrize("family", INSTANCE_FAMILIES)
def test_random_instances_are_valid(family):
    for seed in range(4):
        g, td, builder = random_instance(family, 9, seed)
        assert validate(g, td).valid
        assert builder in ("exact", "clique-tree", "separators")


def test_check_instance_agrees_on_c5():
    td = TreeDecomposition.build([(0, 1, 2), (0, 2, 3), (0, 3, 4)], [(0, 1), (1, 2)])
    for name in default_problems():
        assert check_instance(cycle_graph(5), td, parse_problem(name)) is None


def test_check_instance_reports_errors():
    td = TreeDecomposition.build([(0, 1)], [])
    failure = check_instance(path_graph(3), td, FOREST)
    assert failure["kind"] == "error"


def test_empty_suite_passes():
    report = cross_check_suite(seed=1, instances=0, merged_pairs=0, compress_probes=0)
    assert report.passed
    assert report.checks == 0


def test_small_suite_passes_and_is_reproducible():
    kwargs = dict(seed=5, instances=4, max_n=7, problems=["mwis", "induced-forest", "induced-matching@mod2=0"],
                  merged_pairs=4, trials=20, compress_probes=3)
    first = cross_check_suite(**kwargs)
    assert first.passed, first.failures
    assert first.checks == 12
    assert first.compress_probes == 3
    assert cross_check_suite(**kwargs).model_dump_json() == first.model_dump_json()


def test_default_problems_skip_complement_aliases():
    names = default_problems()
    assert "induced-odd-cactus" in names and "induced-odd-cactus@mod2=0" in names
    assert "feedback-vertex-set" not in names
    assert "even-cycle-transversal" not in names


def test_brute_force_odd_cactus():
    cactus = PROBLEMS["induced-odd-cactus"]
    assert brute_force_solve(cycle_graph(5), cactus).weight == "5"
    assert brute_force_solve(cycle_graph(4), cactus).weight == "3"
    sol = brute_force_solve(cycle_graph(6), PROBLEMS["even-cycle-transversal"])
    assert sol.weight == "5"
    assert len(sol.complement) == 1


def test_odd_cactus_suite_passes():
    report = cross_check_suite(seed=3, instances=5, max_n=8,
                               problems=["induced-odd-cactus", "induced-odd-cactus@mod2=1"],
                               merged_pairs=5, trials=30, compress_probes=2)
    assert report.passed, report.failures
    assert report.checks == 10

import asyncio
from fractions import Fraction

import pytest

import solver
from decomposition import NodeKind, TreeDecomposition, make_nice
from graph_core import Graph, complete_graph, cycle_graph, path_graph, random_chordal_graph
from builders import clique_tree_chordal
from oracle import brute_force_solve, check_instance
from rep_family import FamilyEntry
from solver import DPSolver, extract_root, solve
from type_algebra import PROBLEMS, make_solution, parse_problem
from utils import InputError

FOREST = PROBLEMS["induced-forest"]


def c5_td() -> TreeDecomposition:
    return TreeDecomposition.build([(0, 1, 2), (0, 2, 3), (0, 3, 4)], [(0, 1), (1, 2)])


def path_td(n: int) -> TreeDecomposition:
    return TreeDecomposition.build([(i, i + 1) for i in range(n - 1)], [(i, i + 1) for i in range(n - 2)])


def c4_join_td() -> TreeDecomposition:
    return TreeDecomposition.build([(0, 2), (0, 1, 2), (0, 2, 3)], [(0, 1), (0, 2)], root=0)


def test_mwis_on_c5():
    result = solve(cycle_graph(5), c5_td(), PROBLEMS["mwis"], k=2)
    assert result.solution.weight == "2"
    assert len(result.solution.vertices) == 2
    assert all(result.solution.certificate.values())
    assert result.stats.ell == 2


def test_forest_on_k4():
    td = TreeDecomposition.build([(0, 1, 2, 3)], [])
    sol = solve(complete_graph(4), td, FOREST).solution
    assert sol.weight == "2"
    assert sol.feasible


def test_matching_on_p4_with_parity():
    g = path_graph(4)
    assert solve(g, path_td(4), PROBLEMS["induced-matching"]).solution.weight == "2"
    assert solve(g, path_td(4), parse_problem("induced-matching@mod2=0")).solution.weight == "2"
    odd = solve(g, path_td(4), parse_problem("induced-matching@mod2=1")).solution
    assert not odd.feasible
    assert odd.report()["status"] == "infeasible"


def test_feedback_vertex_set_on_c4():
    sol = solve(cycle_graph(4), c4_join_td(), PROBLEMS["feedback-vertex-set"]).solution
    assert sol.weight == "3"
    assert sol.complement_weight == "1"
    assert len(sol.complement) == 1
    report = sol.report()
    assert report["complement"][0] == sol.complement[0] + 1


def test_weighted_linear_forest():
    g = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)], weights=[Fraction(1, 2), 2, 2, 2])
    td = TreeDecomposition.build([(0, 1), (0, 2), (0, 3)], [(0, 1), (1, 2)])
    sol = solve(g, td, PROBLEMS["induced-linear-forest"]).solution
    assert sol.weight == "6"
    assert sol.vertices == [1, 2, 3]


def test_k_below_alpha_is_rejected():
    with pytest.raises(InputError):
        solve(cycle_graph(5), c5_td(), PROBLEMS["mwis"], k=1)


def test_invalid_decomposition_is_rejected():
    with pytest.raises(InputError):
        solve(path_graph(4), TreeDecomposition.build([(0, 1), (1, 2)], [(0, 1)]), FOREST)


def test_extract_root_and_make_solution():
    g = path_graph(3).with_weights([1, 5, 1])
    root = {(): [FamilyEntry((0, 2), Fraction(2)), FamilyEntry((1,), Fraction(5)), FamilyEntry((), Fraction(0))]}
    sol = extract_root(root, PROBLEMS["mwis"], g)
    assert sol.vertices == [1]
    assert sol.weight == "5"
    assert not extract_root({}, PROBLEMS["mwis"], g).feasible
    assert not make_solution(FOREST, g, None).feasible


def dp(g, td, spec, k=2) -> DPSolver:
    return DPSolver(g, make_nice(g, td), spec, k)


def test_introduce_never_closes_a_cycle():
    g = cycle_graph(4)
    engine = dp(g, c4_join_td(), FOREST)
    child = {(0, 2): [FamilyEntry.of(g, (0, 1, 2))]}
    table = engine.table_introduce(0, 3, child)
    assert (0, 2, 3) not in table
    assert table[(0, 2)] == child[(0, 2)]


def test_introduce_respects_ell():
    g = path_graph(3)
    engine = dp(g, path_td(3), FOREST, k=1)
    assert engine.ctx.ell == 2
    child = {(0, 1): [FamilyEntry.of(g, (0, 1))]}
    assert set(engine.table_introduce(0, 2, child)) == {(0, 1)}


def test_forget_merges_symmetric_pendants():
    g = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    engine = dp(g, TreeDecomposition.build([(0, 1), (0, 2), (0, 3)], [(0, 1), (1, 2)]), FOREST)
    child = {(0, 3): [FamilyEntry.of(g, (0, 1, 3)), FamilyEntry.of(g, (0, 2, 3))]}
    table = asyncio.run(engine.table_forget(0, 3, child))
    assert list(table) == [(0,)]
    assert len(table[(0,)]) == 1


def join_node(nice: TreeDecomposition, bag) -> int:
    return next(u for u in range(nice.node_count) if nice.tags[u].kind == NodeKind.JOIN and nice.bags[u] == bag)


def test_join_drops_unions_with_cycles():
    g = cycle_graph(4)
    engine = dp(g, c4_join_td(), FOREST)
    u = join_node(engine.ctx.td, (0, 2))
    left = {(0, 2): [FamilyEntry.of(g, (0, 1, 2))]}
    right = {(0, 2): [FamilyEntry.of(g, (0, 2, 3)), FamilyEntry.of(g, (0, 2))]}
    table = asyncio.run(engine.table_join(u, left, right))
    assert [e.vertices for e in table[(0, 2)]] == [(0, 1, 2)]


def test_join_rejects_mismatched_node():
    g = cycle_graph(4)
    engine = dp(g, c4_join_td(), FOREST)
    leaf = next(u for u in range(engine.ctx.td.node_count) if engine.ctx.td.tags[u].kind == NodeKind.LEAF)
    with pytest.raises(InputError):
        asyncio.run(engine.table_join(leaf, {}, {}))


def test_unchecked_join_is_caught(monkeypatch):
    monkeypatch.setattr(solver, "_join_passes", lambda g, union, t: True)
    assert check_instance(cycle_graph(4), c4_join_td(), FOREST) is not None


def test_debug_checks_pass_on_a_real_run():
    g = random_chordal_graph(12, seed=3)
    result = solve(g, clique_tree_chordal(g), parse_problem("induced-linear-forest"), debug=True)
    assert result.solution.weight == brute_force_solve(g, parse_problem("induced-linear-forest")).weight


@pytest.mark.parametrize("name", ["mwis", "induced-forest", "induced-matching@mod2=0"])
def test_threads_do_not_change_the_answer(name):
    g = random_chordal_graph(14, seed=8)
    td = clique_tree_chordal(g)
    spec = parse_problem(name)
    one = solve(g, td, spec, threads=1).report(timing=False)
    four = solve(g, td, spec, threads=4).report(timing=False)
    assert one == four
    assert "wall_time" not in one["stats"]


def test_merge_log_and_signature_dump():
    g = path_graph(6)
    log = []
    result = solve(g, path_td(6), FOREST, merge_log=log, dump_signatures=True)
    assert result.solution.weight == "6"
    assert result.signatures
    assert all(s["vertices"] for s in result.signatures if s["weight"] != "0")
    assert all(pair.kept != pair.dropped for pair in log)


def test_odd_cactus_keeps_an_odd_cycle():
    cactus = PROBLEMS["induced-odd-cactus"]
    result = solve(cycle_graph(5), c5_td(), cactus)
    assert result.solution.weight == "5"
    assert result.stats.t == 3
    assert all(result.solution.certificate.values())


def test_even_cycle_transversal_on_c4():
    sol = solve(cycle_graph(4), c4_join_td(), PROBLEMS["even-cycle-transversal"]).solution
    assert sol.weight == "3"
    assert sol.complement_weight == "1"


@pytest.mark.parametrize("seed", range(4))
def test_odd_cactus_matches_brute_force_on_chordal_graphs(seed):
    g = random_chordal_graph(9, seed=seed)
    td = clique_tree_chordal(g)
    for name in ("induced-odd-cactus", "induced-odd-cactus@mod2=0"):
        assert check_instance(g, td, parse_problem(name)) is None

import json

import pandas as pd
import pytest

from main import EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK, bench_instance, main, plateau_holds, run_bench
from decomposition import alpha_of_decomposition, validate


@pytest.fixture
def c5_files(tmp_path):
    graph = tmp_path / "c5.gr"
    graph.write_text("p tw 5 5\n1 2\n2 3\n3 4\n4 5\n1 5\n")
    td = tmp_path / "c5.td"
    td.write_text("s td 3 3 5\nb 1 1 2 3\nb 2 1 3 4\nb 3 1 4 5\n1 2\n2 3\n")
    return graph, td


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


def test_solve_mwis_on_c5(capsys, c5_files):
    graph, td = c5_files
    code, out = run(capsys, "solve", "--graph", graph, "--td", td, "--problem", "mwis", "--k", "2")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["weight"] == "2"
    assert payload["status"] == "solved"
    assert all(1 <= v <= 5 for v in payload["vertices"])


def test_solve_k_below_alpha_fails(capsys, c5_files):
    graph, td = c5_files
    code, _ = run(capsys, "solve", "--graph", graph, "--td", td, "--problem", "mwis", "--k", "1")
    assert code == EXIT_ERROR


def test_solve_forest_on_k4_single_bag(capsys, tmp_path):
    graph = tmp_path / "k4.gr"
    graph.write_text("p tw 4 6\n1 2\n1 3\n1 4\n2 3\n2 4\n3 4\n")
    td = tmp_path / "k4.td"
    td.write_text("s td 1 4 4\nb 1 1 2 3 4\n")
    code, out = run(capsys, "solve", "--graph", graph, "--td", td, "--problem", "induced-forest")
    assert code == EXIT_OK
    assert json.loads(out)["weight"] == "2"


def test_solve_parity_variants(capsys, tmp_path):
    graph = tmp_path / "p4.gr"
    graph.write_text("p tw 4 3\n1 2\n2 3\n3 4\n")
    code, out = run(capsys, "solve", "--graph", graph, "--problem", "induced-matching@mod2=0")
    assert code == EXIT_OK
    assert json.loads(out)["weight"] == "2"
    code, out = run(capsys, "solve", "--graph", graph, "--problem", "induced-matching@mod2=1")
    assert code == EXIT_NEGATIVE
    assert json.loads(out)["status"] == "infeasible"


def test_solve_with_weights_and_complement(capsys, tmp_path):
    graph = tmp_path / "c4.gr"
    graph.write_text("p tw 4 4\n1 2\n2 3\n3 4\n1 4\n")
    weights = tmp_path / "c4.weights"
    weights.write_text("1 1/2\n")
    out_file = tmp_path / "sol.json"
    code, _ = run(capsys, "solve", "--graph", graph, "--weights", weights, "--problem", "feedback-vertex-set",
                  "--out", out_file)
    assert code == EXIT_OK
    payload = json.loads(out_file.read_text())
    assert payload["weight"] == "3"
    assert payload["complement"] == [1]
    assert payload["complement_weight"] == "1/2"


def test_threads_do_not_change_output(capsys, tmp_path):
    graph = tmp_path / "g.gr"
    assert main(["gen", "chordal", "--n", "16", "--seed", "3", "--out", str(graph)]) == EXIT_OK
    capsys.readouterr()
    outputs = []
    for threads in (1, 4):
        code, out = run(capsys, "solve", "--graph", graph, "--problem", "induced-forest", "--threads", threads,
                        "--omit-timing")
        assert code == EXIT_OK
        outputs.append(out)
    assert outputs[0] == outputs[1]
    assert "wall_time" not in json.loads(outputs[0])["stats"]


def test_validate(capsys, tmp_path):
    graph = tmp_path / "p3.gr"
    graph.write_text("p tw 3 2\n1 2\n2 3\n")
    td = tmp_path / "p3.td"
    td.write_text("s td 2 2 3\nb 1 1 2\nb 2 2 3\n1 2\n")
    code, out = run(capsys, "validate", "--graph", graph, "--td", td)
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["valid"] and report["width"] == 1 and report["alpha"] == 1
    bad = tmp_path / "bad.td"
    bad.write_text("s td 1 2 3\nb 1 1 2\n")
    code, out = run(capsys, "validate", "--graph", graph, "--td", bad)
    assert code == EXIT_NEGATIVE
    assert not json.loads(out)["valid"]


def test_gen_then_decompose(capsys, tmp_path):
    graph = tmp_path / "chordal.gr"
    td = tmp_path / "chordal.td"
    assert main(["gen", "chordal", "--n", "30", "--seed", "7", "--weighted", "--out", str(graph)]) == EXIT_OK
    capsys.readouterr()
    code, out = run(capsys, "decompose", "--graph", graph, "--builder", "clique-tree", "--out", td)
    assert code == EXIT_OK
    assert json.loads(out)["alpha"] == 1
    assert "c alpha 1" in td.read_text()
    code, out = run(capsys, "validate", "--graph", graph, "--td", td, "--weights", f"{graph}.weights")
    assert code == EXIT_OK


def test_gen_interval_writes_intervals(capsys, tmp_path):
    graph = tmp_path / "int.gr"
    code, out = run(capsys, "gen", "interval", "--n", "40", "--seed", "1", "--out", graph)
    assert code == EXIT_OK
    assert json.loads(out)["intervals"] == f"{graph}.intervals"
    td = tmp_path / "int.td"
    code, _ = run(capsys, "decompose", "--graph", graph, "--builder", "interval", "--intervals",
                  f"{graph}.intervals", "--out", td)
    assert code == EXIT_OK


def test_malformed_graph_and_unknown_command(capsys, tmp_path):
    graph = tmp_path / "bad.gr"
    graph.write_text("p tw 2 1\n1 3\n")
    assert main(["solve", "--graph", str(graph), "--problem", "mwis"]) == EXIT_ERROR
    assert main(["frobnicate"]) == EXIT_ERROR
    assert main(["solve", "--graph", str(graph), "--problem", "no-such-problem"]) == EXIT_ERROR


def test_oracle_command(capsys, tmp_path):
    code, out = run(capsys, "oracle", "--seed", 2, "--instances", 2, "--max-n", 6, "--problems", "mwis",
                    "--merged-pairs", 2, "--trials", 10, "--compress-probes", 1)
    assert code == EXIT_OK
    summary = json.loads(out.splitlines()[0])
    assert summary["passed"] is True
    assert summary["checks"] == 2


def test_config_file_supplies_defaults(capsys, tmp_path):
    conf = tmp_path / "config.json"
    conf.write_text(json.dumps({"oracle": {"instances": 1, "max_n": 5, "merged_pairs": 0, "compress_probes": 0}}))
    code, out = run(capsys, "--conf", conf, "oracle", "--problems", "induced-forest")
    assert code == EXIT_OK
    assert json.loads(out.splitlines()[0])["checks"] == 1


@pytest.mark.parametrize("sizes, holds", [
    ([1, 2, 3], True),
    ([1, 2, 3, 3, 4, 4, 4, 5], True),
    ([1, 2, 2, 3, 8, 16, 32, 64], False),
])
def test_plateau_holds(sizes, holds):
    assert plateau_holds(sizes) is holds


def test_bench_instance_bounds_alpha():
    for seed in range(4):
        g, td = bench_instance(25, 2, seed)
        assert validate(g, td).valid
        assert alpha_of_decomposition(g, td) <= 2


def test_bench_writes_csv(capsys, tmp_path):
    out = tmp_path / "bench.csv"
    summary = tmp_path / "summary.json"
    code, _ = run(capsys, "bench", "--sizes", 6, 8, "--ks", 1, "--problem", "mwis", "--out", out,
                  "--summary", summary)
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert {"n", "k", "wall_time", "max_family_size", "distinct_signatures"} <= set(frame.columns)
    assert len(frame) == 2
    assert json.loads(summary.read_text())["rows"] == 2


def test_run_bench_is_seeded():
    first, _ = run_bench([6, 7], [1], "induced-forest", seed=4)
    second, _ = run_bench([6, 7], [1], "induced-forest", seed=4)
    assert list(first["weight"]) == list(second["weight"])

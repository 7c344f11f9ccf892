import json
import math
import time
from fractions import Fraction
from pathlib import Path

import pytest

from builders import (IntervalSeparatorFinder, build_from_separators, clique_tree_chordal, interval_graph,
                      random_intervals)
from decomposition import validate
from graph_core import random_chordal_graph
from oracle import cross_check_suite, random_instance
from solver import solve
from type_algebra import parse_problem
from utils import load_config

pytestmark = pytest.mark.slow

CONF = load_config(str(Path(__file__).resolve().parent.parent / "conf" / "config.json"))["acceptance"]
BETA = Fraction(2, 3)


def test_oracle_equivalence_and_merged_pair_soundness():
    start = time.perf_counter()
    report = cross_check_suite(seed=CONF["seed"], instances=CONF["oracle_instances"], max_n=CONF["oracle_max_n"],
                               problems=CONF["oracle_problems"], merged_pairs=CONF["merged_pairs"],
                               trials=CONF["trials"], context_size=CONF["context_size"],
                               compress_probes=CONF["compress_probes"])
    elapsed = time.perf_counter() - start
    assert report.passed, report.failures[:5]
    assert report.checks == CONF["oracle_instances"] * len(CONF["oracle_problems"])
    assert report.merged_pairs_tested == min(CONF["merged_pairs"], report.merged_pairs)
    assert report.merged_pairs_tested >= CONF["merged_pairs"]
    assert elapsed < CONF["oracle_seconds"]


def test_odd_cactus_oracle_equivalence():
    report = cross_check_suite(seed=CONF["seed"] + 1, instances=CONF["odd_cactus_instances"],
                               max_n=CONF["odd_cactus_max_n"],
                               problems=["induced-odd-cactus", "induced-odd-cactus@mod2=0"],
                               merged_pairs=CONF["merged_pairs"] // 4, trials=CONF["trials"],
                               context_size=CONF["context_size"], compress_probes=CONF["compress_probes"] // 4)
    assert report.passed, report.failures[:5]


def test_chordal_pipeline_has_alpha_one():
    for seed in range(CONF["chordal_graphs"]):
        n = 10 + seed * (CONF["chordal_max_n"] - 10) // max(1, CONF["chordal_graphs"] - 1)
        g = random_chordal_graph(n, seed=seed)
        report = validate(g, clique_tree_chordal(g))
        assert report.valid, report.violations[:3]
        assert report.alpha == 1


def test_interval_separator_builder_bounds_and_time():
    for seed in range(CONF["interval_graphs"]):
        n = 20 + seed * (CONF["interval_max_n"] - 20) // max(1, CONF["interval_graphs"] - 1)
        intervals = random_intervals(n, seed=seed, span=max(1, n // 2))
        g = interval_graph(intervals)
        start = time.perf_counter()
        td = build_from_separators(g, IntervalSeparatorFinder(intervals), BETA)
        elapsed = time.perf_counter() - start
        assert elapsed < CONF["separator_seconds"], f"n={n} took {elapsed:.2f}s"
        report = validate(g, td)
        # validate also checks each bag's recorded clique-stack bound
        assert report.valid, report.violations[:3]
        assert report.alpha <= math.ceil(math.log(n, 1.5)) + 1


def test_thread_count_does_not_change_output():
    families = ("gnp-0.2", "gnp-0.4", "chordal", "interval")
    for i in range(CONF["determinism_instances"]):
        g, td, _ = random_instance(families[i % len(families)], 8 + i % 5, seed=i)
        spec = parse_problem(("induced-forest", "induced-linear-forest", "mwis@mod2=1")[i % 3])
        outputs = [json.dumps(solve(g, td, spec, threads=threads, dump_signatures=True).report(timing=False))
                   for threads in (1, CONF["determinism_threads"])]
        assert outputs[0] == outputs[1]

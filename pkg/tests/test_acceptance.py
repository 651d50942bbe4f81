"""Acceptance criteria, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line per
criterion. The randomized suite is built once per session and shared by the
criteria that quantify over it.
"""

import random
import shutil
import time
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import pytest

from rlejoin.baselines import brute_force_join, rle_columns
from rlejoin.factors import Factor
from rlejoin.fixtures import (
    make_redundancy_fixture,
    random_cyclic_instance,
    random_tree_instance,
)
from rlejoin.graphs import (
    agm_bound_holds,
    build_junction_tree,
    check_rip,
    fractional_edge_cover,
    min_fill_in,
)
from rlejoin.inference import potential_join
from rlejoin.query import JoinQuery
from rlejoin.relation import Dictionary
from rlejoin.runner import execute, run_join
from rlejoin.summary import (
    JoinSummary,
    ListSink,
    SummaryGroup,
    coalesce,
    desummarize,
    join_size,
    load,
    store,
)

from conftest import CHAIN3_DIR, desummarized_multiset

SEED = 20240817


def _passed(number: int, message: str) -> None:
    print(f"[criterion {number:02d}] PASS  {message}")


@dataclass
class SuiteInstance:
    query: object
    relations: dict
    execution: object
    brute: Counter
    bag: Counter
    orphans_injected: bool
    duplicated: bool


def _build_suite(count: int = 200) -> tuple[list[SuiteInstance], float]:
    rng = random.Random(SEED)
    instances = []
    start = time.perf_counter()
    for i in range(count):
        shape = ("chain", "star", "binary")[i % 3]
        inject = i % 3 == 0
        duplicate = i % 3 == 1
        query, relations = random_tree_instance(
            rng,
            shape=shape,
            max_tables=5,
            max_rows=50,
            max_values=8,
            inject_orphans=inject,
            duplicate_rows=duplicate,
        )
        execution = execute(query, relations)
        brute = Counter(brute_force_join(query, relations).counts)
        bag = desummarized_multiset(query, execution.summary)
        instances.append(
            SuiteInstance(query, relations, execution, brute, bag, inject, duplicate)
        )
    return instances, time.perf_counter() - start


@pytest.fixture(scope="session")
def suite():
    return _build_suite()


def test_criterion_01_oracle_multiset_equivalence(suite):
    instances, build_seconds = suite
    start = time.perf_counter()
    assert len(instances) >= 200
    assert sum(1 for inst in instances if inst.orphans_injected) >= 0.3 * len(instances)
    assert sum(1 for inst in instances if inst.duplicated) >= 0.3 * len(instances)
    for inst in instances:
        assert all(r.row_count <= 50 for r in inst.relations.values())
        assert inst.bag == inst.brute
    elapsed = build_seconds + (time.perf_counter() - start)
    assert elapsed <= 60.0, f"suite took {elapsed:.1f}s, budget is 60s"
    _passed(1, f"{len(instances)} randomized instances match brute force "
               f"exactly in {elapsed:.1f}s")


def test_criterion_02_cyclic_correctness():
    rng = random.Random(SEED + 1)
    checked = 0
    for i in range(30):
        cycle = 3 if i % 2 == 0 else 4
        query, relations = random_cyclic_instance(
            rng, cycle_length=cycle, max_rows=30
        )
        execution = execute(query, relations)
        assert not execution.plan.is_tree
        assert check_rip(execution.plan.junction_tree)
        bag = desummarized_multiset(query, execution.summary)
        assert bag == Counter(brute_force_join(query, relations).counts)
        checked += 1
    _passed(2, f"{checked} triangle/4-cycle instances match brute force exactly")


def test_criterion_03_worked_four_column_desummarization():
    dicts = {
        "A": Dictionary("A", ["a3"]),
        "B": Dictionary("B", ["b3", "b4"]),
        "C": Dictionary("C", ["c2", "c3", "c4"]),
        "D": Dictionary("D", ["d2", "d3", "d4"]),
    }

    def runs(var, pairs):
        d = dicts[var]
        return [((d.code(v),), f) for v, f in pairs]

    summary = JoinSummary(
        [
            SummaryGroup(("A",), runs("A", [("a3", 32)])),
            SummaryGroup(("B",), runs("B", [("b3", 8), ("b4", 24)])),
            SummaryGroup(("C",), runs("C", [("c2", 8), ("c3", 16), ("c4", 8)])),
            SummaryGroup(("D",), runs("D", [("d2", 8), ("d3", 16), ("d4", 8)])),
        ],
        dicts,
    )
    assert join_size(summary) == 32
    assert all(g.total() == 32 for g in summary.groups)
    sink = ListSink()
    assert desummarize(summary, sink) == 32
    assert sink.rows[0:8] == [("a3", "b3", "c2", "d2")] * 8
    assert sink.rows[8:24] == [("a3", "b4", "c3", "d3")] * 16
    assert sink.rows[24:32] == [("a3", "b4", "c4", "d4")] * 8
    _passed(3, "four-column summary expands to 32 rows in 8/16/8 blocks")


def test_criterion_04_potential_join_worked_example():
    fab = Factor(("A", "B"), {(0, 0): 5})
    fbc = Factor(("B", "C"), {(0, 0): 10})
    fca = Factor(("A", "C"), {(0, 0): 20})
    joint = potential_join(("A", "B", "C"), [fab, fbc, fca])
    assert joint.entries == {(0, 0, 0): 1000}
    _passed(4, "potential frequencies 5, 10, 20 combine to a joint 1000")


def _graph(edges):
    from test_graphs import graph_from_edges

    return graph_from_edges(edges)


def test_criterion_05_fractional_edge_cover():
    triangle = _graph([("A1", "A2"), ("A2", "A3"), ("A1", "A3")])
    cover = fractional_edge_cover(triangle, [9, 9, 9])
    assert cover.rho == Fraction(3, 2)
    assert all(abs(float(w) - 0.5) < 1e-9 for w in cover.weights)

    chain = _graph([("A", "B"), ("B", "C"), ("C", "D")])
    cover = fractional_edge_cover(chain, [4, 5, 4])
    assert cover.weights == (Fraction(1), Fraction(0), Fraction(1))
    assert cover.rho == Fraction(2)

    single = _graph([("A", "B")])
    assert fractional_edge_cover(single, [7]).rho == Fraction(1)
    _passed(5, "triangle rho=1.5 with half weights, chain rho=2 with (1,0,1), "
               "single table rho=1")


def test_criterion_06_junction_tree_properties():
    from test_graphs import (
        _brute_maximal_cliques,
        _graph_with_fills,
        _random_connected_graph,
    )

    rng = random.Random(SEED + 2)
    for _ in range(100):
        g = _random_connected_graph(rng, rng.randint(2, 8))
        _, fills, maxcliques = min_fill_in(g)
        jt = build_junction_tree(maxcliques)
        assert check_rip(jt)

        chordal = _graph_with_fills(g, fills)
        expected = _brute_maximal_cliques(chordal)
        assert sorted(sorted(c) for c in maxcliques) == sorted(
            sorted(c) for c in expected
        )

        _, refills, _ = min_fill_in(chordal)
        assert refills == []
    _passed(6, "100 random graphs: R.I.P holds, maxcliques verified maximal, "
               "chordal inputs triangulate with zero fill")


def test_criterion_07_consistency_invariants(suite):
    instances, _ = suite
    for inst in instances:
        summary = inst.execution.summary
        generator = inst.execution.generator
        totals = {g.total() for g in summary.groups}
        assert totals == {generator.join_size()}
        assert generator.join_size() == sum(inst.brute.values())
        run_counts = [len(g.runs) for g in summary.groups]
        assert run_counts == sorted(run_counts)  # parents fan out, never merge
        for group in summary.groups:
            assert all(freq >= 1 for _, freq in group.runs)
        for band in generator.bands:
            for psi in band:
                for rows in psi.entries.values():
                    assert all(b >= 1 and f >= 1 for _, b, f in rows)
        cover = inst.execution.cover
        assert agm_bound_holds(
            inst.execution.distinct_table_sizes,
            cover.weights,
            inst.execution.distinct_result_size,
        )
        row_product = 1
        for rel in (
            inst.relations[r.alias] for r in inst.query.table_refs
        ):
            row_product *= rel.row_count
        assert generator.join_size() <= row_product
    _passed(7, "totals, positivity and size bounds hold on every suite instance")


def test_criterion_08_no_wasted_work(suite):
    instances, _ = suite
    for inst in instances:
        stats = inst.execution.gen_stats
        assert stats.rows_visited == stats.runs_emitted
        assert stats.runs_emitted == sum(
            len(g.runs) for g in inst.execution.summary.groups
        )
    _passed(8, "generation visits exactly one generator row per emitted run")


def test_criterion_09_desk_scale_compression(tmp_path):
    start = time.perf_counter()
    query_path = make_redundancy_fixture(tmp_path / "fixture", seed=SEED)

    t0 = time.perf_counter()
    store_report = run_join(query_path, "store", out_dir=tmp_path / "stored")
    summarize_store_seconds = time.perf_counter() - t0

    t0 = time.perf_counter()
    mat_report = run_join(query_path, "materialize", out_dir=tmp_path / "flat")
    materialize_seconds = time.perf_counter() - t0

    size = store_report.stats["join-size"]
    summary_bytes = store_report.stats["summary-bytes"]
    flat_bytes = mat_report.stats["flat-bytes"]
    assert size >= 10_000_000
    assert summary_bytes <= 0.01 * flat_bytes
    assert summarize_store_seconds < materialize_seconds
    elapsed = time.perf_counter() - start
    assert elapsed <= 120.0
    _passed(9, f"join of {size} rows: summary {summary_bytes}B vs flat "
               f"{flat_bytes}B ({summary_bytes / flat_bytes:.2%}); "
               f"store {summarize_store_seconds:.2f}s < "
               f"materialize {materialize_seconds:.2f}s")


def test_criterion_10_round_trips(suite, tmp_path):
    instances, _ = suite

    # (a) store -> load -> store is byte identical, on every suite instance
    for i, inst in enumerate(instances):
        first = tmp_path / f"s{i}-a"
        second = tmp_path / f"s{i}-b"
        store(inst.execution.summary, first)
        store(load(first), second)
        for p in sorted(first.iterdir()):
            assert p.read_bytes() == (second / p.name).read_bytes()
        shutil.rmtree(first)
        shutil.rmtree(second)

    # (b) materialize and store+load-desummarize write identical result files
    work = tmp_path / "chain3"
    work.mkdir()
    for f in CHAIN3_DIR.iterdir():
        shutil.copy(f, work / f.name)
    run_join(work / "chain3.q", "store", out_dir=work / "via-disk")
    run_join(work / "chain3.q", "load-desummarize", out_dir=work / "via-disk")
    run_join(work / "chain3.q", "materialize", out_dir=work / "direct")
    assert (work / "via-disk" / "result.csv").read_bytes() == (
        work / "direct" / "result.csv"
    ).read_bytes()

    # (c) coalesced summaries equal the sort-then-RLE oracle, run for run
    tree_checked = 0
    for inst in instances:
        if not inst.execution.plan.is_tree:
            continue
        merged = coalesce(inst.execution.summary)
        order = merged.column_variables()
        rows = (
            brute_force_join(inst.query, inst.relations)
            .project(order)
            .sorted_rows()
        )
        expected = rle_columns(rows, [len(g.variables) for g in merged.groups])
        got = [merged.decoded_runs(i) for i in range(len(merged.groups))]
        assert got == expected
        tree_checked += 1
    assert tree_checked > 0
    _passed(10, f"byte-identical store round trips ({len(instances)}), identical "
                f"result files across modes, coalesced RLE matches the oracle "
                f"on {tree_checked} tree instances")


def test_criterion_11_early_projection():
    rng = random.Random(SEED + 3)
    for i in range(50):
        query, relations = random_tree_instance(
            rng, max_tables=5, inject_orphans=i % 2 == 0
        )
        variables = list(query.variables)
        rng.shuffle(variables)
        keep = sorted(variables[: rng.randint(1, len(variables) - 1)])
        projected = JoinQuery(query.table_refs, tuple(keep), None)
        execution = execute(projected, relations)
        if len(keep) < len(variables):
            assert execution.plan.early_order  # projection actually pruned
        bag = desummarized_multiset(projected, execution.summary)
        assert bag == Counter(brute_force_join(projected, relations).counts)
    _passed(11, "50 random proper projections match the bag-projected oracle")

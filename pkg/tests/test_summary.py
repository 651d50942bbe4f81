
import pytest

from rlejoin.errors import InconsistentSummaryError, SummaryFormatError
from rlejoin.fixtures import random_tree_instance
from rlejoin.relation import Dictionary
from rlejoin.runner import execute
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

from conftest import desummarized_multiset, oracle_multiset


def figure2_summary() -> JoinSummary:
    """The worked four-column summary: 32 rows in blocks of 8/16/8."""
    dicts = {
        "A": Dictionary("A", ["a3"]),
        "B": Dictionary("B", ["b3", "b4"]),
        "C": Dictionary("C", ["c2", "c3", "c4"]),
        "D": Dictionary("D", ["d2", "d3", "d4"]),
    }

    def runs(var, pairs):
        d = dicts[var]
        return [((d.code(v),), f) for v, f in pairs]

    return JoinSummary(
        [
            SummaryGroup(("A",), runs("A", [("a3", 32)])),
            SummaryGroup(("B",), runs("B", [("b3", 8), ("b4", 24)])),
            SummaryGroup(("C",), runs("C", [("c2", 8), ("c3", 16), ("c4", 8)])),
            SummaryGroup(("D",), runs("D", [("d2", 8), ("d3", 16), ("d4", 8)])),
        ],
        dicts,
    )


class TestWorkedExample:
    def test_desummarizes_to_three_blocks(self):
        summary = figure2_summary()
        sink = ListSink()
        assert desummarize(summary, sink) == 32
        rows = sink.rows
        assert rows[0:8] == [("a3", "b3", "c2", "d2")] * 8
        assert rows[8:24] == [("a3", "b4", "c3", "d3")] * 16
        assert rows[24:32] == [("a3", "b4", "c4", "d4")] * 8

    def test_join_size_is_32_with_equal_totals(self):
        summary = figure2_summary()
        assert join_size(summary) == 32
        assert all(g.total() == 32 for g in summary.groups)

    def test_unequal_totals_are_rejected(self):
        summary = figure2_summary()
        summary.groups[2].runs[0] = (summary.groups[2].runs[0][0], 9)
        with pytest.raises(InconsistentSummaryError):
            join_size(summary)


class TestChain3Generation:
    def test_exact_runs(self, chain3_execution):
        s = chain3_execution.summary
        assert [g.variables for g in s.groups] == [("A",), ("B",), ("C",), ("D",)]
        assert s.decoded_runs(0) == [(("a1",), 8), (("a2",), 6)]
        assert s.decoded_runs(1) == [(("b1",), 8), (("b1",), 4), (("b2",), 2)]
        assert s.decoded_runs(2) == [
            (("c1",), 4), (("c2",), 4), (("c1",), 2), (("c2",), 2), (("c1",), 2),
        ]
        assert s.decoded_runs(3) == [
            (("d1",), 4), (("d1",), 4), (("d1",), 2), (("d1",), 2), (("d1",), 2),
        ]
        assert join_size(s) == 14

    def test_run_counts_never_decrease_with_depth(self, chain3_execution):
        counts = [len(g.runs) for g in chain3_execution.summary.groups]
        assert counts == sorted(counts)

    def test_no_wasted_work_counter(self, chain3_execution):
        stats = chain3_execution.gen_stats
        assert stats.rows_visited == stats.runs_emitted > 0


class TestCoalesce:
    def test_d_column_merges_to_one_run(self, chain3_execution):
        merged = coalesce(chain3_execution.summary)
        assert merged.decoded_runs(3) == [(("d1",), 14)]

    def test_c_column_unchanged(self, chain3_execution):
        merged = coalesce(chain3_execution.summary)
        assert merged.decoded_runs(2) == chain3_execution.summary.decoded_runs(2)

    def test_idempotent(self, chain3_execution):
        once = coalesce(chain3_execution.summary)
        twice = coalesce(once)
        assert [g.runs for g in once.groups] == [g.runs for g in twice.groups]

    def test_desummarize_unchanged(self, chain3_execution):
        a, b = ListSink(), ListSink()
        desummarize(chain3_execution.summary, a)
        desummarize(coalesce(chain3_execution.summary), b)
        assert a.rows == b.rows


class TestStoreLoad:
    def test_round_trip_is_byte_identical(self, tmp_path, chain3_execution):
        first = tmp_path / "one"
        second = tmp_path / "two"
        store(chain3_execution.summary, first)
        reloaded = load(first)
        store(reloaded, second)
        for name in ("manifest.txt", "col_0.csv", "col_1.csv", "col_2.csv", "col_3.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_chain3_root_file_bytes(self, tmp_path, chain3_execution):
        store(chain3_execution.summary, tmp_path)
        assert (tmp_path / "col_0.csv").read_text() == "a1,8\na2,6\n"

    def test_manifest_size_mismatch_detected(self, tmp_path, chain3_execution):
        store(chain3_execution.summary, tmp_path)
        manifest = (tmp_path / "manifest.txt").read_text()
        (tmp_path / "manifest.txt").write_text(
            manifest.replace("join-size: 14", "join-size: 15")
        )
        with pytest.raises(SummaryFormatError):
            load(tmp_path)

    def test_run_count_mismatch_detected(self, tmp_path, chain3_execution):
        store(chain3_execution.summary, tmp_path)
        manifest = (tmp_path / "manifest.txt").read_text()
        (tmp_path / "manifest.txt").write_text(
            manifest.replace("runs-0: 2", "runs-0: 3")
        )
        with pytest.raises(SummaryFormatError):
            load(tmp_path)

    def test_missing_manifest_detected(self, tmp_path):
        with pytest.raises(SummaryFormatError):
            load(tmp_path)

    def test_repeated_variable_across_groups_detected(self, tmp_path, chain3_execution):
        store(chain3_execution.summary, tmp_path)
        manifest = (tmp_path / "manifest.txt").read_text()
        (tmp_path / "manifest.txt").write_text(
            manifest.replace("group-1: B", "group-1: A")
        )
        with pytest.raises(SummaryFormatError):
            load(tmp_path)

    def test_zero_frequency_rejected(self, tmp_path, chain3_execution):
        store(chain3_execution.summary, tmp_path)
        (tmp_path / "col_0.csv").write_text("a1,8\na2,0\n")
        with pytest.raises(SummaryFormatError):
            load(tmp_path)

    def test_round_trip_on_random_instances(self, tmp_path, rng):
        for i in range(8):
            query, relations = random_tree_instance(rng, inject_orphans=True)
            summary = execute(query, relations).summary
            one = tmp_path / f"r{i}-a"
            two = tmp_path / f"r{i}-b"
            store(summary, one)
            store(load(one), two)
            for p in sorted(one.iterdir()):
                assert p.read_bytes() == (two / p.name).read_bytes()


class TestDesummarize:
    def test_streams_in_blocks(self, chain3_execution):
        calls = []
        total = desummarize(
            chain3_execution.summary, lambda row, n: calls.append((row, n))
        )
        assert total == 14
        assert sum(n for _, n in calls) == 14
        # lockstep chunks: one call per distinct row block of the sorted result
        assert calls == [
            (("a1", "b1", "c1", "d1"), 4),
            (("a1", "b1", "c2", "d1"), 4),
            (("a2", "b1", "c1", "d1"), 2),
            (("a2", "b1", "c2", "d1"), 2),
            (("a2", "b2", "c1", "d1"), 2),
        ]

    def test_empty_summary(self):
        empty = JoinSummary(
            [SummaryGroup(("X",), [])], {"X": Dictionary("X", [])}
        )
        sink = ListSink()
        assert desummarize(empty, sink) == 0
        assert sink.rows == []

    def test_empty_summary_stores_manifest_only(self, tmp_path):
        empty = JoinSummary(
            [SummaryGroup(("X",), []), SummaryGroup(("Y",), [])],
            {"X": Dictionary("X", []), "Y": Dictionary("Y", [])},
        )
        store(empty, tmp_path)
        run_files = sorted(tmp_path.glob("col_*.csv"))
        assert [p.stat().st_size for p in run_files] == [0, 0]
        back = load(tmp_path)
        assert join_size(back) == 0

    def test_multiset_matches_oracle(self, rng):
        for _ in range(10):
            query, relations = random_tree_instance(rng, duplicate_rows=True)
            ex = execute(query, relations)
            assert desummarized_multiset(query, ex.summary) == oracle_multiset(
                query, relations
            )

    def test_tree_output_is_the_sorted_join_row_for_row(self, rng):
        # Full-projection tree queries expand to exactly the brute-force
        # result sorted in root-first band column order.
        from rlejoin.baselines import brute_force_join

        for _ in range(10):
            query, relations = random_tree_instance(rng, inject_orphans=True)
            ex = execute(query, relations)
            assert ex.plan.is_tree
            sink = ListSink()
            desummarize(ex.summary, sink)
            order = ex.summary.column_variables()
            expected = (
                brute_force_join(query, relations).project(order).sorted_rows()
            )
            assert sink.rows == expected


def test_generation_stats_count_equal(rng):
    for _ in range(10):
        query, relations = random_tree_instance(rng, inject_orphans=True)
        ex = execute(query, relations)
        assert ex.gen_stats.rows_visited == ex.gen_stats.runs_emitted
        assert ex.gen_stats.runs_emitted == sum(
            len(g.runs) for g in ex.summary.groups
        )

"""Pipeline wiring: parse, learn, plan, infer, generate, store, desummarize.

Single-threaded throughout; one query per invocation. Each phase is timed
with a monotonic clock and reported in milliseconds. The CLI in cli.py is a
thin argument-parsing front end over the functions here.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import baselines, cache, fixtures
from .errors import SummaryFormatError
from .factors import learn_factor, variable_dictionaries
from .graphs import agm_bound_holds, fractional_edge_cover, plan_elimination
from .inference import build_generator
from .query import JoinQuery, build_join_graph, parse_query_file
from .relation import load_csv
from .summary import (
    CsvSink,
    GenerationStats,
    coalesce,
    desummarize,
    generate_summary,
    join_size,
    load,
    store,
    stored_bytes,
)

MODES = ("summarize", "materialize", "store", "load-desummarize")


@dataclass
class RunReport:
    query_path: str
    mode: str
    timings_ms: dict[str, float] = field(default_factory=dict)
    stats: dict[str, object] = field(default_factory=dict)

    def text(self) -> str:
        lines = [f"query        {self.query_path}", f"mode         {self.mode}"]
        width = max((len(k) for k in self.stats), default=0)
        for key, value in self.stats.items():
            lines.append(f"{key.ljust(max(width, 12))} {value}")
        if self.timings_ms:
            parts = [f"{k} {v:.3f}" for k, v in self.timings_ms.items()]
            lines.append("timings (ms): " + "  ".join(parts))
        return "\n".join(lines)

    def machine_lines(self) -> list[str]:
        lines = [f"query: {self.query_path}", f"mode: {self.mode}"]
        for key, value in self.stats.items():
            lines.append(f"{key}: {value}")
        for key, value in self.timings_ms.items():
            lines.append(f"time-{key}-ms: {value:.3f}")
        return lines


class _Phases:
    def __init__(self):
        self.timings: dict[str, float] = {}

    def run(self, name, fn):
        start = time.perf_counter()
        result = fn()
        self.timings[name] = (time.perf_counter() - start) * 1000.0
        return result


def load_relations(query: JoinQuery, base_dir, header: bool = True):
    """One Relation per alias; the same file is loaded once and shared."""
    base = Path(base_dir)
    by_path = {}
    relations = {}
    for ref in query.table_refs:
        path = (base / ref.path).resolve()
        if path not in by_path:
            by_path[path] = load_csv(path, header=header, name=ref.alias)
        relations[ref.alias] = by_path[path]
    return relations


@dataclass
class Execution:
    query: JoinQuery
    relations: dict
    graph: object
    plan: object
    cover: object
    generator: object
    summary: object
    gen_stats: GenerationStats
    timings: dict[str, float]
    distinct_table_sizes: list[int] = field(default_factory=list)
    distinct_result_size: int = 0

    def largest_table(self) -> int:
        return max((r.row_count for r in self.relations.values()), default=0)


def execute(
    query: JoinQuery,
    relations: dict,
    base_dir=None,
    cache_dir=None,
    coalesce_summary: bool = False,
) -> Execution:
    phases = _Phases()

    def learn():
        var_dicts = variable_dictionaries(query, relations)
        factors = []
        for ref in query.table_refs:
            if cache_dir is not None:
                csv_path = (Path(base_dir) / ref.path).resolve()
                factors.append(
                    cache.load_or_learn(
                        csv_path, relations[ref.alias], ref.bindings, var_dicts, cache_dir
                    )
                )
            else:
                factors.append(
                    learn_factor(relations[ref.alias], ref.bindings, var_dicts)
                )
        return var_dicts, factors

    var_dicts, factors = phases.run("learn", learn)

    def plan_all():
        graph = build_join_graph(query)
        plan = plan_elimination(graph, query.projection, query.root_hint)
        sizes = [relations[ref.alias].row_count for ref in query.table_refs]
        cover = fractional_edge_cover(graph, sizes)
        return graph, plan, cover

    graph, plan, cover = phases.run("plan", plan_all)

    jt_timings: dict[str, float] = {}
    generator = phases.run(
        "generator-build",
        lambda: build_generator(plan, factors, var_dicts, timings=jt_timings),
    )
    phases.timings["potential-join"] = jt_timings.get("potential-join", 0.0)
    phases.timings["generator-build"] -= phases.timings["potential-join"]

    gen_stats = GenerationStats()
    summary = phases.run(
        "generate", lambda: generate_summary(generator, gen_stats)
    )

    size = join_size(summary)
    assert size == generator.join_size(), "summary total disagrees with root marginal"

    # The AGM inequality is a set-semantics statement: distinct result tuples
    # against distinct per-table tuple counts. The bag join size is only
    # bounded by the plain product of row counts (duplicated rows compound).
    # Each deepest-band run carries a unique full assignment, so its run count
    # (before any coalescing) is the distinct result size.
    distinct_sizes = [len(f) for f in factors]
    distinct_result = len(summary.groups[-1].runs) if summary.groups else 0
    assert agm_bound_holds(distinct_sizes, cover.weights, distinct_result), (
        "distinct join size exceeds AGM bound"
    )
    row_product = 1
    for ref in query.table_refs:
        row_product *= relations[ref.alias].row_count
    assert size <= row_product, "bag join size exceeds the row-count product"

    if plan.is_tree and not plan.early_order:
        n = max((r.row_count for r in relations.values()), default=0)
        assert generator.max_potential_entries <= n, "potential larger than any table"

    if coalesce_summary:
        summary = coalesce(summary)

    return Execution(
        query, relations, graph, plan, cover, generator, summary, gen_stats,
        phases.timings, distinct_sizes, distinct_result,
    )


def _base_stats(execution: Execution) -> dict[str, object]:
    plan = execution.plan
    cover = execution.cover
    if plan.is_tree:
        route = "tree"
        largest_clique = 2 if plan.order else len(plan.root)
    else:
        route = "junction-tree"
        largest_clique = max(len(c) for c in plan.junction_tree.nodes)
    size = join_size(execution.summary)
    distinct_bound = 1.0
    for s, w in zip(execution.distinct_table_sizes, cover.weights):
        if w:
            distinct_bound *= float(s) ** float(w)
    return {
        "tables": len(execution.query.table_refs),
        "variables": len(execution.graph.variables),
        "route": route,
        "fill-ins": len(plan.fill_ins),
        "largest-maxclique": largest_clique,
        "N-largest-table": execution.largest_table(),
        "M-largest-potential": execution.generator.max_potential_entries,
        "rho": f"{float(cover.rho):g}",
        "agm-bound": f"{cover.bound:.3f}",
        "agm-bound-distinct": f"{distinct_bound:.3f}",
        "join-size": size,
        "distinct-join-size": execution.distinct_result_size,
        "runs-per-group": ",".join(
            str(len(g.runs)) for g in execution.summary.groups
        ),
        "rows-visited": execution.gen_stats.rows_visited,
        "runs-emitted": execution.gen_stats.runs_emitted,
    }


def _result_permutation(summary, projection) -> list[int]:
    flat = summary.column_variables()
    if sorted(flat) != sorted(projection):
        raise SummaryFormatError(
            f"summary columns {flat} do not match projection {tuple(projection)}"
        )
    return [flat.index(p) for p in projection]


def write_result_csv(summary, projection, path) -> int:
    permutation = _result_permutation(summary, projection)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(projection)
        sink = CsvSink(writer, permutation)
        return desummarize(summary, sink)


def run_join(
    query_path,
    mode: str,
    out_dir=None,
    header: bool = True,
    cache_dir=None,
    coalesce_summary: bool = False,
) -> RunReport:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    query_path = Path(query_path)
    query = parse_query_file(query_path)
    base_dir = query_path.parent
    report = RunReport(str(query_path), mode)
    out = Path(out_dir) if out_dir is not None else None

    if mode == "load-desummarize":
        if out is None:
            raise ValueError("load-desummarize needs an output directory")
        phases = _Phases()
        summary = phases.run("load", lambda: load(out / "summary"))
        result_path = out / "result.csv"
        rows = phases.run(
            "desummarize",
            lambda: write_result_csv(summary, query.projection, result_path),
        )
        report.timings_ms = phases.timings
        report.stats = {
            "join-size": rows,
            "summary-bytes": stored_bytes(out / "summary"),
            "flat-bytes": result_path.stat().st_size,
            "result": str(result_path),
        }
        return report

    relations = load_relations(query, base_dir, header=header)
    execution = execute(
        query, relations, base_dir=base_dir, cache_dir=cache_dir,
        coalesce_summary=coalesce_summary,
    )
    report.timings_ms = dict(execution.timings)
    report.stats = _base_stats(execution)

    if mode == "store":
        if out is None:
            raise ValueError("store needs an output directory")
        phases = _Phases()
        phases.run("store", lambda: store(execution.summary, out / "summary"))
        report.timings_ms.update(phases.timings)
        report.stats["summary-bytes"] = stored_bytes(out / "summary")
        report.stats["summary-dir"] = str(out / "summary")
    elif mode == "materialize":
        if out is None:
            raise ValueError("materialize needs an output directory")
        out.mkdir(parents=True, exist_ok=True)
        result_path = out / "result.csv"
        phases = _Phases()
        phases.run(
            "desummarize",
            lambda: write_result_csv(execution.summary, query.projection, result_path),
        )
        report.timings_ms.update(phases.timings)
        report.stats["flat-bytes"] = result_path.stat().st_size
        report.stats["result"] = str(result_path)
    return report


def run_stats(query_path, header: bool = True) -> RunReport:
    """Planning-only report: hypergraph, elimination plan, edge cover."""
    query_path = Path(query_path)
    query = parse_query_file(query_path)
    relations = load_relations(query, query_path.parent, header=header)
    phases = _Phases()

    def plan_all():
        graph = build_join_graph(query)
        plan = plan_elimination(graph, query.projection, query.root_hint)
        sizes = [relations[ref.alias].row_count for ref in query.table_refs]
        cover = fractional_edge_cover(graph, sizes)
        return graph, plan, cover

    graph, plan, cover = phases.run("plan", plan_all)
    report = RunReport(str(query_path), "stats")
    report.timings_ms = phases.timings
    if plan.is_tree:
        route = "tree"
        maxcliques = ""
        largest = 2 if plan.order else len(plan.root)
    else:
        route = "junction-tree"
        maxcliques = "; ".join(",".join(c) for c in plan.junction_tree.nodes)
        largest = max(len(c) for c in plan.junction_tree.nodes)
    report.stats = {
        "tables": len(query.table_refs),
        "variables": len(graph.variables),
        "route": route,
        "early-order": ",".join(plan.early_order),
        "order": "; ".join(",".join(u) for u in plan.order),
        "root": ",".join(plan.root),
        "fill-ins": len(plan.fill_ins),
        "largest-maxclique": largest,
        "maxcliques": maxcliques,
        "N-largest-table": max((r.row_count for r in relations.values()), default=0),
        "rho": f"{float(cover.rho):g}",
        "lambda": ",".join(str(w) for w in cover.weights),
        "agm-bound": f"{cover.bound:.3f}",
    }
    return report


def _median(values: list[float]) -> float:
    ordered = sorted(values)
    mid = len(ordered) // 2
    if len(ordered) % 2:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def run_bench(
    query_path=None,
    baselines_requested=("brute", "hash"),
    repeats: int = 3,
    header: bool = True,
    synthetic: str | None = None,
    seed: int = 0,
    workdir=None,
) -> RunReport:
    """Wall-clock medians for the pipeline phases and requested baselines."""
    if synthetic is not None:
        workdir = Path(workdir) if workdir is not None else Path("bench-fixture")
        if synthetic == "redundancy":
            query_path = fixtures.make_redundancy_fixture(workdir, seed=seed)
        elif synthetic == "empty":
            query_path = fixtures.make_empty_join_fixture(workdir)
        else:
            raise ValueError(f"unknown synthetic fixture {synthetic!r}")
    if query_path is None:
        raise ValueError("bench needs a query file or a synthetic fixture")

    query_path = Path(query_path)
    query = parse_query_file(query_path)
    relations = load_relations(query, query_path.parent, header=header)

    phase_samples: dict[str, list[float]] = {}
    size = None
    last_execution = None
    for _ in range(max(1, repeats)):
        execution = execute(query, relations, base_dir=query_path.parent)
        for k, v in execution.timings.items():
            phase_samples.setdefault(k, []).append(v)
        size = join_size(execution.summary)
        last_execution = execution

    report = RunReport(str(query_path), "bench")
    report.timings_ms = {k: _median(v) for k, v in phase_samples.items()}
    report.stats = _base_stats(last_execution)
    report.stats["repeats"] = max(1, repeats)

    baseline_times: dict[str, list[float]] = {}
    for _ in range(max(1, repeats)):
        if "brute" in baselines_requested:
            start = time.perf_counter()
            brute = baselines.brute_force_join(query, relations)
            baseline_times.setdefault("brute", []).append(
                (time.perf_counter() - start) * 1000.0
            )
            if brute.total() != size:
                raise AssertionError(
                    f"brute-force cardinality {brute.total()} != {size}"
                )
        if "hash" in baselines_requested:
            start = time.perf_counter()
            plan_result = baselines.hash_join_plan(query, relations)
            baseline_times.setdefault("hash", []).append(
                (time.perf_counter() - start) * 1000.0
            )
            if plan_result.result.total() != size:
                raise AssertionError(
                    f"hash-plan cardinality {plan_result.result.total()} != {size}"
                )
            report.stats["dead-ends-per-step"] = ",".join(
                str(s.dead_ends) for s in plan_result.steps
            )
            report.stats["intermediate-per-step"] = ",".join(
                str(s.tuples) for s in plan_result.steps
            )
    for name, samples in baseline_times.items():
        report.timings_ms[f"baseline-{name}"] = _median(samples)
    return report

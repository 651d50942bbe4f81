"""Independent join implementations used as correctness oracles and baselines.

Everything here works on decoded raw values and never touches the factor or
generator machinery, so agreement with the summarization pipeline is a real
cross-check rather than a tautology.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import TooLargeForOracleError
from .factors import checked_add, checked_mul
from .query import JoinQuery
from .relation import Relation

ORACLE_BUDGET = 10_000_000


@dataclass
class TupleMultiset:
    """A bag of result tuples in a fixed column order."""

    columns: tuple[str, ...]
    counts: dict[tuple[str, ...], int] = field(default_factory=dict, repr=False)

    def total(self) -> int:
        t = 0
        for n in self.counts.values():
            t = checked_add(t, n)
        return t

    def add(self, key: tuple[str, ...], n: int = 1) -> None:
        self.counts[key] = checked_add(self.counts.get(key, 0), n)

    def project(self, columns) -> "TupleMultiset":
        columns = tuple(columns)
        pos = [self.columns.index(c) for c in columns]
        out = TupleMultiset(columns)
        for key, n in self.counts.items():
            out.add(tuple(key[p] for p in pos), n)
        return out

    def sorted_rows(self) -> list[tuple[str, ...]]:
        rows = []
        for key in sorted(self.counts):
            rows.extend([key] * self.counts[key])
        return rows

    def reordered(self, columns) -> "TupleMultiset":
        return self.project(columns)


def brute_force_join(
    query: JoinQuery,
    relations: dict[str, Relation],
    budget: int = ORACLE_BUDGET,
) -> TupleMultiset:
    """Exhaustive backtracking over decoded rows, bag-projected.

    The guard is a work budget over visited partial assignments; exceeding it
    raises TooLargeForOracleError.
    """
    refs = list(query.table_refs)
    tables = []
    for ref in refs:
        rel = relations[ref.alias]
        cols = [rel.column_index(c) for c, _ in ref.bindings]
        vars_ = [v for _, v in ref.bindings]
        rows = []
        for i in range(rel.row_count):
            decoded = rel.decode_row(i)
            rows.append(tuple(decoded[c] for c in cols))
        tables.append((vars_, rows))

    result = TupleMultiset(tuple(query.projection))
    assignment: dict[str, str] = {}
    work = 0

    def recurse(level: int) -> None:
        nonlocal work
        if level == len(tables):
            result.add(tuple(assignment[v] for v in query.projection))
            return
        vars_, rows = tables[level]
        for row in rows:
            work += 1
            if work > budget:
                raise TooLargeForOracleError(
                    f"oracle budget of {budget} row visits exceeded"
                )
            bound = []
            ok = True
            for var, value in zip(vars_, row):
                if var in assignment:
                    if assignment[var] != value:
                        ok = False
                        break
                else:
                    assignment[var] = value
                    bound.append(var)
            if ok:
                recurse(level + 1)
            for var in bound:
                del assignment[var]

    recurse(0)
    return result


@dataclass
class JoinStep:
    joined: tuple[str, ...]  # aliases joined so far
    tuples: int  # intermediate cardinality with multiplicity
    dead_ends: int  # tuples that extend to zero final-result tuples


@dataclass
class JoinPlanResult:
    result: TupleMultiset
    steps: list[JoinStep]

    def dead_end_total(self) -> int:
        return sum(s.dead_ends for s in self.steps)


def hash_join_plan(
    query: JoinQuery,
    relations: dict[str, Relation],
    order=None,
) -> JoinPlanResult:
    """Left-deep pairwise hash joins with per-step intermediate accounting.

    The final bag always equals brute_force_join; the step sizes and dead-end
    counts depend on the join order and are reported, not asserted.
    """
    by_alias = {ref.alias: ref for ref in query.table_refs}
    sequence = list(order) if order is not None else [r.alias for r in query.table_refs]
    if sorted(sequence) != sorted(by_alias):
        raise ValueError("join order must name each table alias exactly once")

    def table_bag(alias: str) -> TupleMultiset:
        ref = by_alias[alias]
        rel = relations[alias]
        cols = [rel.column_index(c) for c, _ in ref.bindings]
        vars_ = tuple(v for _, v in ref.bindings)
        out_vars = tuple(sorted(set(vars_)))
        bag = TupleMultiset(out_vars)
        for i in range(rel.row_count):
            decoded = rel.decode_row(i)
            assignment: dict[str, str] = {}
            ok = True
            for (c, var), col_idx in zip(ref.bindings, cols):
                value = decoded[col_idx]
                if var in assignment and assignment[var] != value:
                    ok = False
                    break
                assignment[var] = value
            if ok:
                bag.add(tuple(assignment[v] for v in out_vars))
        return bag

    acc = table_bag(sequence[0])
    joined = [sequence[0]]
    intermediates: list[tuple[tuple[str, ...], TupleMultiset]] = []
    for alias in sequence[1:]:
        nxt = table_bag(alias)
        shared = tuple(sorted(set(acc.columns) & set(nxt.columns)))
        out_cols = tuple(sorted(set(acc.columns) | set(nxt.columns)))
        probe_pos = [nxt.columns.index(v) for v in shared]
        build_pos = [acc.columns.index(v) for v in shared]
        index: dict[tuple[str, ...], list[tuple[tuple[str, ...], int]]] = {}
        for key, n in acc.counts.items():
            index.setdefault(tuple(key[p] for p in build_pos), []).append((key, n))
        out = TupleMultiset(out_cols)
        acc_set = set(acc.columns)
        plan = [
            ("a", acc.columns.index(v)) if v in acc_set else ("b", nxt.columns.index(v))
            for v in out_cols
        ]
        for bkey, bn in nxt.counts.items():
            for akey, an in index.get(tuple(bkey[p] for p in probe_pos), ()):
                merged = tuple(
                    akey[i] if side == "a" else bkey[i] for side, i in plan
                )
                out.add(merged, checked_mul(an, bn))
        joined.append(alias)
        acc = out
        intermediates.append((tuple(joined), acc))

    final_full = acc
    steps = []
    for aliases, bag in intermediates:
        surviving = set(final_full.project(bag.columns).counts)
        dead = sum(n for key, n in bag.counts.items() if key not in surviving)
        steps.append(JoinStep(aliases, bag.total(), dead))
    return JoinPlanResult(final_full.project(query.projection), steps)


def rle_columns(sorted_rows, group_sizes=None):
    """Reference RLE: per column group, merge adjacent equal values.

    ``sorted_rows`` must already be sorted in the intended column order;
    ``group_sizes`` partitions the columns (default: one column per group).
    This is the definitional summary that the pipeline's coalesced output is
    compared against.
    """
    if group_sizes is None:
        group_sizes = [1] * (len(sorted_rows[0]) if sorted_rows else 0)
    if not sorted_rows:
        return [[] for _ in group_sizes]
    if sum(group_sizes) != len(sorted_rows[0]):
        raise ValueError("group sizes must cover every column")

    starts = []
    at = 0
    for size in group_sizes:
        starts.append((at, at + size))
        at += size

    out = []
    for lo, hi in starts:
        runs: list[tuple[tuple[str, ...], int]] = []
        for row in sorted_rows:
            key = tuple(row[lo:hi])
            if runs and runs[-1][0] == key:
                runs[-1] = (key, runs[-1][1] + 1)
            else:
                runs.append((key, 1))
        out.append(runs)
    return out

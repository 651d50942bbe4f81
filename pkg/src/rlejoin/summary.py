"""Run-length-encoded join summaries: generation, storage, desummarization.

A summary holds one column group per generator band (root first). Each group
is an ordered sequence of (value-tuple, frequency) runs whose frequencies
total the join size. Runs keep the per-prefix boundaries that generation
naturally emits; ``coalesce`` merges adjacent equal-valued runs into the
fully normalized per-column RLE form. Desummarization expands all groups in
lockstep and never materializes the flat result.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InconsistentSummaryError, SummaryFormatError
from .factors import checked_add, checked_mul
from .inference import Generator
from .relation import Dictionary

FORMAT_VERSION = 1

# Upper bound on identical rows handed to a sink in one call.
_CHUNK_CAP = 65536


@dataclass
class SummaryGroup:
    variables: tuple[str, ...]
    runs: list[tuple[tuple[int, ...], int]] = field(default_factory=list, repr=False)

    def total(self) -> int:
        t = 0
        for _, freq in self.runs:
            t = checked_add(t, freq)
        return t


@dataclass
class JoinSummary:
    groups: list[SummaryGroup]
    dictionaries: dict[str, Dictionary] = field(repr=False)

    def column_variables(self) -> tuple[str, ...]:
        flat: tuple[str, ...] = ()
        for g in self.groups:
            flat += g.variables
        return flat

    def decoded_runs(self, group_index: int):
        group = self.groups[group_index]
        dicts = [self.dictionaries[v] for v in group.variables]
        return [
            (tuple(d.value(c) for d, c in zip(dicts, values)), freq)
            for values, freq in group.runs
        ]


@dataclass
class GenerationStats:
    rows_visited: int = 0
    runs_emitted: int = 0


def generate_summary(
    generator: Generator, stats: GenerationStats | None = None
) -> JoinSummary:
    """Walk the generator root-first and emit one run per visited row."""
    bands = generator.bands
    scopes = generator.band_scopes()
    groups = [SummaryGroup(scope) for scope in scopes]

    def emit(level: int, values: tuple[int, ...], freq: int) -> None:
        groups[level].runs.append((values, freq))
        if stats is not None:
            stats.runs_emitted += 1

    def recurse(level: int, p_bucket: int, keys: dict[str, int]) -> None:
        lists = []
        for psi in bands[level]:
            pkey = tuple(keys[v] for v in psi.parent_scope)
            rows = psi.entries.get(pkey)
            if not rows:
                raise InconsistentSummaryError(
                    f"generator has no entries for {psi.parent_scope}={pkey}"
                )
            lists.append(rows)
        # Cartesian product across the band, ascending by combined value tuple.
        _product_rows(level, p_bucket, keys, lists, 0, (), 1, 1)

    def _product_rows(level, p_bucket, keys, lists, li, values, bucket, fac):
        if li == len(lists):
            if stats is not None:
                stats.rows_visited += 1
            bucket_new = checked_mul(p_bucket, bucket)
            emit(level, values, checked_mul(bucket_new, fac))
            if level + 1 < len(bands):
                new_keys = dict(keys)
                for var, code in zip(scopes[level], values):
                    new_keys[var] = code
                recurse(level + 1, bucket_new, new_keys)
            return
        for child, b, f in lists[li]:
            _product_rows(
                level,
                p_bucket,
                keys,
                lists,
                li + 1,
                values + child,
                checked_mul(bucket, b),
                checked_mul(fac, f),
            )

    root = bands[0][0]
    for child, bucket, fac in root.entries.get((), []):
        if stats is not None:
            stats.rows_visited += 1
        emit(0, child, checked_mul(bucket, fac))
        if len(bands) > 1:
            keys = dict(zip(root.child_scope, child))
            recurse(1, bucket, keys)
    return JoinSummary(groups, dict(generator.var_dicts))


def join_size(summary: JoinSummary) -> int:
    """Total of the root group, asserted equal across all groups."""
    totals = [g.total() for g in summary.groups]
    if len(set(totals)) > 1:
        raise InconsistentSummaryError(f"group totals differ: {totals}")
    return totals[0] if totals else 0


def coalesce(summary: JoinSummary) -> JoinSummary:
    """Merge adjacent runs with identical value tuples within each group."""
    groups = []
    for group in summary.groups:
        merged: list[tuple[tuple[int, ...], int]] = []
        for values, freq in group.runs:
            if merged and merged[-1][0] == values:
                merged[-1] = (values, checked_add(merged[-1][1], freq))
            else:
                merged.append((values, freq))
        groups.append(SummaryGroup(group.variables, merged))
    return JoinSummary(groups, summary.dictionaries)


def desummarize(summary: JoinSummary, sink) -> int:
    """Expand every group in lockstep; ``sink(row, count)`` receives blocks.

    Row ``i`` of the flat result concatenates the i-th expanded entry of
    every group. Returns the number of rows emitted (the join size).
    """
    total = join_size(summary)
    cursors = []  # per group: [run index, remaining in current run]
    decoders = []
    for group in summary.groups:
        cursors.append([0, group.runs[0][1] if group.runs else 0])
        decoders.append([summary.dictionaries[v] for v in group.variables])

    current: list[tuple[str, ...] | None] = [None] * len(summary.groups)

    def refresh(gi: int) -> None:
        run_idx = cursors[gi][0]
        values, _ = summary.groups[gi].runs[run_idx]
        current[gi] = tuple(
            d.value(c) for d, c in zip(decoders[gi], values)
        )

    emitted = 0
    while emitted < total:
        chunk = min(_CHUNK_CAP, total - emitted)
        for gi, (run_idx, remaining) in enumerate(cursors):
            if remaining == 0:
                raise InconsistentSummaryError(
                    f"group {gi} exhausted after {emitted} of {total} rows"
                )
            if current[gi] is None:
                refresh(gi)
            chunk = min(chunk, remaining)
        row = tuple(v for cur in current for v in cur)  # type: ignore[union-attr]
        sink(row, chunk)
        emitted += chunk
        for gi in range(len(cursors)):
            cursors[gi][1] -= chunk
            if cursors[gi][1] == 0:
                cursors[gi][0] += 1
                current[gi] = None
                if cursors[gi][0] < len(summary.groups[gi].runs):
                    cursors[gi][1] = summary.groups[gi].runs[cursors[gi][0]][1]
    for gi, (run_idx, remaining) in enumerate(cursors):
        if remaining != 0 or run_idx != len(summary.groups[gi].runs):
            raise InconsistentSummaryError(
                f"group {gi} has leftover runs after {total} rows"
            )
    return emitted


class ListSink:
    """Collects fully expanded rows in memory (small results only)."""

    def __init__(self):
        self.rows: list[tuple[str, ...]] = []

    def __call__(self, row: tuple[str, ...], count: int) -> None:
        self.rows.extend([row] * count)


class CsvSink:
    """Streams rows to a CSV writer, optionally permuting columns."""

    def __init__(self, writer, column_order=None):
        self.writer = writer
        self.permutation = column_order

    def __call__(self, row: tuple[str, ...], count: int) -> None:
        if self.permutation is not None:
            row = tuple(row[i] for i in self.permutation)
        self.writer.writerows([row] * count)


def store(summary: JoinSummary, directory) -> None:
    """One run file per column group plus a manifest.

    ``col_<i>.csv`` lines are ``value[,value...],freq`` with decoded raw
    values; the manifest pins the format version, group scopes, join size and
    per-group run counts so a reload can validate structure before trusting
    content.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    total = join_size(summary)
    for gi, group in enumerate(summary.groups):
        with open(directory / f"col_{gi}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            for values, freq in summary.decoded_runs(gi):
                writer.writerow(list(values) + [freq])
    lines = [
        f"format-version: {FORMAT_VERSION}",
        f"groups: {len(summary.groups)}",
    ]
    for gi, group in enumerate(summary.groups):
        lines.append(f"group-{gi}: {' '.join(group.variables)}")
    lines.append(f"join-size: {total}")
    for gi, group in enumerate(summary.groups):
        lines.append(f"runs-{gi}: {len(group.runs)}")
    (directory / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _manifest_entries(path: Path) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if ":" not in line:
            raise SummaryFormatError(f"{path}:{lineno}: expected 'key: value'")
        key, value = line.split(":", 1)
        entries[key.strip()] = value.strip()
    return entries


def load(directory) -> JoinSummary:
    directory = Path(directory)
    manifest_path = directory / "manifest.txt"
    if not manifest_path.exists():
        raise SummaryFormatError(f"missing manifest: {manifest_path}")
    manifest = _manifest_entries(manifest_path)

    try:
        version = int(manifest["format-version"])
        group_count = int(manifest["groups"])
        declared_size = int(manifest["join-size"])
    except (KeyError, ValueError) as exc:
        raise SummaryFormatError(f"bad manifest {manifest_path}: {exc}") from exc
    if version != FORMAT_VERSION:
        raise SummaryFormatError(f"unsupported format version {version}")

    groups_raw: list[tuple[tuple[str, ...], list[tuple[tuple[str, ...], int]]]] = []
    for gi in range(group_count):
        try:
            variables = tuple(manifest[f"group-{gi}"].split())
            declared_runs = int(manifest[f"runs-{gi}"])
        except (KeyError, ValueError) as exc:
            raise SummaryFormatError(f"bad manifest {manifest_path}: {exc}") from exc
        if not variables:
            raise SummaryFormatError(f"group {gi} declares no variables")
        for prior_vars, _ in groups_raw:
            overlap = set(variables) & set(prior_vars)
            if overlap:
                raise SummaryFormatError(
                    f"variable {sorted(overlap)} appears in more than one group"
                )
        runs: list[tuple[tuple[str, ...], int]] = []
        col_path = directory / f"col_{gi}.csv"
        if not col_path.exists():
            raise SummaryFormatError(f"missing run file: {col_path}")
        with open(col_path, newline="", encoding="utf-8") as fh:
            for record in csv.reader(fh, strict=True):
                if len(record) != len(variables) + 1:
                    raise SummaryFormatError(
                        f"{col_path}: run arity {len(record)} != {len(variables) + 1}"
                    )
                try:
                    freq = int(record[-1])
                except ValueError:
                    raise SummaryFormatError(
                        f"{col_path}: frequency {record[-1]!r} is not an integer"
                    ) from None
                if freq < 1:
                    raise SummaryFormatError(f"{col_path}: frequency {freq} < 1")
                runs.append((tuple(record[:-1]), freq))
        if len(runs) != declared_runs:
            raise SummaryFormatError(
                f"{col_path}: {len(runs)} runs, manifest declares {declared_runs}"
            )
        groups_raw.append((variables, runs))

    dictionaries: dict[str, Dictionary] = {}
    groups: list[SummaryGroup] = []
    for variables, runs in groups_raw:
        per_var_values: list[set[str]] = [set() for _ in variables]
        for values, _ in runs:
            for s, v in zip(per_var_values, values):
                s.add(v)
        for var, vals in zip(variables, per_var_values):
            dictionaries[var] = Dictionary(var, vals)
        dicts = [dictionaries[v] for v in variables]
        coded = [
            (tuple(d.code(v) for d, v in zip(dicts, values)), freq)
            for values, freq in runs
        ]
        groups.append(SummaryGroup(variables, coded))

    summary = JoinSummary(groups, dictionaries)
    totals = [g.total() for g in summary.groups]
    if any(t != declared_size for t in totals):
        raise SummaryFormatError(
            f"group totals {totals} disagree with declared join size {declared_size}"
        )
    return summary


def stored_bytes(directory) -> int:
    return sum(p.stat().st_size for p in Path(directory).iterdir() if p.is_file())

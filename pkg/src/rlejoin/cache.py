"""On-disk cache of learned potentials, keyed by file digest + bound columns.

Cached entries are column-level counts in raw values (one line per entry,
``value[,value...],freq``) with a sidecar manifest naming the columns and the
source digest, so a cache hit skips the table scan entirely and stays valid
across queries that bind the same columns under different variable names.
"""

from __future__ import annotations

import csv
import hashlib
from pathlib import Path

from .errors import SummaryFormatError
from .factors import Factor
from .relation import Dictionary, Relation


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _cache_name(digest: str, columns) -> str:
    colkey = hashlib.sha256("\x1f".join(columns).encode()).hexdigest()[:8]
    return f"{digest[:16]}_{colkey}"


def _column_counts(relation: Relation, columns) -> dict[tuple[str, ...], int]:
    idxs = [relation.column_index(c) for c in columns]
    counts: dict[tuple[str, ...], int] = {}
    for i in range(relation.row_count):
        decoded = relation.decode_row(i)
        key = tuple(decoded[j] for j in idxs)
        counts[key] = counts.get(key, 0) + 1
    return counts


def _write(cache_dir: Path, name: str, columns, digest: str, counts) -> None:
    cache_dir.mkdir(parents=True, exist_ok=True)
    with open(cache_dir / f"{name}.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for key in sorted(counts):
            writer.writerow(list(key) + [counts[key]])
    manifest = [
        "format-version: 1",
        f"columns: {' '.join(columns)}",
        f"source-digest: {digest}",
    ]
    (cache_dir / f"{name}.manifest").write_text(
        "\n".join(manifest) + "\n", encoding="utf-8"
    )


def _read(cache_dir: Path, name: str, columns, digest: str):
    manifest_path = cache_dir / f"{name}.manifest"
    data_path = cache_dir / f"{name}.csv"
    if not manifest_path.exists() or not data_path.exists():
        return None
    fields = {}
    for line in manifest_path.read_text(encoding="utf-8").splitlines():
        if ":" in line:
            k, v = line.split(":", 1)
            fields[k.strip()] = v.strip()
    if fields.get("columns") != " ".join(columns):
        return None
    if fields.get("source-digest") != digest:
        return None
    counts: dict[tuple[str, ...], int] = {}
    with open(data_path, newline="", encoding="utf-8") as fh:
        for record in csv.reader(fh, strict=True):
            if len(record) != len(columns) + 1:
                raise SummaryFormatError(f"{data_path}: bad cache entry arity")
            counts[tuple(record[:-1])] = int(record[-1])
    return counts


def load_or_learn(
    csv_path,
    relation: Relation,
    bindings,
    var_dicts: dict[str, Dictionary],
    cache_dir,
) -> Factor:
    """Learn a factor through the cache; writes the cache entry on a miss."""
    bindings = list(bindings)
    columns = sorted(c for c, _ in bindings)
    digest = file_digest(csv_path)
    cache_dir = Path(cache_dir)
    name = _cache_name(digest, columns)

    counts = _read(cache_dir, name, columns, digest)
    if counts is None:
        counts = _column_counts(relation, columns)
        _write(cache_dir, name, columns, digest, counts)

    col_pos = {c: i for i, c in enumerate(columns)}
    per_var: dict[str, list[int]] = {}
    for col, var in bindings:
        per_var.setdefault(var, []).append(col_pos[col])
    scope = tuple(sorted(per_var))

    entries: dict[tuple[int, ...], int] = {}
    for key, freq in counts.items():
        out = []
        ok = True
        for var in scope:
            positions = per_var[var]
            value = key[positions[0]]
            if any(key[p] != value for p in positions[1:]):
                ok = False
                break
            out.append(var_dicts[var].code(value))
        if ok:
            k = tuple(out)
            entries[k] = entries.get(k, 0) + freq
    return Factor(scope, entries)

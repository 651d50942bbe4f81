"""Dictionary-encoded relations loaded from CSV files.

Every column gets its own dictionary of distinct raw values, sorted
lexicographically, so integer code order always equals raw-value order and
row tuples can be compared without decoding. Values are opaque strings;
equality and ordering are byte-wise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MalformedCsvError, UnknownColumnError

MAX_COLUMNS = 64


class Dictionary:
    """Sorted value dictionary for one column.

    Codes are 0..len-1 with no gaps; ``entries`` ascending means code order
    equals lexicographic value order.
    """

    __slots__ = ("attribute", "entries", "_codes")

    def __init__(self, attribute: str, values):
        self.attribute = attribute
        self.entries = sorted(set(values))
        self._codes = {v: i for i, v in enumerate(self.entries)}

    def code(self, value: str) -> int:
        return self._codes[value]

    def value(self, code: int) -> str:
        return self.entries[code]

    def get(self, value: str):
        return self._codes.get(value)

    def __contains__(self, value: str) -> bool:
        return value in self._codes

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dictionary):
            return NotImplemented
        return self.attribute == other.attribute and self.entries == other.entries

    def __repr__(self) -> str:
        return f"Dictionary({self.attribute!r}, {len(self)} values)"

    @classmethod
    def merged(cls, attribute: str, dictionaries) -> "Dictionary":
        """Union of several dictionaries' values under a new attribute name."""
        values = set()
        for d in dictionaries:
            values.update(d.entries)
        return cls(attribute, values)


@dataclass
class Relation:
    """An immutable, integer-coded table."""

    name: str
    attributes: tuple[str, ...]
    dictionaries: tuple[Dictionary, ...]
    rows: list[tuple[int, ...]] = field(repr=False)

    @property
    def row_count(self) -> int:
        return len(self.rows)

    def column_index(self, attribute: str) -> int:
        try:
            return self.attributes.index(attribute)
        except ValueError:
            raise UnknownColumnError(
                f"relation {self.name!r} has no column {attribute!r}"
            ) from None

    def decode_row(self, index: int) -> tuple[str, ...]:
        if not 0 <= index < len(self.rows):
            raise IndexError(
                f"row index {index} out of range for relation {self.name!r} "
                f"with {len(self.rows)} rows"
            )
        row = self.rows[index]
        return tuple(d.value(c) for d, c in zip(self.dictionaries, row))

    def decoded_rows(self):
        for i in range(len(self.rows)):
            yield self.decode_row(i)


def _build_relation(name: str, attributes, raw_rows) -> Relation:
    attributes = tuple(attributes)
    if len(attributes) > MAX_COLUMNS:
        raise ValueError(f"more than {MAX_COLUMNS} columns")
    if len(set(attributes)) != len(attributes):
        raise ValueError("duplicate column names")
    columns = [[] for _ in attributes]
    for row in raw_rows:
        for col, value in zip(columns, row):
            col.append(value)
    dictionaries = tuple(
        Dictionary(attr, col) for attr, col in zip(attributes, columns)
    )
    rows = [
        tuple(d.code(v) for d, v in zip(dictionaries, row)) for row in raw_rows
    ]
    return Relation(name, attributes, dictionaries, rows)


def relation_from_rows(name: str, attributes, raw_rows) -> Relation:
    """Build a Relation directly from decoded string rows (tests, fixtures)."""
    attributes = tuple(attributes)
    raw_rows = [tuple(r) for r in raw_rows]
    for r in raw_rows:
        if len(r) != len(attributes):
            raise MalformedCsvError(name, 0, "ragged row")
    try:
        return _build_relation(name, attributes, raw_rows)
    except ValueError as exc:
        raise MalformedCsvError(name, 0, str(exc)) from None


def load_csv(path, header: bool = True, name: str | None = None) -> Relation:
    """Load and dictionary-encode a CSV file.

    RFC-4180-style parsing: comma separator, double-quote escaping, UTF-8.
    Raises MalformedCsvError (with a 1-based line number) on ragged rows or
    bad quoting; lets OSError propagate for unreadable files.
    """
    path = Path(path)
    records: list[tuple[int, tuple[str, ...]]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, strict=True)
        try:
            for record in reader:
                records.append((reader.line_num, tuple(record)))
        except csv.Error as exc:
            raise MalformedCsvError(path, reader.line_num, str(exc)) from exc

    if header:
        if not records:
            raise MalformedCsvError(path, 1, "missing header row")
        _, attributes = records[0]
        data = records[1:]
    else:
        width = len(records[0][1]) if records else 0
        attributes = tuple(f"col{i}" for i in range(width))
        data = records

    arity = len(attributes)
    for line, record in data:
        if len(record) != arity:
            raise MalformedCsvError(
                path, line, f"expected {arity} fields, found {len(record)}"
            )
    try:
        return _build_relation(
            name or path.stem, attributes, [r for _, r in data]
        )
    except ValueError as exc:
        raise MalformedCsvError(path, 1, str(exc)) from None


def write_csv(path, attributes, decoded_rows, header: bool = True) -> None:
    """Write string rows back out (round-trip counterpart of load_csv)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(attributes)
        writer.writerows(decoded_rows)

"""Synthetic dataset builders for benchmarks and the randomized test suite."""

from __future__ import annotations

import random
from pathlib import Path

from .query import JoinQuery, TableRef
from .relation import Relation, relation_from_rows, write_csv


def _chain_query(paths, var_names) -> str:
    lines = []
    for i, path in enumerate(paths):
        a, b = var_names[i], var_names[i + 1]
        lines.append(f"table t{i + 1} {path} {a.lower()}={a} {b.lower()}={b}")
    lines.append(f"project {' '.join(var_names)}")
    lines.append(f"root {var_names[0]}")
    return "\n".join(lines) + "\n"


def make_redundancy_fixture(
    directory, rows: int = 1000, join_keys: int = 10, seed: int = 0
) -> Path:
    """Three-table many-to-many chain whose join blows up to ~rows^3/keys^2.

    With the defaults the join size is about 10^7 while each table stays at
    1000 rows, so the run-length summary is a tiny fraction of the flat
    result. Returns the query-file path.
    """
    rng = random.Random(seed)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    keys = [f"k{i:02d}" for i in range(join_keys)]

    def spread(prefix: str, count: int) -> list[str]:
        return [f"{prefix}{i:03d}" for i in range(count)]

    a_values = spread("a", 100)
    d_values = spread("d", 10)
    t1 = [(rng.choice(a_values), keys[i % join_keys]) for i in range(rows)]
    t2 = [(keys[i % join_keys], keys[rng.randrange(join_keys)]) for i in range(rows)]
    t3 = [(keys[i % join_keys], rng.choice(d_values)) for i in range(rows)]

    write_csv(directory / "t1.csv", ("a", "b"), t1)
    write_csv(directory / "t2.csv", ("b", "c"), t2)
    write_csv(directory / "t3.csv", ("c", "d"), t3)
    query_path = directory / "redundancy.q"
    query_path.write_text(
        _chain_query(["t1.csv", "t2.csv", "t3.csv"], ["A", "B", "C", "D"]),
        encoding="utf-8",
    )
    return query_path


def make_empty_join_fixture(directory) -> Path:
    """Two tables whose join variable domains do not intersect."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_csv(directory / "t1.csv", ("a", "b"), [("a1", "b1"), ("a2", "b2")])
    write_csv(directory / "t2.csv", ("b", "c"), [("x1", "c1"), ("x2", "c2")])
    query_path = directory / "empty.q"
    query_path.write_text(
        "table t1 t1.csv a=A b=B\ntable t2 t2.csv b=B c=C\nproject A B C\n",
        encoding="utf-8",
    )
    return query_path


# ---------------------------------------------------------------------------
# In-memory random instances for the property suites.

SHAPES = ("chain", "star", "binary")


def _shape_edges(shape: str, n_vars: int) -> list[tuple[int, int]]:
    if shape == "chain":
        return [(i, i + 1) for i in range(n_vars - 1)]
    if shape == "star":
        return [(0, i) for i in range(1, n_vars)]
    if shape == "binary":
        return [((i - 1) // 2, i) for i in range(1, n_vars)]
    raise ValueError(f"unknown shape {shape!r}")


def random_tree_instance(
    rng: random.Random,
    shape: str | None = None,
    max_tables: int = 4,
    max_rows: int = 24,
    max_values: int = 8,
    inject_orphans: bool = False,
    duplicate_rows: bool = False,
    projection: tuple[str, ...] | None = None,
    root_hint: str | None = None,
):
    """A random acyclic query instance: one table per tree edge.

    Orphan injection adds rows whose values exist in only one table, so they
    can never reach the result; duplication repeats rows to force result
    redundancy. Returns (query, relations).
    """
    shape = shape or rng.choice(SHAPES)
    n_tables = rng.randint(2, max_tables) if shape == "chain" else rng.randint(2, max_tables)
    n_vars = n_tables + 1
    variables = [f"V{i}" for i in range(n_vars)]
    edges = _shape_edges(shape, n_vars)

    pools = {
        v: [f"{v.lower()}_{j}" for j in range(rng.randint(2, max_values))]
        for v in variables
    }

    refs = []
    relations: dict[str, Relation] = {}
    for t, (i, j) in enumerate(edges):
        u, v = variables[i], variables[j]
        budget = max_rows // 2 if duplicate_rows else max_rows
        injecting = inject_orphans and rng.random() < 0.8
        if injecting:
            budget = max(1, budget - 2)
        n_rows = rng.randint(1, budget)
        rows = [
            (rng.choice(pools[u]), rng.choice(pools[v])) for _ in range(n_rows)
        ]
        if injecting:
            rows.append((f"{u.lower()}_only{t}", rng.choice(pools[v])))
            rows.append((rng.choice(pools[u]), f"{v.lower()}_only{t}"))
        if duplicate_rows:
            rows = rows + [rng.choice(rows) for _ in range(len(rows))]
        alias = f"t{t}"
        relations[alias] = relation_from_rows(alias, ("x", "y"), rows)
        refs.append(TableRef(alias, f"{alias}.csv", (("x", u), ("y", v))))

    query = JoinQuery(
        tuple(refs),
        projection or tuple(variables),
        root_hint,
    )
    return query, relations


def random_cyclic_instance(
    rng: random.Random,
    cycle_length: int = 3,
    max_rows: int = 30,
    max_values: int = 6,
):
    """Triangle or longer cycle: table k joins variable k with variable k+1."""
    variables = [f"V{i}" for i in range(cycle_length)]
    pools = {
        v: [f"{v.lower()}_{j}" for j in range(rng.randint(2, max_values))]
        for v in variables
    }
    refs = []
    relations: dict[str, Relation] = {}
    for t in range(cycle_length):
        u = variables[t]
        v = variables[(t + 1) % cycle_length]
        n_rows = rng.randint(1, max_rows)
        rows = [(rng.choice(pools[u]), rng.choice(pools[v])) for _ in range(n_rows)]
        alias = f"t{t}"
        relations[alias] = relation_from_rows(alias, ("x", "y"), rows)
        refs.append(TableRef(alias, f"{alias}.csv", (("x", u), ("y", v))))
    query = JoinQuery(tuple(refs), tuple(variables), None)
    return query, relations

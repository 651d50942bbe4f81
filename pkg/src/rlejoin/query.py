"""Join-query files and the query hypergraph.

A query file binds table columns to shared variable names; two columns bound
to the same variable are equi-joined. One directive per line:

    table <alias> <csv-path> <col=Var> [<col=Var> ...]
    project <Var> [<Var> ...]
    root <Var>                (optional)

Lines starting with ``#`` are comments. The hypergraph has one node per
variable and one hyperedge per table reference; all variables bound by the
same table form a clique in the pairwise graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    DisconnectedGraphError,
    DuplicateAliasError,
    QuerySyntaxError,
    UnknownVariableError,
)


@dataclass(frozen=True)
class TableRef:
    alias: str
    path: str
    bindings: tuple[tuple[str, str], ...]  # (column, variable)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(sorted({var for _, var in self.bindings}))


@dataclass(frozen=True)
class JoinQuery:
    table_refs: tuple[TableRef, ...]
    projection: tuple[str, ...]
    root_hint: str | None = None

    @property
    def variables(self) -> tuple[str, ...]:
        seen = set()
        for ref in self.table_refs:
            seen.update(v for _, v in ref.bindings)
        return tuple(sorted(seen))

    def join_variables(self) -> tuple[str, ...]:
        """Variables bound by two or more table references."""
        count: dict[str, int] = {}
        for ref in self.table_refs:
            for v in ref.variables:
                count[v] = count.get(v, 0) + 1
        return tuple(sorted(v for v, n in count.items() if n > 1))


def parse_query(text: str) -> JoinQuery:
    refs: list[TableRef] = []
    projection: tuple[str, ...] | None = None
    root_hint: str | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        directive = tokens[0]

        if directive == "table":
            if len(tokens) < 4:
                raise QuerySyntaxError(
                    lineno, "table needs an alias, a path and at least one col=Var"
                )
            alias, path = tokens[1], tokens[2]
            bindings = []
            for tok in tokens[3:]:
                if "=" not in tok:
                    raise QuerySyntaxError(lineno, f"binding {tok!r} is not col=Var")
                col, var = tok.split("=", 1)
                if not col or not var:
                    raise QuerySyntaxError(lineno, f"binding {tok!r} is not col=Var")
                bindings.append((col, var))
            cols = [c for c, _ in bindings]
            if len(set(cols)) != len(cols):
                raise QuerySyntaxError(lineno, f"column bound twice in table {alias!r}")
            refs.append(TableRef(alias, path, tuple(bindings)))
        elif directive == "project":
            if projection is not None:
                raise QuerySyntaxError(lineno, "duplicate project directive")
            if len(tokens) < 2:
                raise QuerySyntaxError(lineno, "project needs at least one variable")
            if len(set(tokens[1:])) != len(tokens[1:]):
                raise QuerySyntaxError(lineno, "duplicate variable in projection")
            projection = tuple(tokens[1:])
        elif directive == "root":
            if root_hint is not None:
                raise QuerySyntaxError(lineno, "duplicate root directive")
            if len(tokens) != 2:
                raise QuerySyntaxError(lineno, "root takes exactly one variable")
            root_hint = tokens[1]
        else:
            raise QuerySyntaxError(lineno, f"unknown directive {directive!r}")

    if not refs:
        raise QuerySyntaxError(0, "query has no table directives")
    if projection is None:
        raise QuerySyntaxError(0, "query has no project directive")

    aliases = [r.alias for r in refs]
    dupes = {a for a in aliases if aliases.count(a) > 1}
    if dupes:
        raise DuplicateAliasError(f"duplicate alias: {', '.join(sorted(dupes))}")

    bound = set()
    for ref in refs:
        bound.update(ref.variables)
    for var in projection:
        if var not in bound:
            raise UnknownVariableError(f"projected variable {var!r} is never bound")
    if root_hint is not None and root_hint not in bound:
        raise UnknownVariableError(f"root variable {root_hint!r} is never bound")

    return JoinQuery(tuple(refs), projection, root_hint)


def parse_query_file(path) -> JoinQuery:
    with open(path, encoding="utf-8") as fh:
        return parse_query(fh.read())


@dataclass
class JoinGraph:
    """Nodes, per-table hyperedges, and the derived pairwise graph."""

    variables: tuple[str, ...]
    hyperedges: tuple[tuple[str, ...], ...]  # aligned with the query's table refs
    adjacency: dict[str, set[str]] = field(repr=False)

    def edges(self) -> set[frozenset[str]]:
        return {
            frozenset((u, v)) for u, nbrs in self.adjacency.items() for v in nbrs
        }

    def copy_adjacency(self) -> dict[str, set[str]]:
        return {v: set(nbrs) for v, nbrs in self.adjacency.items()}


def build_join_graph(query: JoinQuery) -> JoinGraph:
    variables = query.variables
    hyperedges = tuple(ref.variables for ref in query.table_refs)
    adjacency: dict[str, set[str]] = {v: set() for v in variables}
    for edge in hyperedges:
        for u in edge:
            for v in edge:
                if u != v:
                    adjacency[u].add(v)

    # Cartesian products are rejected: frequency bookkeeping across
    # disconnected components is out of scope.
    if variables:
        seen = {variables[0]}
        frontier = [variables[0]]
        while frontier:
            u = frontier.pop()
            for v in adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    frontier.append(v)
        if len(seen) != len(variables):
            missing = sorted(set(variables) - seen)
            raise DisconnectedGraphError(
                f"join graph is disconnected; unreachable variables: {missing}"
            )
    return JoinGraph(variables, hyperedges, adjacency)

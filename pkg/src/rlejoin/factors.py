"""Frequency-factor algebra over dictionary-coded variables.

A factor maps value-code tuples to exact occurrence counts. All arithmetic is
checked against the unsigned 64-bit range: results that would wrap are a hard
error, never a silent truncation. No factor ever stores a zero frequency, so
value combinations absent from any input simply do not exist downstream --
this is what keeps dead join paths out of the generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import FrequencyOverflowError, UnknownColumnError
from .query import JoinQuery
from .relation import Dictionary, Relation

U64_MAX = 2**64 - 1


def checked_mul(a: int, b: int) -> int:
    r = a * b
    if r > U64_MAX:
        raise FrequencyOverflowError(f"frequency product {a} * {b} exceeds 64 bits")
    return r


def checked_add(a: int, b: int) -> int:
    r = a + b
    if r > U64_MAX:
        raise FrequencyOverflowError(f"frequency sum {a} + {b} exceeds 64 bits")
    return r


class Factor:
    """Frequencies over a sorted variable scope; keys follow scope order."""

    __slots__ = ("scope", "entries")

    def __init__(self, scope, entries: dict[tuple[int, ...], int] | None = None):
        self.scope = tuple(scope)
        assert list(self.scope) == sorted(self.scope), "scope must be sorted"
        self.entries = entries if entries is not None else {}

    def __len__(self) -> int:
        return len(self.entries)

    def __repr__(self) -> str:
        return f"Factor({','.join(self.scope)}; {len(self.entries)} entries)"

    def total(self) -> int:
        t = 0
        for f in self.entries.values():
            t = checked_add(t, f)
        return t

    def project_values(self, var: str) -> list[int]:
        """Sorted distinct codes of one scope variable."""
        pos = self.scope.index(var)
        return sorted({key[pos] for key in self.entries})

    def decode(self, var_dicts: dict[str, Dictionary]):
        """Entries with raw values, for display and tests."""
        dicts = [var_dicts[v] for v in self.scope]
        return {
            tuple(d.value(c) for d, c in zip(dicts, key)): f
            for key, f in self.entries.items()
        }


def variable_dictionaries(
    query: JoinQuery, relations: dict[str, Relation]
) -> dict[str, Dictionary]:
    """Join-wide dictionary per variable: union of its bound columns' values."""
    per_var: dict[str, list[Dictionary]] = {}
    for ref in query.table_refs:
        rel = relations[ref.alias]
        for col, var in ref.bindings:
            idx = rel.column_index(col)
            per_var.setdefault(var, []).append(rel.dictionaries[idx])
    return {v: Dictionary.merged(v, ds) for v, ds in per_var.items()}


def learn_factor(
    relation: Relation, bindings, var_dicts: dict[str, Dictionary]
) -> Factor:
    """One scan: count distinct bound-value combinations, re-coded join-wide.

    ``bindings`` is a sequence of (column, variable) pairs. Two columns bound
    to the same variable act as an in-table equality filter.
    """
    bindings = list(bindings)
    per_var: dict[str, list[int]] = {}
    translations = {}
    for col, var in bindings:
        if var not in var_dicts:
            raise UnknownColumnError(f"no join-wide dictionary for variable {var!r}")
        idx = relation.column_index(col)
        table_dict = relation.dictionaries[idx]
        target = var_dicts[var]
        translations[(col, var)] = [target.code(v) for v in table_dict.entries]
        per_var.setdefault(var, []).append(idx)

    scope = tuple(sorted(per_var))
    col_plan = []  # per scope variable: list of (column index, translation)
    for var in scope:
        plan = []
        for col, v in bindings:
            if v == var:
                plan.append((relation.column_index(col), translations[(col, v)]))
        col_plan.append(plan)

    entries: dict[tuple[int, ...], int] = {}
    for row in relation.rows:
        key = []
        ok = True
        for plan in col_plan:
            idx0, trans0 = plan[0]
            code = trans0[row[idx0]]
            for idxk, transk in plan[1:]:
                if transk[row[idxk]] != code:
                    ok = False
                    break
            if not ok:
                break
            key.append(code)
        if ok:
            k = tuple(key)
            entries[k] = entries.get(k, 0) + 1
    return Factor(scope, entries)


def _positions(scope, vars_subset):
    return [scope.index(v) for v in vars_subset]


def _pairwise_product(f: Factor, g: Factor) -> Factor:
    if len(g.entries) > len(f.entries):
        f, g = g, f  # index the smaller side
    shared = tuple(sorted(set(f.scope) & set(g.scope)))
    scope = tuple(sorted(set(f.scope) | set(g.scope)))
    f_shared = _positions(f.scope, shared)
    g_shared = _positions(g.scope, shared)
    g_only = [v for v in g.scope if v not in set(f.scope)]
    g_only_pos = _positions(g.scope, g_only)

    index: dict[tuple[int, ...], list[tuple[tuple[int, ...], int]]] = {}
    for gkey, gfreq in g.entries.items():
        k = tuple(gkey[p] for p in g_shared)
        index.setdefault(k, []).append(
            (tuple(gkey[p] for p in g_only_pos), gfreq)
        )

    fset = set(f.scope)
    plan = []  # per output position: ("f", idx) or ("g", idx into gtail)
    for v in scope:
        if v in fset:
            plan.append(("f", f.scope.index(v)))
        else:
            plan.append(("g", g_only.index(v)))

    entries: dict[tuple[int, ...], int] = {}
    for fkey, ffreq in f.entries.items():
        probe = tuple(fkey[p] for p in f_shared)
        for gtail, gfreq in index.get(probe, ()):
            key = tuple(
                fkey[i] if side == "f" else gtail[i] for side, i in plan
            )
            entries[key] = checked_mul(ffreq, gfreq)
    return Factor(scope, entries)


def product(factors) -> Factor:
    factors = list(factors)
    if not factors:
        raise ValueError("product of an empty factor list")
    acc = factors[0]
    for f in factors[1:]:
        acc = _pairwise_product(acc, f)
    return acc


def sum_out(factor: Factor, variables) -> Factor:
    drop = set(variables)
    if not drop <= set(factor.scope):
        raise ValueError(f"cannot sum out {drop - set(factor.scope)}: not in scope")
    keep = tuple(v for v in factor.scope if v not in drop)
    keep_pos = _positions(factor.scope, keep)
    entries: dict[tuple[int, ...], int] = {}
    for key, freq in factor.entries.items():
        k = tuple(key[p] for p in keep_pos)
        entries[k] = checked_add(entries.get(k, 0), freq)
    return Factor(keep, entries)


def select(factor: Factor, assignment: dict[str, int]) -> Factor:
    if not assignment:
        return factor
    if not set(assignment) <= set(factor.scope):
        raise ValueError("selection variables must be in the factor scope")
    sel_pos = [(factor.scope.index(v), c) for v, c in assignment.items()]
    keep = tuple(v for v in factor.scope if v not in assignment)
    keep_pos = _positions(factor.scope, keep)
    entries = {}
    for key, freq in factor.entries.items():
        if all(key[p] == c for p, c in sel_pos):
            entries[tuple(key[p] for p in keep_pos)] = freq
    return Factor(keep, entries)


def shared_values(factors, var: str) -> list[int]:
    """Ascending intersection of each factor's projection onto ``var``."""
    factors = list(factors)
    common = set(factors[0].project_values(var))
    for f in factors[1:]:
        common &= set(f.project_values(var))
        if not common:
            break
    return sorted(common)


@dataclass
class ConditionalFactor:
    """Per parent tuple, the surviving child tuples with (bucket, fac).

    bucket is the local-potential frequency of (parent, child); fac is the
    product of child-message frequencies at that entry. Child lists are kept
    ascending by child tuple.
    """

    parent_scope: tuple[str, ...]
    child_scope: tuple[str, ...]
    entries: dict[tuple[int, ...], list[tuple[tuple[int, ...], int, int]]] = field(
        repr=False, default_factory=dict
    )

    def parent_count(self) -> int:
        return len(self.entries)

    def entry_count(self) -> int:
        return sum(len(v) for v in self.entries.values())


def conditionalize(local: Factor, messages, parents) -> ConditionalFactor:
    """Split a product into (bucket, fac) entries conditioned on ``parents``.

    Only local entries whose codes appear in every message survive; the
    messages' scopes must be contained in the local scope.
    """
    parents = tuple(sorted(parents))
    messages = list(messages)
    scope_set = set(local.scope)
    if not set(parents) <= scope_set:
        raise ValueError("parents must be contained in the local scope")
    for m in messages:
        if not set(m.scope) <= scope_set:
            raise ValueError("message scope must be contained in the local scope")

    child = tuple(v for v in local.scope if v not in set(parents))
    ppos = _positions(local.scope, parents)
    cpos = _positions(local.scope, child)
    mpos = [_positions(local.scope, m.scope) for m in messages]

    out = ConditionalFactor(parents, child)
    for key in sorted(local.entries):
        fac = 1
        dead = False
        for m, pos in zip(messages, mpos):
            mf = m.entries.get(tuple(key[p] for p in pos))
            if mf is None:
                dead = True
                break
            fac = checked_mul(fac, mf)
        if dead:
            continue
        pkey = tuple(key[p] for p in ppos)
        ckey = tuple(key[p] for p in cpos)
        out.entries.setdefault(pkey, []).append((ckey, local.entries[key], fac))
    return out

"""Generator construction: eliminate variables, record conditional bands.

Two phases. Early projection sums every non-projected variable out of the
product of its incident potentials without recording anything; the induced
potential replaces the consumed ones and keeps acting as a local potential.
Then the leaves-to-root phase eliminates each plan unit: the product of local
potentials is conditionalized on the unit's parent set (recording bucket/fac
entries), and the summed-out remainder propagates upward as a message. The
root marginal is the same conditionalization with an empty parent set, so its
entries carry the local/below split the generation recursion needs to seed
its bucket product.

Cyclic plans first fuse each junction-tree node's potentials into a single
joint potential via a recursive descent that only ever visits value
combinations shared by every participating potential.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .factors import (
    ConditionalFactor,
    Factor,
    checked_mul,
    conditionalize,
    product,
    select,
    shared_values,
    sum_out,
)
from .graphs import EliminationPlan
from .relation import Dictionary

@dataclass
class Generator:
    """Root conditional plus per-depth bands of conditional potentials.

    ``bands[0]`` holds exactly the root conditional (empty parent scope);
    deeper bands hold the conditionals of all units at that depth, in
    deterministic unit order.
    """

    var_dicts: dict[str, Dictionary]
    bands: list[list[ConditionalFactor]]
    parent: dict[tuple[str, ...], tuple[str, ...]] = field(default_factory=dict)
    max_potential_entries: int = 0

    @property
    def root_scope(self) -> tuple[str, ...]:
        return self.bands[0][0].child_scope

    def band_scopes(self) -> list[tuple[str, ...]]:
        out = []
        for band in self.bands:
            scope: tuple[str, ...] = ()
            for psi in band:
                scope += psi.child_scope
            out.append(scope)
        return out

    def output_variables(self) -> tuple[str, ...]:
        flat: tuple[str, ...] = ()
        for scope in self.band_scopes():
            flat += scope
        return flat

    def root_marginal(self) -> Factor:
        root = self.bands[0][0]
        entries = {
            child: checked_mul(bucket, fac)
            for child, bucket, fac in root.entries.get((), [])
        }
        return Factor(root.child_scope, entries)

    def join_size(self) -> int:
        return self.root_marginal().total()


def potential_join(
    maxclique,
    clique_factors,
    order=None,
    domains: dict[str, Dictionary] | None = None,
    visit_log: list | None = None,
) -> Factor:
    """Joint potential of all potentials inside one maxclique.

    Recursive descent per variable: only values shared by every potential
    containing the variable are followed, so combinations that cannot join
    are never materialized. Frequencies multiply. Variables covered by no
    potential draw their values from ``domains`` with an implicit frequency
    of one (the fill-in potential).
    """
    scope = tuple(sorted(maxclique))
    factors = list(clique_factors)
    for f in factors:
        if not set(f.scope) <= set(scope):
            raise ValueError(f"potential scope {f.scope} outside maxclique {scope}")
    if len(factors) == 1 and factors[0].scope == scope:
        return factors[0]
    order = list(order) if order is not None else list(scope)
    if sorted(order) != list(scope):
        raise ValueError("order must cover exactly the maxclique variables")

    entries: dict[tuple[int, ...], int] = {}
    assignment: dict[str, int] = {}

    def descend(i: int, facs: list[Factor]) -> None:
        if i == len(order):
            freq = 1
            for f in facs:
                freq = checked_mul(freq, f.entries[()])
            entries[tuple(assignment[v] for v in scope)] = freq
            return
        v = order[i]
        including = [f for f in facs if v in f.scope]
        excluding = [f for f in facs if v not in f.scope]
        if including:
            values = shared_values(including, v)
        else:
            if domains is None or v not in domains:
                raise ValueError(
                    f"variable {v!r} is covered by no potential and no domain"
                )
            values = range(len(domains[v]))
        for code in values:
            if visit_log is not None:
                visit_log.append((v, code))
            assignment[v] = code
            descend(i + 1, [select(f, {v: code}) for f in including] + excluding)
            del assignment[v]

    descend(0, factors)
    return Factor(scope, entries)


def build_generator(
    plan: EliminationPlan,
    factors,
    var_dicts: dict[str, Dictionary],
    timings: dict[str, float] | None = None,
) -> Generator:
    working: list[Factor] = list(factors)
    max_entries = max((len(f) for f in factors), default=0)

    def pop_touching(variables) -> list[Factor]:
        vs = set(variables)
        hit = [f for f in working if vs & set(f.scope)]
        working[:] = [f for f in working if not (vs & set(f.scope))]
        return hit

    # Phase 1: delete non-projected variables; nothing is recorded.
    for var in plan.early_order:
        hit = pop_touching([var])
        phi = product(hit)
        max_entries = max(max_entries, len(phi))
        working.append(sum_out(phi, [var]))

    # Cyclic plans: fuse each junction-tree node into one joint potential.
    if not plan.is_tree:
        start = time.perf_counter()
        jt = plan.junction_tree
        remaining = list(working)
        fused: list[Factor] = []
        for node in jt.nodes:
            node_set = set(node)
            assigned = [f for f in remaining if set(f.scope) <= node_set]
            remaining = [f for f in remaining if not set(f.scope) <= node_set]
            pot = potential_join(node, assigned, domains=var_dicts)
            max_entries = max(max_entries, len(pot))
            fused.append(pot)
        if remaining:  # every surviving scope is a clique of the triangulation
            raise AssertionError(
                f"potentials not absorbed by any maxclique: {remaining}"
            )
        working[:] = fused
        if timings is not None:
            timings["potential-join"] = (time.perf_counter() - start) * 1000.0

    bands: list[list[ConditionalFactor]] = [[] for _ in range(plan.band_count)]

    # Phase 2: leaves-to-root sum-product, recording one conditional per unit.
    # Messages travel strictly along the rooted structure's edges: a child
    # separator may avoid its parent's residual entirely, so routing by scope
    # would park the message at the wrong level and skew band frequencies.
    routed: dict[object, list[Factor]] = {}
    for unit in plan.order:
        locals_ = pop_touching(unit)
        if not locals_:
            raise AssertionError(f"no local potential covers unit {unit}")
        messages = routed.pop(plan.unit_node[unit], [])
        local = product(locals_)
        phi_alpha = product([local] + messages)
        max_entries = max(max_entries, len(phi_alpha))
        parents = tuple(sorted(set(phi_alpha.scope) - set(unit)))
        psi = conditionalize(local, messages, parents)
        bands[plan.depth[unit]].append(psi)
        target = plan.node_parent[plan.unit_node[unit]]
        routed.setdefault(target, []).append(sum_out(phi_alpha, unit))

    # Root: same split with an empty parent set.
    messages = routed.pop(plan.root_node, [])
    if routed:
        raise AssertionError(f"messages routed to unknown nodes: {list(routed)}")
    root_set = set(plan.root)
    for f in working:
        if not set(f.scope) <= root_set:
            raise AssertionError(f"leftover potential {f} outside root {plan.root}")
    locals_ = list(working)
    if locals_:
        local = product(locals_)
    else:
        # Tree roots often have no local potential: the domain is whatever
        # the messages agree on, with a unit local frequency.
        base = product(messages)
        local = Factor(base.scope, {key: 1 for key in base.entries})
    max_entries = max(max_entries, len(local))
    root_psi = conditionalize(local, messages, ())
    bands[0].append(root_psi)

    parent_map = dict(plan.parent)
    parent_map[tuple(sorted(plan.root))] = ()
    return Generator(
        var_dicts=var_dicts,
        bands=bands,
        parent=parent_map,
        max_potential_entries=max_entries,
    )

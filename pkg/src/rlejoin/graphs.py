"""Elimination ordering, triangulation, junction trees, fractional edge covers.

The planner turns a connected join graph into an elimination plan with two
phases: non-projected variables are greedily removed first (min fill-in over
the full graph), then the remaining graph is either rooted directly (when it
is a tree) or triangulated into a junction tree of maxcliques whose residuals
become the elimination units. Ties in min fill-in are broken by ascending
variable name so every run is reproducible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DisconnectedGraphError
from .query import JoinGraph

Unit = tuple[str, ...]

MAX_LP_EDGES = 8


def _fill_count(adj: dict[str, set[str]], v: str) -> int:
    nbrs = sorted(adj[v])
    missing = 0
    for i, a in enumerate(nbrs):
        for b in nbrs[i + 1 :]:
            if b not in adj[a]:
                missing += 1
    return missing


def _greedy_eliminate(adj: dict[str, set[str]], candidates: set[str]):
    """Eliminate ``candidates`` from ``adj`` (mutated) by min fill-in.

    Returns (order, fill_edges, emitted_cliques). Each elimination emits the
    clique {v} ∪ neighbors(v) and fully connects the remaining neighbors.
    """
    order: list[str] = []
    fills: list[tuple[str, str]] = []
    cliques: list[tuple[str, ...]] = []
    remaining = set(candidates)
    while remaining:
        v = min(remaining, key=lambda c: (_fill_count(adj, c), c))
        nbrs = sorted(adj[v])
        cliques.append(tuple(sorted([v] + nbrs)))
        for i, a in enumerate(nbrs):
            for b in nbrs[i + 1 :]:
                if b not in adj[a]:
                    adj[a].add(b)
                    adj[b].add(a)
                    fills.append((a, b))
        for n in nbrs:
            adj[n].discard(v)
        del adj[v]
        remaining.discard(v)
        order.append(v)
    return order, fills, cliques


def _drop_subsumed(cliques: list[tuple[str, ...]]) -> list[tuple[str, ...]]:
    sets = [set(c) for c in cliques]
    kept = []
    for i, c in enumerate(cliques):
        subsumed = any(
            j != i and sets[i] <= sets[j] and (sets[i] != sets[j] or j < i)
            for j in range(len(cliques))
        )
        if not subsumed:
            kept.append(c)
    return kept


def min_fill_in(graph: JoinGraph, frozen: frozenset[str] = frozenset()):
    """Greedy min fill-in over the non-frozen variables.

    Returns (elimination order, fill-in edges, maxcliques). Maxcliques are
    the emitted cliques not subsumed by another emitted clique.
    """
    adj = graph.copy_adjacency()
    candidates = set(graph.variables) - set(frozen)
    order, fills, cliques = _greedy_eliminate(adj, candidates)
    return order, fills, _drop_subsumed(cliques)


@dataclass
class JunctionTree:
    """Tree of maxcliques in a root-first order satisfying the R.I.P."""

    nodes: tuple[tuple[str, ...], ...]
    edges: tuple[tuple[int, int, tuple[str, ...]], ...]  # (child, parent, separator)

    def parent_of(self, idx: int) -> tuple[int, tuple[str, ...]] | None:
        for child, parent, sep in self.edges:
            if child == idx:
                return parent, sep
        return None


def build_junction_tree(maxcliques, root_index: int = 0) -> JunctionTree:
    """Maximum-weight spanning tree over the maxclique intersection graph.

    Edge weight is the separator size; ties are broken by the lexicographically
    smallest (sorted) pair of cliques. Nodes are reordered root-first (BFS from
    ``root_index``) so the returned order obeys the R.I.P.
    """
    cliques = [tuple(sorted(c)) for c in maxcliques]
    n = len(cliques)
    if n == 1:
        return JunctionTree((cliques[0],), ())

    weighted = []
    for i in range(n):
        for j in range(i + 1, n):
            sep = tuple(sorted(set(cliques[i]) & set(cliques[j])))
            if sep:
                pair = tuple(sorted([cliques[i], cliques[j]]))
                weighted.append((-len(sep), pair, i, j, sep))
    weighted.sort()

    parent_uf = list(range(n))

    def find(x):
        while parent_uf[x] != x:
            parent_uf[x] = parent_uf[parent_uf[x]]
            x = parent_uf[x]
        return x

    chosen = []
    for _, _, i, j, sep in weighted:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent_uf[ri] = rj
            chosen.append((i, j, sep))
    if len(chosen) != n - 1:
        raise DisconnectedGraphError("maxclique intersection graph is disconnected")

    neighbors: dict[int, list[tuple[int, tuple[str, ...]]]] = {i: [] for i in range(n)}
    for i, j, sep in chosen:
        neighbors[i].append((j, sep))
        neighbors[j].append((i, sep))

    bfs = [root_index]
    new_index = {root_index: 0}
    edges_out: list[tuple[int, int, tuple[str, ...]]] = []
    head = 0
    while head < len(bfs):
        cur = bfs[head]
        head += 1
        for nxt, sep in sorted(neighbors[cur], key=lambda t: cliques[t[0]]):
            if nxt not in new_index:
                new_index[nxt] = len(bfs)
                bfs.append(nxt)
                edges_out.append((new_index[nxt], new_index[cur], sep))
    nodes = tuple(cliques[i] for i in bfs)
    return JunctionTree(nodes, tuple(edges_out))


def check_rip(jt: JunctionTree) -> bool:
    """True iff the node order has the Running Intersection Property."""
    history: set[str] = set()
    for i, clique in enumerate(jt.nodes):
        if i > 0:
            inter = set(clique) & history
            if not any(inter == set(clique) & set(jt.nodes[j]) for j in range(i)):
                return False
        history.update(clique)
    return True


@dataclass
class EliminationPlan:
    """Two-phase plan: early (non-projected) order, then leaves-to-root units.

    ``order`` excludes the root unit; units are singletons on trees and
    junction-tree node residuals otherwise. ``depth`` drives band assignment
    during generator construction (root is depth 0). ``unit_node`` and
    ``node_parent`` name each unit's node in the rooted structure and its
    parent node: upward messages are routed along these edges, never by scope
    inspection (a child separator may avoid its parent's residual entirely).
    """

    early_order: tuple[str, ...]
    order: tuple[Unit, ...]
    parent: dict[Unit, Unit]
    depth: dict[Unit, int]
    root: Unit
    fill_ins: tuple[tuple[str, str], ...]
    is_tree: bool
    unit_node: dict[Unit, object]
    node_parent: dict[object, object]
    root_node: object
    junction_tree: JunctionTree | None = None

    @property
    def band_count(self) -> int:
        return 1 + (max(self.depth.values()) if self.depth else 0)


def _bfs_tree(adj: dict[str, set[str]], root: str):
    parent = {root: None}
    depth = {root: 0}
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for v in sorted(adj[u]):
                if v not in depth:
                    parent[v] = u
                    depth[v] = depth[u] + 1
                    nxt.append(v)
        frontier = nxt
    return parent, depth


def plan_elimination(
    graph: JoinGraph, projection, root_hint: str | None = None
) -> EliminationPlan:
    projection = tuple(projection)
    root_var = root_hint if root_hint is not None else projection[0]
    if root_var not in projection:
        raise ValueError(f"root variable {root_var!r} is not projected")

    adj = graph.copy_adjacency()
    non_projected = set(graph.variables) - set(projection)
    early_order, early_fills, _ = _greedy_eliminate(adj, non_projected)

    kept = sorted(adj)
    edge_count = sum(len(adj[v]) for v in kept) // 2

    if edge_count == len(kept) - 1:
        parent_var, depth_var = _bfs_tree(adj, root_var)
        units = sorted(
            ((v,) for v in kept if v != root_var),
            key=lambda u: (-depth_var[u[0]], u),
        )
        return EliminationPlan(
            early_order=tuple(early_order),
            order=tuple(units),
            parent={(v,): (parent_var[v],) for v in kept if v != root_var},
            depth={(v,): depth_var[v] for v in kept if v != root_var},
            root=(root_var,),
            fill_ins=tuple(early_fills),
            is_tree=True,
            unit_node={(v,): v for v in kept if v != root_var},
            node_parent={v: parent_var[v] for v in kept if v != root_var},
            root_node=root_var,
        )

    tri_adj = {v: set(nbrs) for v, nbrs in adj.items()}
    _, tri_fills, cliques = _greedy_eliminate(tri_adj, set(kept))
    maxcliques = _drop_subsumed(cliques)
    root_index = next(i for i, c in enumerate(maxcliques) if root_var in c)
    jt = build_junction_tree(maxcliques, root_index)

    parent: dict[Unit, Unit] = {}
    depth: dict[Unit, int] = {}
    unit_node: dict[Unit, object] = {}
    node_parent: dict[object, object] = {}
    node_depth = {0: 0}
    for child, par, sep in jt.edges:
        node_depth[child] = node_depth[par] + 1
    for child, par, sep in jt.edges:
        residual = tuple(sorted(set(jt.nodes[child]) - set(sep)))
        parent[residual] = sep
        depth[residual] = node_depth[child]
        unit_node[residual] = child
        node_parent[child] = par
    units = sorted(parent, key=lambda u: (-depth[u], u))
    return EliminationPlan(
        early_order=tuple(early_order),
        order=tuple(units),
        parent=parent,
        depth=depth,
        root=jt.nodes[0],
        fill_ins=tuple(early_fills) + tuple(tri_fills),
        is_tree=False,
        unit_node=unit_node,
        node_parent=node_parent,
        root_node=0,
        junction_tree=jt,
    )


@dataclass
class EdgeCover:
    """Optimal fractional edge cover: weights per hyperedge, rho, size bound."""

    weights: tuple[Fraction, ...]
    rho: Fraction
    bound: float


def _cover_bound(sizes, weights) -> float:
    bound = 1.0
    for s, w in zip(sizes, weights):
        if w == 0:
            continue
        bound *= float(s) ** float(w)
    return bound


def fractional_edge_cover(graph: JoinGraph, table_sizes) -> EdgeCover:
    """Exact LP: minimize sum of weights s.t. every variable is covered.

    Solved by enumerating polytope vertices in rational arithmetic: choose a
    set of coverage constraints to make tight and pin the remaining weights at
    a bound (0 or 1), then solve the square rational system. Guarded at
    MAX_LP_EDGES hyperedges; desk-scale queries stay far below that.
    """
    edges = [set(e) for e in graph.hyperedges]
    sizes = list(table_sizes)
    m = len(edges)
    if len(sizes) != m:
        raise ValueError("table_sizes must align with the hyperedges")
    if m > MAX_LP_EDGES:
        raise ValueError(f"exact LP solver supports at most {MAX_LP_EDGES} tables")

    variables = list(graph.variables)
    cover_rows = []
    for v in variables:
        row = [Fraction(1) if v in e else Fraction(0) for e in edges]
        cover_rows.append(row)

    def feasible(lam) -> bool:
        if any(x < 0 or x > 1 for x in lam):
            return False
        return all(
            sum(r * x for r, x in zip(row, lam)) >= 1 for row in cover_rows
        )

    best = None  # (rho, bound, weights)
    for k in range(0, m + 1):
        for free in itertools.combinations(range(m), k):
            fixed = [i for i in range(m) if i not in free]
            for pattern in itertools.product((Fraction(0), Fraction(1)), repeat=len(fixed)):
                base = {i: val for i, val in zip(fixed, pattern)}
                if k == 0:
                    lam = [base[i] for i in range(m)]
                    if feasible(lam):
                        cand = (sum(lam), _cover_bound(sizes, lam), tuple(lam))
                        if best is None or cand < best:
                            best = cand
                    continue
                for tight in itertools.combinations(range(len(cover_rows)), k):
                    mat = [[cover_rows[t][f] for f in free] for t in tight]
                    rhs = [
                        Fraction(1)
                        - sum(cover_rows[t][i] * base[i] for i in fixed)
                        for t in tight
                    ]
                    sol = _solve_square(mat, rhs)
                    if sol is None:
                        continue
                    lam = [Fraction(0)] * m
                    for i in fixed:
                        lam[i] = base[i]
                    for f, val in zip(free, sol):
                        lam[f] = val
                    if feasible(lam):
                        cand = (sum(lam), _cover_bound(sizes, lam), tuple(lam))
                        if best is None or cand < best:
                            best = cand
    if best is None:
        raise DisconnectedGraphError("no feasible edge cover: uncovered variable")
    rho, bound, weights = best
    return EdgeCover(weights=weights, rho=rho, bound=bound)


def _solve_square(mat, rhs):
    """Gaussian elimination over Fractions; None if singular."""
    n = len(mat)
    a = [row[:] + [r] for row, r in zip(mat, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return None
        a[col], a[pivot] = a[pivot], a[col]
        inv = a[col][col]
        a[col] = [x / inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def agm_bound_holds(table_sizes, weights, cardinality: int) -> bool:
    """Exact integer check that prod(size^weight) >= cardinality."""
    denom = 1
    for w in weights:
        denom = denom * w.denominator // math.gcd(denom, w.denominator)
    lhs = 1
    for s, w in zip(table_sizes, weights):
        exp = w.numerator * (denom // w.denominator)
        if exp:
            lhs *= int(s) ** exp
    return lhs >= int(cardinality) ** denom

"""Offline compilation of a Bayesian network into a junction tree.

Pipeline: moralize -> triangulate (min-fill) -> extract maximal cliques ->
maximum spanning tree over separator sizes -> assign CPTs -> precompute the
per-separator-entry index mapping tables that message passing consumes.

Everything here is deterministic: ties are broken by table size and then by
ascending ids, so compiling the same network twice yields identical trees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoCoveringCliqueError, NotChordalError
from .model import BayesianNetwork
from .potential import Scope

FLAT = "flat"
INTERLEAVED = "interleaved"


@dataclass(frozen=True)
class Clique:
    id: int
    members: tuple[int, ...]  # ascending variable ids
    scope: Scope


@dataclass(frozen=True)
class Separator:
    id: int
    edge: tuple[int, int]  # (lower clique id, higher clique id)
    members: tuple[int, ...]
    scope: Scope


@dataclass
class JunctionTree:
    """Compiled tree structure; immutable after construction.

    `neighbors[c]` lists (adjacent clique id, separator id) pairs in
    ascending clique-id order.  Disconnected networks compile to a forest
    with one root per component.
    """

    cards: tuple[int, ...]  # cardinality per variable id
    cliques: list[Clique]
    separators: list[Separator]
    neighbors: list[list[tuple[int, int]]]
    roots: list[int]
    cpt_assignment: dict[int, int]  # variable id -> clique id

    def __len__(self):
        return len(self.cliques)

    def clique_sizes(self) -> list[int]:
        return [c.scope.size for c in self.cliques]

    def separator_sizes(self) -> list[int]:
        return [s.scope.size for s in self.separators]

    def components(self) -> list[list[int]]:
        """Clique ids per connected component, one list per root."""
        seen = set()
        out = []
        for root in self.roots:
            comp = []
            stack = [root]
            while stack:
                c = stack.pop()
                if c in seen:
                    continue
                seen.add(c)
                comp.append(c)
                stack.extend(n for n, _ in self.neighbors[c])
            out.append(sorted(comp))
        return out


def _scope_of(members, cards) -> Scope:
    return Scope(tuple(members), tuple(cards[m] for m in members))


# --- graph steps -----------------------------------------------------------

def moralize(net: BayesianNetwork) -> dict[int, set[int]]:
    """Undirected skeleton plus an edge between every pair of co-parents."""
    adj: dict[int, set[int]] = {v.id: set() for v in net.variables}

    def connect(a, b):
        adj[a].add(b)
        adj[b].add(a)

    for cpt in net.cpts:
        for p in cpt.parents:
            connect(p, cpt.child)
        for i, p in enumerate(cpt.parents):
            for q in cpt.parents[i + 1 :]:
                connect(p, q)
    return adj


def triangulate(graph: dict[int, set[int]], cards) -> tuple[dict[int, set[int]], list[int]]:
    """Add fill-in edges until chordal, using the min-fill heuristic.

    Vertex choice: fewest fill edges, then smallest resulting clique table
    size (product of cardinalities over the closed neighborhood), then lowest
    id.  Returns the chordal graph and the elimination order, which is a
    perfect elimination order for it.
    """
    chordal = {v: set(nbrs) for v, nbrs in graph.items()}
    work = {v: set(nbrs) for v, nbrs in graph.items()}
    remaining = set(work)

    def fill_count(v):
        nbrs = sorted(work[v])
        count = 0
        for i, a in enumerate(nbrs):
            for b in nbrs[i + 1 :]:
                if b not in work[a]:
                    count += 1
        return count

    def table_size(v):
        size = cards[v]
        for n in work[v]:
            size *= cards[n]
        return size

    fills = {v: fill_count(v) for v in remaining}
    sizes = {v: table_size(v) for v in remaining}
    order: list[int] = []

    while remaining:
        v = min(remaining, key=lambda u: (fills[u], sizes[u], u))
        order.append(v)
        nbrs = sorted(work[v])

        dirty = set(nbrs)
        for i, a in enumerate(nbrs):
            for b in nbrs[i + 1 :]:
                if b not in work[a]:
                    chordal[a].add(b)
                    chordal[b].add(a)
                    work[a].add(b)
                    work[b].add(a)
                    # a fill edge changes the counts of its endpoints and of
                    # every vertex adjacent to both
                    dirty |= work[a] & work[b]

        for n in nbrs:
            work[n].discard(v)
        del work[v]
        remaining.discard(v)

        for u in dirty & remaining:
            fills[u] = fill_count(u)
            sizes[u] = table_size(u)
    return chordal, order


def extract_cliques(chordal: dict[int, set[int]], order: list[int]) -> list[tuple[int, ...]]:
    """All maximal cliques, as ascending member tuples in deterministic order."""
    position = {v: i for i, v in enumerate(order)}
    candidates = []
    for v in order:
        later = {u for u in chordal[v] if position[u] > position[v]}
        for a in later:
            if not later <= chordal[a] | {a}:
                raise NotChordalError(
                    f"elimination order is not perfect at vertex {v}"
                )
        candidates.append(frozenset(later | {v}))

    maximal = []
    for c in candidates:
        if any(c < other for other in candidates):
            continue
        if c not in maximal:
            maximal.append(c)
    return sorted(tuple(sorted(c)) for c in maximal)


def build_tree(clique_members: list[tuple[int, ...]], cards, cpt_assignment=None) -> JunctionTree:
    """Assemble the tree skeleton from maximal cliques.

    Maximum spanning tree over the clique graph weighted by separator size
    (number of shared variables), Kruskal with ties broken by the lower
    (i, k) clique pair.  Disconnected inputs yield a forest; each component
    gets its own root, the clique with the largest table (ties: lowest id).
    """
    cliques = [
        Clique(i, members, _scope_of(members, cards))
        for i, members in enumerate(clique_members)
    ]
    n = len(cliques)

    candidates = []
    for i in range(n):
        for k in range(i + 1, n):
            shared = sorted(set(cliques[i].members) & set(cliques[k].members))
            if shared:
                candidates.append((-len(shared), i, k, tuple(shared)))
    candidates.sort()

    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    separators: list[Separator] = []
    neighbors: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for _, i, k, shared in candidates:
        ri, rk = find(i), find(k)
        if ri == rk:
            continue
        parent[ri] = rk
        sep = Separator(len(separators), (i, k), shared, _scope_of(shared, cards))
        separators.append(sep)
        neighbors[i].append((k, sep.id))
        neighbors[k].append((i, sep.id))
    for lst in neighbors:
        lst.sort()

    by_component: dict[int, list[int]] = {}
    for c in range(n):
        by_component.setdefault(find(c), []).append(c)
    roots = []
    for comp in by_component.values():
        roots.append(max(comp, key=lambda c: (cliques[c].scope.size, -c)))
    roots.sort()

    return JunctionTree(
        cards=tuple(cards),
        cliques=cliques,
        separators=separators,
        neighbors=neighbors,
        roots=roots,
        cpt_assignment=dict(cpt_assignment or {}),
    )


def assign_cpts(net: BayesianNetwork, tree: JunctionTree) -> dict[int, int]:
    """Each CPT goes to the smallest covering clique, ties to the lowest id."""
    assignment = {}
    for cpt in net.cpts:
        scope_vars = set(cpt.parents) | {cpt.child}
        best = None
        for clique in tree.cliques:
            if scope_vars <= set(clique.members):
                key = (clique.scope.size, clique.id)
                if best is None or key < best[0]:
                    best = (key, clique.id)
        if best is None:
            raise NoCoveringCliqueError(
                f"no clique covers CPT of variable {cpt.child}"
            )
        assignment[cpt.child] = best[1]
    return assignment


# --- mapping tables ----------------------------------------------------------

def _index_offsets(scope: Scope, subset_positions) -> np.ndarray:
    """Ascending flat-index offsets spanned by the given scope positions.

    Enumerates all digit combinations of the selected positions (others held
    at zero); with full-range digits the lexicographic enumeration is already
    ascending in flat-index value.
    """
    strides = scope.strides()
    offsets = np.zeros(1, dtype=np.int64)
    for pos in subset_positions:
        step = np.arange(scope.cards[pos], dtype=np.int64) * strides[pos]
        offsets = (offsets[:, None] + step[None, :]).ravel()
    return offsets


def build_mapping_table(clique_scope: Scope, sep_scope: Scope, dtype=None) -> np.ndarray:
    """2-D array: row j lists, ascending, the clique indices mapping to
    separator entry j."""
    sep_positions = [clique_scope.position(v) for v in sep_scope.ids]
    rest_positions = [
        p for p in range(len(clique_scope)) if p not in sep_positions
    ]
    rest = _index_offsets(clique_scope, rest_positions)

    # separator rows in separator-index order, not clique order
    strides = clique_scope.strides()
    row_base = np.zeros(1, dtype=np.int64)
    for pos in sep_positions:
        step = np.arange(clique_scope.cards[pos], dtype=np.int64) * strides[pos]
        row_base = (row_base[:, None] + step[None, :]).ravel()

    table = row_base[:, None] + rest[None, :]
    if dtype is None:
        dtype = np.int32 if clique_scope.size <= np.iinfo(np.int32).max else np.int64
    return np.ascontiguousarray(table, dtype=dtype)


@dataclass
class MappingTableSet:
    """Per directed (clique, separator) pair: the index lists mu[c,s][j].

    Stored as one 2-D integer array per pair, shape (separator size, clique
    size / separator size); row j is mu[c,s][j] in ascending order.  The
    `layout` tag records the physical memory order: "flat" keeps each row
    contiguous, "interleaved" stores column-major so that the p-th elements
    of all rows sit in adjacent cells.
    """

    layout: str
    tables: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    def mu(self, clique_id: int, sep_id: int) -> np.ndarray:
        return self.tables[(clique_id, sep_id)]

    def physical(self, clique_id: int, sep_id: int) -> np.ndarray:
        """The storage order of one table, for layout inspection."""
        order = "F" if self.layout == INTERLEAVED else "C"
        return self.tables[(clique_id, sep_id)].ravel(order=order)


def build_mapping_tables(tree: JunctionTree, layout: str = FLAT) -> MappingTableSet:
    """Precompute mapping tables for every clique/adjacent-separator pair."""
    out = MappingTableSet(layout=layout)
    for sep in tree.separators:
        for clique_id in sep.edge:
            table = build_mapping_table(tree.cliques[clique_id].scope, sep.scope)
            if layout == INTERLEAVED:
                table = np.asfortranarray(table)
            out.tables[(clique_id, sep.id)] = table
    return out


def relayout_mapping_tables(mapping: MappingTableSet, layout: str) -> MappingTableSet:
    """Same logical contents, different physical storage order."""
    if layout not in (FLAT, INTERLEAVED):
        raise ValueError(f"unknown layout {layout!r}")
    convert = np.asfortranarray if layout == INTERLEAVED else np.ascontiguousarray
    return MappingTableSet(
        layout=layout,
        tables={key: convert(t) for key, t in mapping.tables.items()},
    )


def check_mapping_tables(tree: JunctionTree, mapping: MappingTableSet) -> None:
    """Assert the partition and agreement invariants; test/debug helper.

    Agreement is checked through the projection codec, a separate code path
    from the offset arithmetic that builds the tables.
    """
    from .potential import projection_indices

    for sep in tree.separators:
        for clique_id in sep.edge:
            clique = tree.cliques[clique_id]
            mu = mapping.mu(clique_id, sep.id)
            assert mu.shape == (sep.scope.size, clique.scope.size // sep.scope.size)
            flat = np.sort(mu.ravel())
            assert np.array_equal(flat, np.arange(clique.scope.size)), (
                f"mu[{clique_id},{sep.id}] is not a partition"
            )
            assert np.all(np.diff(mu, axis=1) > 0), "rows must be ascending"
            proj = projection_indices(clique.scope, sep.scope)
            expected = np.arange(sep.scope.size, dtype=np.int64)[:, None]
            assert np.array_equal(proj[mu], np.broadcast_to(expected, mu.shape)), (
                f"mu[{clique_id},{sep.id}] rows disagree with the separator codec"
            )


# --- pipeline ----------------------------------------------------------------

@dataclass
class CompiledNetwork:
    """A junction tree plus its mapping tables, ready for propagation."""

    tree: JunctionTree
    mappings: MappingTableSet


def compile_network(net: BayesianNetwork, layout: str = FLAT) -> CompiledNetwork:
    """Full offline step: network in, tree with mapping tables out."""
    moral = moralize(net)
    chordal, order = triangulate(moral, net.cardinalities)
    members = extract_cliques(chordal, order)
    tree = build_tree(members, net.cardinalities)
    tree.cpt_assignment = assign_cpts(net, tree)
    mappings = build_mapping_tables(tree, layout=layout)
    return CompiledNetwork(tree=tree, mappings=mappings)


def check_junction_tree(tree: JunctionTree) -> None:
    """Verify structural invariants; raises AssertionError on violation."""
    n = len(tree.cliques)
    assert len(tree.separators) == n - len(tree.roots), "edge count vs components"

    for sep in tree.separators:
        i, k = sep.edge
        a = set(tree.cliques[i].members)
        b = set(tree.cliques[k].members)
        assert tuple(sorted(a & b)) == sep.members, "separator != intersection"
        assert sep.members, "empty separator"

    for i, c in enumerate(tree.cliques):
        assert c.id == i
        assert c.members == tuple(sorted(c.members)), "members must be ascending"
        for other in tree.cliques:
            if other.id != c.id:
                assert not set(c.members) <= set(other.members), (
                    f"clique {c.id} contained in clique {other.id}"
                )

    # running intersection: cliques holding any one variable form a subtree
    n_vars = len(tree.cards)
    for var in range(n_vars):
        holders = {c.id for c in tree.cliques if var in c.members}
        if len(holders) <= 1:
            continue
        start = next(iter(holders))
        seen = {start}
        stack = [start]
        while stack:
            c = stack.pop()
            for nbr, sep_id in tree.neighbors[c]:
                if nbr in holders and nbr not in seen:
                    if var in tree.separators[sep_id].members:
                        seen.add(nbr)
                        stack.append(nbr)
        assert seen == holders, f"running intersection fails for variable {var}"

    for var, clique_id in tree.cpt_assignment.items():
        assert var in tree.cliques[clique_id].members


# --- statistics --------------------------------------------------------------

@dataclass
class StatsReport:
    """Structural statistics of one compiled tree."""

    n_cliques: int
    clique_max: int
    clique_min: int
    clique_avg: float
    sep_max: int
    sep_min: int
    sep_avg: float
    sep_histogram: list[tuple[int, int, int]]  # (low, high, count), [2^k, 2^k+1)

    def to_dict(self) -> dict:
        return {
            "n_cliques": self.n_cliques,
            "clique_table_max": self.clique_max,
            "clique_table_min": self.clique_min,
            "clique_table_avg": self.clique_avg,
            "sep_table_max": self.sep_max,
            "sep_table_min": self.sep_min,
            "sep_table_avg": self.sep_avg,
            "sep_histogram": [list(b) for b in self.sep_histogram],
        }


def power_of_two_histogram(sizes) -> list[tuple[int, int, int]]:
    """Bucket counts over [2^k, 2^(k+1)) ranges covering the given sizes."""
    if not sizes:
        return []
    top = max(sizes)
    buckets = []
    low = 1
    while low <= top:
        high = low * 2
        count = sum(1 for s in sizes if low <= s < high)
        buckets.append((low, high, count))
        low = high
    return buckets


def tree_stats(tree: JunctionTree) -> StatsReport:
    csizes = tree.clique_sizes()
    ssizes = tree.separator_sizes()
    return StatsReport(
        n_cliques=len(csizes),
        clique_max=max(csizes),
        clique_min=min(csizes),
        clique_avg=sum(csizes) / len(csizes),
        sep_max=max(ssizes) if ssizes else 0,
        sep_min=min(ssizes) if ssizes else 0,
        sep_avg=sum(ssizes) / len(ssizes) if ssizes else 0.0,
        sep_histogram=power_of_two_histogram(ssizes),
    )

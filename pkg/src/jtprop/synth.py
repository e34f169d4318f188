"""Seeded generators for random networks and synthetic junction trees.

Networks drive the oracle-equivalence property tests; synthetic trees give
the benchmark direct control over separator table sizes, which compilation
of random networks would not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compiler import JunctionTree, build_tree
from .model import BayesianNetwork, Variable, make_cpt

PROFILES = ("small-skewed", "large-skewed", "mixed")

# average separator table size targets per profile, interpolated per family
_PROFILE_RANGES = {
    "small-skewed": (2, 256),
    "large-skewed": (8192, 65536),
    "mixed": (64, 16384),
}


@dataclass(frozen=True)
class GenSpec:
    seed: int
    n_variables: int
    max_parents: int = 3
    min_cardinality: int = 2
    max_cardinality: int = 4

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def gen_network(spec: GenSpec) -> BayesianNetwork:
    """Random DAG over a shuffled order, CPT rows normalized positive draws."""
    rng = spec.rng()
    n = spec.n_variables
    cards = rng.integers(spec.min_cardinality, spec.max_cardinality + 1, size=n)
    variables = [Variable(i, f"v{i}", int(cards[i])) for i in range(n)]

    order = rng.permutation(n)
    rank = np.empty(n, dtype=int)
    rank[order] = np.arange(n)

    cpts = []
    for i in range(n):
        earlier = [j for j in range(n) if rank[j] < rank[i]]
        k = int(rng.integers(0, min(spec.max_parents, len(earlier)) + 1))
        parents = sorted(rng.choice(earlier, size=k, replace=False)) if k else []
        scope_cards = [int(cards[p]) for p in parents] + [int(cards[i])]
        rows = int(np.prod(scope_cards[:-1], dtype=np.int64)) if parents else 1
        table = rng.uniform(0.05, 1.0, size=(rows, scope_cards[-1]))
        table /= table.sum(axis=1, keepdims=True)
        cpts.append(make_cpt(cards, i, parents, table.ravel()))
    return BayesianNetwork(variables, cpts)


def _pool_tree(sep_vars: int, n_cliques: int, private_vars: int) -> JunctionTree:
    """Cliques sharing one binary separator pool plus private variables.

    Every separator is the full pool, so each pool variable spans all
    cliques and each private variable sits in exactly one clique; the
    running intersection property holds by construction, whatever spanning
    tree the assembler picks.  Private counts cycle around the requested
    value so clique table sizes, and message costs, vary within one tree.
    """
    counts = [max(1, private_vars + (i % 3) - 1) for i in range(n_cliques)]
    cards = tuple([2] * (sep_vars + sum(counts)))
    members = []
    next_private = sep_vars
    for own_count in counts:
        own = list(range(next_private, next_private + own_count))
        next_private += own_count
        members.append(tuple(sorted(list(range(sep_vars)) + own)))
    return build_tree(members, cards)


def gen_tree_family(profile: str, count: int, seed: int = 0, n_cliques: int = 6,
                    private_vars: int = 4):
    """Trees with strictly increasing average separator sizes, plus random
    positive clique potentials.

    Returns a list of (tree, clique tables) pairs.  Separator sizes are
    powers of two interpolated geometrically across the profile's range.
    """
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; use one of {PROFILES}")
    lo, hi = _PROFILE_RANGES[profile]
    targets = np.geomspace(lo, hi, count)
    sep_bits = np.log2(targets).round().astype(int)
    # strictly increasing family even after rounding to powers of two
    for i in range(1, count):
        if sep_bits[i] <= sep_bits[i - 1]:
            sep_bits[i] = sep_bits[i - 1] + 1

    rng = np.random.default_rng(seed)
    family = []
    for bits in sep_bits:
        tree = _pool_tree(int(bits), n_cliques, private_vars)
        tables = [
            rng.uniform(0.1, 1.0, size=c.scope.size) for c in tree.cliques
        ]
        family.append((tree, tables))
    return family


def average_separator_size(tree: JunctionTree) -> float:
    sizes = tree.separator_sizes()
    return sum(sizes) / len(sizes) if sizes else 0.0

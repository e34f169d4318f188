"""Discrete Bayesian networks: variables, CPTs, evidence, validation."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CardinalityTooSmallError,
    CptRowNotNormalizedError,
    CyclicGraphError,
    StateOutOfRangeError,
    UnknownVariableError,
)
from .potential import PotentialTable, Scope

CPT_ROW_TOL = 1e-9


@dataclass(frozen=True)
class Variable:
    """A discrete random variable with a dense integer id."""

    id: int
    name: str
    cardinality: int


@dataclass(eq=False)
class Cpt:
    """Conditional probability table of one variable given its parents.

    The table scope is (parents in declared order, then child), so with the
    last-variable-fastest codec each parent assignment owns one contiguous
    row of `cardinality(child)` entries.
    """

    child: int
    parents: tuple[int, ...]
    table: PotentialTable

    def __post_init__(self):
        self.parents = tuple(int(p) for p in self.parents)
        expected = self.parents + (self.child,)
        if self.table.scope.ids != expected:
            raise ValueError(
                f"CPT scope {self.table.scope.ids} must be (parents..., child) "
                f"= {expected}"
            )

    def __eq__(self, other):
        if not isinstance(other, Cpt):
            return NotImplemented
        return (
            self.child == other.child
            and self.parents == other.parents
            and self.table == other.table
        )


@dataclass(eq=False)
class BayesianNetwork:
    """A DAG of discrete variables with one CPT per variable.

    Construction checks shapes only; call :func:`validate_network` for the
    full invariant check (acyclicity, CPT normalization).  Instances are
    treated as immutable after construction and are safe to share across
    threads.
    """

    variables: list[Variable]
    cpts: list[Cpt]

    _by_name: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        ids = [v.id for v in self.variables]
        if ids != list(range(len(self.variables))):
            raise ValueError("variable ids must be dense 0..V-1 in order")
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        if sorted(c.child for c in self.cpts) != ids:
            raise ValueError("need exactly one CPT per variable")
        self.cpts = sorted(self.cpts, key=lambda c: c.child)
        for cpt in self.cpts:
            scope = cpt.table.scope
            for var, card in zip(scope.ids, scope.cards):
                if card != self.variables[var].cardinality:
                    raise ValueError(
                        f"CPT of {self.variables[cpt.child].name!r} disagrees "
                        f"with the cardinality of variable {var}"
                    )
        self._by_name = {v.name: v.id for v in self.variables}

    def __len__(self):
        return len(self.variables)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)

    def id_of(self, name: str) -> int:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownVariableError(name) from None

    def parent_sets(self) -> list[tuple[int, ...]]:
        return [self.cpts[i].parents for i in range(len(self.variables))]

    def __eq__(self, other):
        if not isinstance(other, BayesianNetwork):
            return NotImplemented
        return self.variables == other.variables and self.cpts == other.cpts


@dataclass(frozen=True)
class Evidence:
    """Observed state per variable id, at most one observation each."""

    assignments: dict[int, int]

    @classmethod
    def from_names(cls, net: BayesianNetwork, named: dict[str, int]) -> "Evidence":
        return cls({net.id_of(name): int(state) for name, state in named.items()})

    def check(self, net: BayesianNetwork) -> "Evidence":
        for var, state in self.assignments.items():
            if not 0 <= var < len(net):
                raise UnknownVariableError(var)
            card = net.variables[var].cardinality
            if not 0 <= state < card:
                raise StateOutOfRangeError(net.variables[var].name, state, card)
        return self


def topological_order(net: BayesianNetwork) -> list[int]:
    """Variable ids, parents always before children, ties by ascending id."""
    children: list[list[int]] = [[] for _ in net.variables]
    indegree = [0] * len(net.variables)
    for cpt in net.cpts:
        indegree[cpt.child] = len(cpt.parents)
        for p in cpt.parents:
            children[p].append(cpt.child)

    ready = [v.id for v in net.variables if indegree[v.id] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for c in children[v]:
            indegree[c] -= 1
            if indegree[c] == 0:
                heapq.heappush(ready, c)
    if len(order) != len(net.variables):
        raise CyclicGraphError("parent relation contains a directed cycle")
    return order


def validate_network(net: BayesianNetwork) -> BayesianNetwork:
    """Check every network invariant; returns the network or raises."""
    for var in net.variables:
        if var.cardinality < 2:
            raise CardinalityTooSmallError(var.name)
    topological_order(net)
    for cpt in net.cpts:
        name = net.variables[cpt.child].name
        values = cpt.table.values
        card = net.variables[cpt.child].cardinality
        outside = np.nonzero((values < 0) | (values > 1))[0]
        if outside.size:
            row = int(outside[0]) // card
            raise CptRowNotNormalizedError(name, row, "entries outside [0, 1]")
        rows = values.reshape(-1, card)
        sums = rows.sum(axis=1)
        bad = np.nonzero(np.abs(sums - 1.0) > CPT_ROW_TOL)[0]
        if bad.size:
            row = int(bad[0])
            raise CptRowNotNormalizedError(name, row, float(sums[row]))
    return net


def cpt_scope(net_cards, parents, child) -> Scope:
    """Scope (parents..., child) with cardinalities looked up from the network."""
    ids = tuple(parents) + (child,)
    return Scope(ids, tuple(net_cards[i] for i in ids))


def make_cpt(net_cards, child, parents, values) -> Cpt:
    scope = cpt_scope(net_cards, parents, child)
    return Cpt(child, tuple(parents), PotentialTable(scope, np.asarray(values)))

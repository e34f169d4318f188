"""Potential tables over ordered variable scopes.

A scope is an ordered list of (variable id, cardinality) pairs; a potential
table is a flat float64 array over the joint states of its scope.  The flat
index codec is row-major with the LAST scope variable varying fastest, and
every other module (CPT layout, mapping tables, message passing) relies on
this one codec.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IndexOutOfRangeError,
    ScopeNotContainedError,
    StateOutOfRangeError,
    ZeroMassError,
)


@dataclass(frozen=True)
class Scope:
    """Ordered variable ids with their cardinalities."""

    ids: tuple[int, ...]
    cards: tuple[int, ...]

    def __post_init__(self):
        if len(self.ids) != len(self.cards):
            raise ValueError("ids and cards must have equal length")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError(f"duplicate variable ids in scope {self.ids}")
        object.__setattr__(self, "ids", tuple(int(i) for i in self.ids))
        object.__setattr__(self, "cards", tuple(int(c) for c in self.cards))

    def __len__(self):
        return len(self.ids)

    @property
    def size(self) -> int:
        """Number of table entries: the product of all cardinalities."""
        n = 1
        for c in self.cards:
            n *= c
        return n

    def strides(self) -> tuple[int, ...]:
        """Flat-index stride per scope position (last variable has stride 1)."""
        out = [1] * len(self.cards)
        for i in range(len(self.cards) - 2, -1, -1):
            out[i] = out[i + 1] * self.cards[i + 1]
        return tuple(out)

    def position(self, var_id: int) -> int:
        try:
            return self.ids.index(var_id)
        except ValueError:
            raise ScopeNotContainedError(
                f"variable {var_id} not in scope {self.ids}"
            ) from None

    def contains(self, other: "Scope") -> bool:
        return set(other.ids) <= set(self.ids)


def index_to_assignment(scope: Scope, index: int) -> tuple[int, ...]:
    """Decode a flat index into one state per scope variable."""
    if not 0 <= index < scope.size:
        raise IndexOutOfRangeError(
            f"index {index} out of range for table of size {scope.size}"
        )
    out = []
    for stride, card in zip(scope.strides(), scope.cards):
        out.append((index // stride) % card)
    return tuple(out)


def assignment_to_index(scope: Scope, assignment) -> int:
    """Encode one state per scope variable into the flat index."""
    if len(assignment) != len(scope):
        raise ValueError(
            f"assignment has {len(assignment)} states, scope has {len(scope)}"
        )
    index = 0
    for state, stride, card, var in zip(
        assignment, scope.strides(), scope.cards, scope.ids
    ):
        if not 0 <= state < card:
            raise StateOutOfRangeError(var, state, card)
        index += state * stride
    return index


def digits_of(scope: Scope, var_id: int, indices=None) -> np.ndarray:
    """State of `var_id` at every flat index (vectorized decode of one column)."""
    pos = scope.position(var_id)
    stride = scope.strides()[pos]
    card = scope.cards[pos]
    if indices is None:
        indices = np.arange(scope.size, dtype=np.int64)
    return (indices // stride) % card


def projection_indices(outer: Scope, inner: Scope) -> np.ndarray:
    """Flat inner-scope index for every outer-scope index.

    Entry r is the index of the inner assignment obtained by restricting the
    outer assignment of r to the inner scope's variables (in inner order).
    """
    if not outer.contains(inner):
        missing = set(inner.ids) - set(outer.ids)
        raise ScopeNotContainedError(
            f"variables {sorted(missing)} not contained in scope {outer.ids}"
        )
    proj = np.zeros(outer.size, dtype=np.int64)
    inner_strides = inner.strides()
    for pos, var in enumerate(inner.ids):
        proj += digits_of(outer, var) * inner_strides[pos]
    return proj


@dataclass(eq=False)
class PotentialTable:
    """Flat array of non-negative reals over an ordered scope."""

    scope: Scope
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.shape[0] != self.scope.size:
            raise ValueError(
                f"table over scope {self.scope.ids} needs {self.scope.size} "
                f"values, got shape {self.values.shape}"
            )
        if np.any(self.values < 0):
            raise ValueError("potential values must be non-negative")

    @classmethod
    def ones(cls, scope: Scope) -> "PotentialTable":
        return cls(scope, np.ones(scope.size))

    def copy(self) -> "PotentialTable":
        return PotentialTable(self.scope, self.values.copy())

    def total(self) -> float:
        return float(self.values.sum())

    def __eq__(self, other):
        if not isinstance(other, PotentialTable):
            return NotImplemented
        return self.scope == other.scope and np.array_equal(
            self.values, other.values
        )


def multiply_into(target: PotentialTable, factor: PotentialTable) -> PotentialTable:
    """Multiply `factor` into `target` in place; factor scope must be contained.

    target[t] *= factor[projection of t's assignment onto the factor scope].
    """
    proj = projection_indices(target.scope, factor.scope)
    target.values *= factor.values[proj]
    return target


def marginalize(table: PotentialTable, onto: Scope) -> PotentialTable:
    """Sum the table down onto a contained scope.

    Each output entry accumulates its source entries in ascending source
    index order, so results are reproducible bit for bit.
    """
    proj = projection_indices(table.scope, onto)
    summed = np.bincount(proj, weights=table.values, minlength=onto.size)
    return PotentialTable(onto, summed)


def normalize(table: PotentialTable) -> PotentialTable:
    """Return a copy scaled to total mass 1."""
    total = table.values.sum()
    if total <= 0.0:
        raise ZeroMassError("cannot normalize a zero-mass table")
    return PotentialTable(table.scope, table.values / total)

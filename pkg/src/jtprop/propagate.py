"""Hugin two-phase belief propagation over a compiled junction tree.

A message from clique i to clique k across separator S has two steps:
marginalization (fresh separator entries, summed from the source table via
the precomputed mapping rows) and scattering (target entries multiplied by
new/old separator ratios, with 0/0 defined as 0).

Both engines run the numerical work through one shared kernel operating on
a contiguous range of separator entries.  Each separator entry j owns its
row of the mapping tables exclusively, so ranges can be processed in any
order, or concurrently, with bit-identical results: per-row sums depend
only on the row itself.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .compiler import (
    FLAT,
    CompiledNetwork,
    JunctionTree,
    MappingTableSet,
    build_mapping_tables,
)
from .errors import (
    InconsistentDivisionError,
    NoCoveringCliqueError,
    StateOutOfRangeError,
    UnknownVariableError,
)
from .model import BayesianNetwork, Evidence
from .potential import (
    PotentialTable,
    Scope,
    digits_of,
    marginalize,
    multiply_into,
    normalize,
)

DEFAULT_SMALL_MESSAGE_THRESHOLD = 64


@dataclass(frozen=True)
class Message:
    source: int
    target: int
    separator: int


def _pass_block(phi_src, phi_tgt, phi_sep, mu_src, mu_tgt, lo, hi):
    """Marginalize and scatter separator entries [lo, hi).

    Writes phi_sep[lo:hi] and the target entries listed in mu_tgt[lo:hi];
    those regions are disjoint across blocks.

    The index block is forced C-contiguous before the gather: numpy picks
    its reduction order from the operand layout, and per-row sums must come
    out bit-identical whatever the mapping tables' physical layout or the
    block bounds.
    """
    star = phi_src[np.ascontiguousarray(mu_src[lo:hi])].sum(axis=1)
    old = phi_sep[lo:hi]
    if np.any((old == 0.0) & (star != 0.0)):
        raise InconsistentDivisionError(
            "separator entry is zero but its fresh marginal is not"
        )
    ratio = np.divide(star, old, out=np.zeros_like(star), where=old != 0.0)
    rows = mu_tgt[lo:hi]
    phi_tgt[rows] = phi_tgt[rows] * ratio[:, None]
    phi_sep[lo:hi] = star


class SequentialEngine:
    """Runs every message as one kernel call on the calling thread."""

    name = "sequential"

    def run_message(self, phi_src, phi_tgt, phi_sep, mu_src, mu_tgt):
        _pass_block(phi_src, phi_tgt, phi_sep, mu_src, mu_tgt, 0, len(phi_sep))

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class ParallelEngine:
    """Partitions each message over separator entries across worker threads.

    Every worker owns a contiguous range of separator indices, hence a
    disjoint slice of the separator table and a disjoint set of target
    entries.  Messages smaller than `small_message_threshold` run on the
    calling thread; per-entry launch overhead dominates them otherwise.

    `validate=True` re-checks the disjoint-write partition before every
    parallel section (debugging aid; costs a sort per message).
    """

    name = "parallel"

    def __init__(self, workers=None, small_message_threshold=DEFAULT_SMALL_MESSAGE_THRESHOLD,
                 validate=False):
        if workers is None:
            workers = int(os.environ.get("JTPROP_WORKERS", 0)) or (os.cpu_count() or 1)
        if workers < 1:
            raise ValueError("workers must be >= 1")
        if small_message_threshold < 0:
            raise ValueError("threshold must be >= 0")
        self.workers = workers
        self.small_message_threshold = small_message_threshold
        self.validate = validate
        self._pool = None

    def _executor(self):
        if self._pool is None:
            self._pool = ThreadPoolExecutor(max_workers=self.workers)
        return self._pool

    def run_message(self, phi_src, phi_tgt, phi_sep, mu_src, mu_tgt):
        size = len(phi_sep)
        chunks = min(self.workers, size)
        if chunks <= 1 or size < self.small_message_threshold:
            _pass_block(phi_src, phi_tgt, phi_sep, mu_src, mu_tgt, 0, size)
            return
        if self.validate:
            flat = np.sort(mu_tgt.ravel())
            if not np.array_equal(flat, np.arange(phi_tgt.shape[0])):
                raise InconsistentDivisionError(
                    "target mapping rows do not partition the clique table"
                )
        bounds = np.linspace(0, size, chunks + 1, dtype=int)
        futures = [
            self._executor().submit(
                _pass_block, phi_src, phi_tgt, phi_sep, mu_src, mu_tgt, lo, hi
            )
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        for f in futures:
            f.result()

    def close(self):
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def make_engine(name="sequential", workers=None, small_message_threshold=DEFAULT_SMALL_MESSAGE_THRESHOLD):
    if name == "sequential":
        return SequentialEngine()
    if name == "parallel":
        return ParallelEngine(workers, small_message_threshold)
    raise ValueError(f"unknown engine {name!r}")


@dataclass
class PropagationState:
    """Mutable clique and separator tables for one propagation run."""

    tree: JunctionTree
    mappings: MappingTableSet
    clique_values: list[np.ndarray]
    sep_values: list[np.ndarray]
    engine: SequentialEngine | ParallelEngine = field(default_factory=SequentialEngine)
    evidence_applied: bool = False

    def copy(self) -> "PropagationState":
        return PropagationState(
            tree=self.tree,
            mappings=self.mappings,
            clique_values=[v.copy() for v in self.clique_values],
            sep_values=[v.copy() for v in self.sep_values],
            engine=self.engine,
            evidence_applied=self.evidence_applied,
        )

    def clique_table(self, clique_id: int) -> PotentialTable:
        return PotentialTable(
            self.tree.cliques[clique_id].scope, self.clique_values[clique_id]
        )

    def sep_table(self, sep_id: int) -> PotentialTable:
        return PotentialTable(
            self.tree.separators[sep_id].scope, self.sep_values[sep_id]
        )


def initialize(tree: JunctionTree, net: BayesianNetwork, mappings: MappingTableSet | None = None,
               engine=None) -> PropagationState:
    """All-ones tables, then each CPT multiplied into its assigned clique."""
    if mappings is None:
        mappings = build_mapping_tables(tree, layout=FLAT)
    clique_values = [np.ones(c.scope.size) for c in tree.cliques]
    for cpt in net.cpts:
        clique_id = tree.cpt_assignment.get(cpt.child)
        if clique_id is None:
            raise NoCoveringCliqueError(
                f"no clique assigned for the CPT of variable {cpt.child}"
            )
        target = PotentialTable(tree.cliques[clique_id].scope, clique_values[clique_id])
        multiply_into(target, cpt.table)
    sep_values = [np.ones(s.scope.size) for s in tree.separators]
    state = PropagationState(tree, mappings, clique_values, sep_values)
    if engine is not None:
        state.engine = engine
    return state


def from_potentials(tree: JunctionTree, clique_tables, mappings: MappingTableSet | None = None,
                    engine=None) -> PropagationState:
    """State over externally supplied clique tables (synthetic benchmarks)."""
    if mappings is None:
        mappings = build_mapping_tables(tree, layout=FLAT)
    clique_values = []
    for clique, values in zip(tree.cliques, clique_tables):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.shape != (clique.scope.size,):
            raise ValueError(f"clique {clique.id} table has wrong size")
        clique_values.append(values.copy())
    sep_values = [np.ones(s.scope.size) for s in tree.separators]
    state = PropagationState(tree, mappings, clique_values, sep_values)
    if engine is not None:
        state.engine = engine
    return state


def apply_evidence(state: PropagationState, evidence) -> PropagationState:
    """Zero out entries that disagree with each observation.

    The mask lands in the clique owning the observed variable's CPT.
    """
    assignments = evidence.assignments if isinstance(evidence, Evidence) else dict(evidence)
    for var, observed in sorted(assignments.items()):
        if var not in state.tree.cpt_assignment:
            raise UnknownVariableError(var)
        clique_id = state.tree.cpt_assignment[var]
        scope = state.tree.cliques[clique_id].scope
        card = scope.cards[scope.position(var)]
        if not 0 <= observed < card:
            raise StateOutOfRangeError(var, observed, card)
        keep = digits_of(scope, var) == observed
        state.clique_values[clique_id] *= keep
    state.evidence_applied = True
    return state


def message_passing(state: PropagationState, msg: Message) -> PropagationState:
    """One directed message: marginalize onto the separator, then scatter."""
    mu_src = state.mappings.mu(msg.source, msg.separator)
    mu_tgt = state.mappings.mu(msg.target, msg.separator)
    state.engine.run_message(
        state.clique_values[msg.source],
        state.clique_values[msg.target],
        state.sep_values[msg.separator],
        mu_src,
        mu_tgt,
    )
    return state


def run_parallel_message(state: PropagationState, msg: Message, workers: int,
                         small_message_threshold: int = DEFAULT_SMALL_MESSAGE_THRESHOLD
                         ) -> PropagationState:
    """One message on a transient thread pool, regardless of state.engine.

    Numerically identical to the sequential path; work is partitioned by
    separator entry, and each entry's task owns its separator cell plus a
    disjoint slice of the target table.
    """
    with ParallelEngine(workers, small_message_threshold) as engine:
        previous = state.engine
        state.engine = engine
        try:
            message_passing(state, msg)
        finally:
            state.engine = previous
    return state


def _children_first_order(tree: JunctionTree, root: int) -> list[tuple[int, int, int]]:
    """(child, parent, separator) edges in post-order, children ascending."""
    out = []
    stack = [(root, -1, -1, False)]
    while stack:
        node, parent, sep_id, expanded = stack.pop()
        if expanded:
            if parent >= 0:
                out.append((node, parent, sep_id))
            continue
        stack.append((node, parent, sep_id, True))
        for nbr, s in reversed(tree.neighbors[node]):
            if nbr != parent:
                stack.append((nbr, node, s, False))
    return out


def collect_evidence(state: PropagationState, root: int) -> PropagationState:
    """Pass messages child -> parent, leaves first (depth-first post-order)."""
    for child, parent, sep_id in _children_first_order(state.tree, root):
        message_passing(state, Message(child, parent, sep_id))
    return state


def distribute_evidence(state: PropagationState, root: int) -> PropagationState:
    """Pass messages parent -> child on the way down (pre-order).

    Each node receives its message when first visited, before its own
    children are expanded; children expand in ascending clique-id order.
    """
    stack = [(root, -1, -1)]
    while stack:
        node, parent, sep_id = stack.pop()
        if parent >= 0:
            message_passing(state, Message(parent, node, sep_id))
        for nbr, s in reversed(state.tree.neighbors[node]):
            if nbr != parent:
                stack.append((nbr, node, s))
    return state


def belief_propagation(state: PropagationState, root: int | None = None) -> PropagationState:
    """Collect then distribute, from the given root or each component's own.

    Posteriors do not depend on the root choice; an explicit root only
    redirects the traversal of its component (other components keep their
    default roots).
    """
    if root is None:
        roots = state.tree.roots
    else:
        component = next(
            (i for i, comp in enumerate(state.tree.components()) if root in comp),
            None,
        )
        if component is None:
            raise UnknownVariableError(f"clique {root}")
        roots = [
            root if i == component else r
            for i, r in enumerate(state.tree.roots)
        ]
    for r in roots:
        collect_evidence(state, r)
        distribute_evidence(state, r)
    return state


def query_marginal(state: PropagationState, variable: int, normalize_result: bool = True) -> PotentialTable:
    """Marginal of one variable, read from the smallest clique containing it."""
    holders = [
        c for c in state.tree.cliques if variable in c.members
    ]
    if not holders:
        raise UnknownVariableError(variable)
    best = min(holders, key=lambda c: (c.scope.size, c.id))
    var_scope = Scope(
        (variable,), (best.scope.cards[best.scope.position(variable)],)
    )
    table = marginalize(state.clique_table(best.id), var_scope)
    if normalize_result:
        return normalize(table)
    return table


def posterior_marginals(compiled: CompiledNetwork, net: BayesianNetwork,
                        evidence=None, engine=None) -> dict[int, np.ndarray]:
    """Convenience: initialize, apply evidence, propagate, query everything."""
    state = initialize(compiled.tree, net, compiled.mappings, engine=engine)
    if evidence:
        apply_evidence(state, evidence)
    belief_propagation(state)
    out = {}
    for var in range(len(net)):
        out[var] = query_marginal(state, var).values
    return out


def check_global_consistency(state: PropagationState, rtol: float = 1e-9) -> None:
    """After propagation each separator must equal both adjacent marginals."""
    for sep in state.tree.separators:
        target = state.sep_values[sep.id]
        for clique_id in sep.edge:
            got = marginalize(state.clique_table(clique_id), sep.scope).values
            if not np.allclose(got, target, rtol=rtol, atol=0.0):
                raise AssertionError(
                    f"clique {clique_id} disagrees with separator {sep.id}"
                )

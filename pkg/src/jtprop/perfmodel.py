"""Analytical cost and speedup model for message passing.

Costs are abstract operation counts.  One directed message from clique i to
clique k across separator S costs |phi_i| - |phi_S| additions and
|phi_k| + |phi_S| multiplications; spreading the work over the separator
entries divides it by |phi_S|.  A per-message launch overhead tau plus an
operations-per-second throughput convert counts to time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compiler import JunctionTree
from .errors import InsufficientSamplesError


@dataclass(frozen=True)
class MessageCost:
    source_size: int
    target_size: int
    separator_size: int

    @property
    def additions(self) -> int:
        return self.source_size - self.separator_size

    @property
    def multiplications(self) -> int:
        return self.target_size + self.separator_size

    @property
    def sequential_ops(self) -> int:
        return self.source_size + self.target_size

    @property
    def parallel_time(self) -> float:
        """Per-message critical path: total ops over the separator width."""
        return self.sequential_ops / self.separator_size

    @property
    def speedup(self) -> float:
        return float(self.separator_size)


def message_cost(tree: JunctionTree, sep_id: int, source: int) -> MessageCost:
    sep = tree.separators[sep_id]
    if source not in sep.edge:
        raise ValueError(f"clique {source} is not an endpoint of separator {sep_id}")
    target = sep.edge[1] if source == sep.edge[0] else sep.edge[0]
    return MessageCost(
        source_size=tree.cliques[source].scope.size,
        target_size=tree.cliques[target].scope.size,
        separator_size=sep.scope.size,
    )


def directed_messages(tree: JunctionTree):
    """Every (separator id, source clique id) pair, both directions."""
    for sep in tree.separators:
        yield sep.id, sep.edge[0]
        yield sep.id, sep.edge[1]


@dataclass(frozen=True)
class SpeedupEstimate:
    sequential_cost: float
    parallel_cost: float
    tau: float
    n_messages: int
    min_separator: int
    max_separator: int

    @property
    def speedup(self) -> float:
        if self.parallel_cost == 0.0:
            return 1.0
        return self.sequential_cost / self.parallel_cost


def tree_cost(tree: JunctionTree, tau: float = 0.0) -> SpeedupEstimate:
    """Whole-propagation cost: 2 directed messages per edge plus launch
    overhead tau per message."""
    sequential = 0.0
    parallel = 0.0
    n_messages = 0
    sep_sizes = []
    for sep_id, source in directed_messages(tree):
        cost = message_cost(tree, sep_id, source)
        sequential += cost.sequential_ops
        parallel += cost.parallel_time
        n_messages += 1
        sep_sizes.append(cost.separator_size)
    parallel += n_messages * tau
    return SpeedupEstimate(
        sequential_cost=sequential,
        parallel_cost=parallel,
        tau=tau,
        n_messages=n_messages,
        min_separator=min(sep_sizes) if sep_sizes else 0,
        max_separator=max(sep_sizes) if sep_sizes else 0,
    )


@dataclass(frozen=True)
class TauEstimate:
    tau: float
    throughput: float  # ops per time unit; inf when overhead-dominated
    residual: float  # RMS of fit residuals
    overhead_dominated: bool


def estimate_tau(samples) -> TauEstimate:
    """Least-squares fit of measured time = tau + work / throughput.

    `samples` holds (work, time) pairs, one per message launch, with work in
    abstract operations.  A non-positive fitted slope means time does not
    grow with work: overhead-dominated, tau = mean time.  A negative fitted
    intercept is clamped to zero.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise InsufficientSamplesError("need at least 2 samples")
    work = np.asarray([s[0] for s in samples], dtype=np.float64)
    time = np.asarray([s[1] for s in samples], dtype=np.float64)
    if np.ptp(work) == 0.0:
        raise InsufficientSamplesError("samples must span distinct work amounts")

    wbar = work.mean()
    tbar = time.mean()
    slope = float(((work - wbar) * (time - tbar)).sum() / ((work - wbar) ** 2).sum())
    if slope <= 0.0:
        residual = float(np.sqrt(np.mean((time - tbar) ** 2)))
        return TauEstimate(
            tau=max(tbar, 0.0),
            throughput=np.inf,
            residual=residual,
            overhead_dominated=True,
        )
    intercept = tbar - slope * wbar
    fitted = intercept + slope * work
    residual = float(np.sqrt(np.mean((time - fitted) ** 2)))
    return TauEstimate(
        tau=max(intercept, 0.0),
        throughput=1.0 / slope,
        residual=residual,
        overhead_dominated=False,
    )


@dataclass(frozen=True)
class OverheadReport:
    fraction: float  # launch overhead share of parallel time, in [0, 1)
    speedup_ceiling: float  # sequential time over total overhead time


def overhead_fraction(tree: JunctionTree, tau: float, throughput: float) -> OverheadReport:
    """Share of parallel execution spent on launch overhead.

    tau is in time units, throughput in ops per time unit.  The ceiling is
    the best possible speedup if compute were free: sequential time divided
    by the irreducible overhead time.
    """
    estimate = tree_cost(tree, tau=0.0)
    overhead_time = estimate.n_messages * tau
    if overhead_time == 0.0:
        return OverheadReport(fraction=0.0, speedup_ceiling=np.inf)
    compute_time = estimate.parallel_cost / throughput
    sequential_time = estimate.sequential_cost / throughput
    return OverheadReport(
        fraction=overhead_time / (overhead_time + compute_time),
        speedup_ceiling=sequential_time / overhead_time,
    )

"""Brute-force exact inference by full joint enumeration.

Deliberately naive reference implementation: it materializes the joint
distribution and answers queries by masking and summing.  Index arithmetic
is redone here from scratch (strides derived locally, one gather per CPT)
so results do not route through the table machinery they are meant to
check.
"""

from __future__ import annotations

import numpy as np

from .errors import JointTooLargeError, ZeroMassError
from .model import BayesianNetwork, Evidence

DEFAULT_JOINT_CAP = 1 << 22


def joint_size(net: BayesianNetwork) -> int:
    size = 1
    for card in net.cardinalities:
        size *= card
    return size


def _joint_strides(cards) -> list[int]:
    # last variable fastest, matching the table codec by construction
    strides = [1] * len(cards)
    for i in range(len(cards) - 2, -1, -1):
        strides[i] = strides[i + 1] * cards[i + 1]
    return strides


def enumerate_joint(net: BayesianNetwork, cap: int = DEFAULT_JOINT_CAP) -> np.ndarray:
    """Joint probability of every full assignment, as a flat array.

    Entry r is the product over all CPTs of the entry selected by r's
    assignment.
    """
    size = joint_size(net)
    if size > cap:
        raise JointTooLargeError(size, cap)
    cards = net.cardinalities
    strides = _joint_strides(cards)
    idx = np.arange(size, dtype=np.int64)

    joint = np.ones(size)
    for cpt in net.cpts:
        scope_ids = cpt.parents + (cpt.child,)
        local = np.zeros(size, dtype=np.int64)
        stride = 1
        for var in reversed(scope_ids):
            digit = (idx // strides[var]) % cards[var]
            local += digit * stride
            stride *= cards[var]
        joint *= cpt.table.values[local]
    return joint


def oracle_marginal(net: BayesianNetwork, joint: np.ndarray, variable: int,
                    evidence=None) -> np.ndarray:
    """Normalized posterior of one variable under the given evidence."""
    cards = net.cardinalities
    strides = _joint_strides(cards)
    idx = np.arange(joint.shape[0], dtype=np.int64)

    masked = joint
    if evidence:
        assignments = evidence.assignments if isinstance(evidence, Evidence) else evidence
        keep = np.ones(joint.shape[0], dtype=bool)
        for var, state in assignments.items():
            keep &= ((idx // strides[var]) % cards[var]) == state
        masked = np.where(keep, joint, 0.0)

    digits = (idx // strides[variable]) % cards[variable]
    sums = np.bincount(digits, weights=masked, minlength=cards[variable])
    total = sums.sum()
    if total <= 0.0:
        raise ZeroMassError("evidence has probability zero")
    return sums / total


def all_oracle_marginals(net: BayesianNetwork, evidence=None,
                         cap: int = DEFAULT_JOINT_CAP) -> dict[int, np.ndarray]:
    joint = enumerate_joint(net, cap=cap)
    return {
        var: oracle_marginal(net, joint, var, evidence)
        for var in range(len(net))
    }

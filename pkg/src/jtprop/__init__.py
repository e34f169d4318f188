"""jtprop: exact inference in discrete Bayesian networks.

Compiles a network to a junction tree with precomputed per-separator-entry
index mapping tables, then runs Hugin two-phase belief propagation with a
sequential or data-parallel message engine.  Includes an analytical cost
model, a brute-force oracle, seeded generators and a benchmark CLI.
"""

from .compiler import (
    FLAT,
    INTERLEAVED,
    CompiledNetwork,
    JunctionTree,
    MappingTableSet,
    build_mapping_tables,
    compile_network,
    relayout_mapping_tables,
    tree_stats,
)
from .errors import JtpropError, ZeroMassError
from .estimator import JunctionTreeEngine
from .io import (
    load_network,
    parse_native,
    parse_net,
    parse_tree,
    serialize_native,
    serialize_tree,
)
from .model import (
    BayesianNetwork,
    Cpt,
    Evidence,
    Variable,
    make_cpt,
    topological_order,
    validate_network,
)
from .oracle import all_oracle_marginals, enumerate_joint, oracle_marginal
from .perfmodel import estimate_tau, message_cost, overhead_fraction, tree_cost
from .potential import (
    PotentialTable,
    Scope,
    assignment_to_index,
    index_to_assignment,
    marginalize,
    multiply_into,
    normalize,
)
from .propagate import (
    Message,
    ParallelEngine,
    PropagationState,
    SequentialEngine,
    apply_evidence,
    belief_propagation,
    collect_evidence,
    distribute_evidence,
    from_potentials,
    initialize,
    make_engine,
    message_passing,
    posterior_marginals,
    query_marginal,
    run_parallel_message,
)
from .synth import GenSpec, gen_network, gen_tree_family

__version__ = "0.1.0"

__all__ = [
    "BayesianNetwork",
    "CompiledNetwork",
    "Cpt",
    "Evidence",
    "FLAT",
    "GenSpec",
    "INTERLEAVED",
    "JtpropError",
    "JunctionTree",
    "JunctionTreeEngine",
    "MappingTableSet",
    "Message",
    "ParallelEngine",
    "PotentialTable",
    "PropagationState",
    "Scope",
    "SequentialEngine",
    "Variable",
    "ZeroMassError",
    "all_oracle_marginals",
    "apply_evidence",
    "assignment_to_index",
    "belief_propagation",
    "build_mapping_tables",
    "collect_evidence",
    "compile_network",
    "distribute_evidence",
    "enumerate_joint",
    "estimate_tau",
    "from_potentials",
    "gen_network",
    "gen_tree_family",
    "index_to_assignment",
    "initialize",
    "load_network",
    "make_cpt",
    "make_engine",
    "marginalize",
    "message_cost",
    "message_passing",
    "multiply_into",
    "normalize",
    "oracle_marginal",
    "overhead_fraction",
    "parse_native",
    "parse_net",
    "parse_tree",
    "posterior_marginals",
    "query_marginal",
    "run_parallel_message",
    "relayout_mapping_tables",
    "serialize_native",
    "serialize_tree",
    "topological_order",
    "tree_cost",
    "tree_stats",
    "validate_network",
]

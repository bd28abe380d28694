"""Certified l-inf Lipschitz upper bounds for feed-forward networks.

The gradient dual-norm maximization is relaxed to a box-constrained
polynomial problem whose certified upper bounds come from a hierarchy of
linear programs over box-positivity certificates; network connectivity
shrinks the LPs via variable cliques. Baselines (operator-norm product,
gradient sampling), a brute-force vertex oracle, local bounds from interval
propagation, and MPS/SDPA exporters round out the toolkit.
"""

from .certificate import (
    AssembledLP,
    BoundReport,
    CertificateTerm,
    TermBudgetError,
    assemble_lp,
    certificate_residual,
    dense_term_count,
    enumerate_terms,
    expand_h,
    hierarchy_bound,
    prune_degree2_terms,
)
from .lp import LPSolution, export_mps, mps_bytes, solve
from .network import (
    ActivationKind,
    Network,
    NeuronBounds,
    WeightMatrix,
    derivative_bounds,
    gradient_many,
    layer_norm_linf,
    lbs,
    load_network,
    local_derivative_bounds,
    preactivation_bounds,
    prune_network,
    random_network,
    save_network,
    ubp,
)
from .oracle import OracleResult, finite_diff_gradient, vertex_max
from .polynomial import (
    Polynomial,
    VariableIndexing,
    local_norm_gradient_polynomial,
    norm_gradient_polynomial,
    substitute_affine,
)
from .sdp import QCQP, ShorSDP, export_sdpa, lift_point, qcqp_reformulate, sdpa_bytes, shor_relax
from .sparsity import (
    CompGraph,
    SparsityPattern,
    ValidationReport,
    clique_stats,
    computational_graph,
    induced_pattern,
    pattern_to_json,
    single_clique_pattern,
    validate_pattern,
)

__version__ = "0.1.0"

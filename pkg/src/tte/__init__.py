"""Trace words of permutation-structured tensors: extremal cycle counts,
dense evaluation, and Wick-pairing asymptotics.

The package is organized around one object, a word of ``k`` leg maps on
``m`` points.  ``perm`` holds the map algebra, ``graph`` the cycle model,
``extremal`` the maximum-cycle searches and bounds, ``tensor`` dense
evaluation on explicit matrices, ``ginibre`` the Gaussian word model, and
``verify`` the cross-checking suites behind ``tte verify``.
"""

from .config import (
    Caps,
    DEFAULT_CAPS,
    InputError,
    ResourceCapError,
    VerificationError,
    caps_from_env,
)
from .perm import (
    PartialPermutation,
    Permutation,
    PermError,
    full_cycle,
    identity,
    interval_merge_count,
    interval_merge_min,
    min_conjugate_backward,
    parse,
)
from .graph import (
    CycleReport,
    Edge,
    GraphError,
    Rect,
    Selection,
    TensorGraph,
    build,
    build_adjoint,
    build_moment,
    count_cycles,
    enumerate_pairings,
    is_simple,
    n_pairings,
    to_dot,
)
from .extremal import (
    ExponentReport,
    ExtremalError,
    ExtremalResult,
    backward_upper_bound,
    exponent_report,
    graph_backward_bound,
    m_exhaustive,
    m_local_search,
    moment_exponent,
    multi_backward_formula,
    simple_certificate,
)
from .tensor import (
    EvalResult,
    OpNormResult,
    adjoint_consistency,
    evaluate,
    evaluate_partial_graph,
    make_u_pi,
    moment_trace,
    operator_norm,
    random_unitary,
)
from .ginibre import (
    CompareReport,
    GinibreModel,
    MCResult,
    catalan,
    compare_bound,
    enumerate_theta,
    exact_expectation,
    free_limit,
    is_noncrossing,
    mc_expectation,
    pairing_term_exponent,
    tau_chain,
    theta_to_sigma,
)

__version__ = "0.1.0"

__all__ = [
    "Caps",
    "DEFAULT_CAPS",
    "InputError",
    "ResourceCapError",
    "VerificationError",
    "caps_from_env",
    "PartialPermutation",
    "Permutation",
    "PermError",
    "full_cycle",
    "identity",
    "interval_merge_count",
    "interval_merge_min",
    "min_conjugate_backward",
    "parse",
    "CycleReport",
    "Edge",
    "GraphError",
    "Rect",
    "Selection",
    "TensorGraph",
    "build",
    "build_adjoint",
    "build_moment",
    "count_cycles",
    "enumerate_pairings",
    "is_simple",
    "n_pairings",
    "to_dot",
    "ExponentReport",
    "ExtremalError",
    "ExtremalResult",
    "backward_upper_bound",
    "exponent_report",
    "graph_backward_bound",
    "m_exhaustive",
    "m_local_search",
    "moment_exponent",
    "multi_backward_formula",
    "simple_certificate",
    "EvalResult",
    "OpNormResult",
    "adjoint_consistency",
    "evaluate",
    "evaluate_partial_graph",
    "make_u_pi",
    "moment_trace",
    "operator_norm",
    "random_unitary",
    "CompareReport",
    "GinibreModel",
    "MCResult",
    "catalan",
    "compare_bound",
    "enumerate_theta",
    "exact_expectation",
    "free_limit",
    "is_noncrossing",
    "mc_expectation",
    "pairing_term_exponent",
    "tau_chain",
    "theta_to_sigma",
    "__version__",
]

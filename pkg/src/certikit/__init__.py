"""certikit: certified robustness bounds for feedforward ReLU classifiers.

Upper bounds on the worst-case adversarial margin inside an l-infinity ball
come from two convex relaxations (a layer-coupled semidefinite moment
relaxation and the per-unit triangle-envelope LP), with projected gradient
ascent supplying matching lower-bound witnesses and a pattern-enumeration
oracle giving exact values on tiny networks.
"""

from .attack import AttackResult, PgdSettings, pgd_attack, pgd_margin
from .bounds import LayerBounds, PerturbationRegion, interval_propagate, split_pos_neg
from .conic_solver import (
    ConicProblem,
    SolveReport,
    SolverSettings,
    box_dual_bound,
    polish_multipliers,
    psd_project,
    rigorous_dual_bound,
    solve,
    solve_box_lp,
)
from .harness import (
    CertifyOptions,
    DatasetSummary,
    certify_dataset,
    certify_point,
    read_dataset,
    write_report,
)
from .lp_relax import EnvelopeLine, LinearProblem, build_lp, lp_upper_bound, relu_envelope
from .network import (
    Activations,
    NetworkParseError,
    NetworkShapeError,
    NetworkValueError,
    ReluNetwork,
    class_margin,
    forward,
    load_network,
    margin_gradient,
    save_network,
)
from .results import BoundResult, PointVerdict
from .sdp_relax import (
    FeasibilityReport,
    LemmaChainReport,
    MomentIndexMap,
    MomentSolution,
    SdpOptions,
    build_sdp,
    check_rank1_feasibility,
    lemma_chain_check,
    moment_index_map,
    scalar_relu_sdp,
    sdp_upper_bound,
)
from .theory import (
    GapInvariantError,
    GapRow,
    GapTable,
    PatternBudgetError,
    exact_margin_bruteforce,
    gap_experiment,
    lp_l1_lower_bound,
    operator_norm,
    random_sign_matrix,
    spectral_sdp_bound,
)

__version__ = "0.1.0"

__all__ = [
    "Activations",
    "AttackResult",
    "BoundResult",
    "CertifyOptions",
    "ConicProblem",
    "DatasetSummary",
    "EnvelopeLine",
    "FeasibilityReport",
    "GapInvariantError",
    "GapRow",
    "GapTable",
    "LayerBounds",
    "LemmaChainReport",
    "LinearProblem",
    "MomentIndexMap",
    "MomentSolution",
    "NetworkParseError",
    "NetworkShapeError",
    "NetworkValueError",
    "PatternBudgetError",
    "PerturbationRegion",
    "PgdSettings",
    "PointVerdict",
    "ReluNetwork",
    "SdpOptions",
    "SolveReport",
    "SolverSettings",
    "box_dual_bound",
    "build_lp",
    "build_sdp",
    "certify_dataset",
    "certify_point",
    "check_rank1_feasibility",
    "class_margin",
    "exact_margin_bruteforce",
    "forward",
    "gap_experiment",
    "interval_propagate",
    "lemma_chain_check",
    "load_network",
    "lp_l1_lower_bound",
    "lp_upper_bound",
    "margin_gradient",
    "moment_index_map",
    "operator_norm",
    "pgd_attack",
    "pgd_margin",
    "polish_multipliers",
    "psd_project",
    "random_sign_matrix",
    "read_dataset",
    "relu_envelope",
    "rigorous_dual_bound",
    "save_network",
    "scalar_relu_sdp",
    "sdp_upper_bound",
    "solve",
    "solve_box_lp",
    "spectral_sdp_bound",
    "split_pos_neg",
    "write_report",
]

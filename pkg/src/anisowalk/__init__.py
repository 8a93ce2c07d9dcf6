"""Anisotropic random walks on free-product trees and their finite Schreier
graph quotients: resolvent calculus, entropy rates, stopping sets, backbone
kernels, non-backtracking operators, and exact mixing-time experiments."""

__version__ = "0.1.0"

from . import errors
from .group_core import (
    Alphabet,
    AnisotropyVector,
    ReducedWord,
    Trajectory,
    identity_involution,
    inverse,
    make_alphabet,
    multiply,
    pairing_involution,
    parse_anisotropy,
    sample_trajectory,
    uniform_vector,
    unit,
)
from .schreier_graphs import (
    ColoredWeights,
    FiniteKernel,
    LiftBase,
    LiftGraph,
    SchreierGraph,
    apply_word,
    from_permutations,
    is_simple,
    k4_base,
    kernel,
    lift_kernel,
    load_graph,
    load_lift,
    random_lift,
    random_schreier,
    save_graph,
    save_lift,
    srw_weights,
)
from .mixing_lab import (
    CutoffConfig,
    DistributionVector,
    MixingCurve,
    SpectrumReport,
    StopSpec,
    cutoff_experiment,
    geronimus,
    kappa_bound_check,
    mixing_time,
    nb_spectral_radius_bound,
    nonbacktracking_dist,
    propagate,
    singular_radius_t,
    spectrum_report,
    stopping_bound_check,
    tv_curve,
    tv_distance,
)
from .tree_calculus import (
    BackboneKernel,
    DominationReport,
    EntropyEstimate,
    HaagerupBounds,
    ResolventProfile,
    SpectralSummary,
    StoppingSet,
    TransferReport,
    backbone_kernel,
    build_stopping_set,
    domination_check,
    dp_horizon,
    entropy,
    exit_time_ladder,
    green_value,
    haagerup_bounds,
    integrability,
    level_sums,
    rho,
    rho_prime,
    solve_gamma,
    spectral_summary,
    transform_p_to_pprime,
    uniform_target_series,
    word_distribution,
)

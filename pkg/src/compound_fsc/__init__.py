"""Worst-case feedback information rates for families of finite-state channels.

The library models a channel family with a shared kernel format, evaluates
directed information under causally conditioned input laws, solves the
max-min information rate by projected supergradient ascent, and closes the
loop with code-tree encoders, merged-ranking decoding, and seeded Monte
Carlo against exact error sums.
"""

from .capacity import (
    CapacityReport,
    FeedbackGapResult,
    SolverConfig,
    SuperadditivityResult,
    blahut_arimoto,
    compute_Cn,
    compute_Cn_markovian,
    compute_Cn_nofeedback,
    ge_feedback_gap,
    memoryless_compound_fb_capacity,
    mixture_policy,
    product_policy,
    superadditivity_check,
)
from .causal import (
    CausalConditioning,
    causal_channel_prob,
    causal_log_prob_rows,
    causal_prob_rows,
    channel_prob_table,
    feedback_paths,
    forward_pass,
    history_index,
    iid_policy,
    input_prob,
    joint_and_output_probs,
    load_policy,
    naive_causal_channel_prob,
    policy_weight_table,
    random_policy,
    save_policy,
    uniform_policy,
)
from .channel import (
    CompoundFamily,
    FeedbackMap,
    FscSpec,
    GilbertElliotParams,
    bsc,
    identity_feedback,
    kernel_distance,
    load_channel,
    load_family,
    make_gilbert_elliot,
    make_memoryless,
    nearest_member,
    no_feedback,
    quantize_channel,
    quantize_family,
    save_family,
    state_transition_matrix,
    stationary_distribution,
    uniform_ergodicity_horizon,
)
from .codetree import (
    Codebook,
    CodeTree,
    ConcatTree,
    TreeType,
    delta_rate_penalty,
    dominant_type_subcode,
    path,
    paths_rows,
    sample_codebook,
    sample_codetree,
    sample_concat_codebook,
    sample_uniform_from_type,
    tree_code,
    tree_from_code,
    tree_prob,
    tree_size,
    tree_type,
    type_count_bound,
)
from .decoder import (
    MLDecoder,
    RankingFunction,
    SeparabilityReport,
    UniversalDecoder,
    build_ranking,
    merge_rankings,
    ml_decode,
    separability_check,
    tree_likelihood,
    tree_log_likelihood,
    universal_decode,
)
from .directed_info import (
    DirectedInfoResult,
    continuity_bound_check,
    directed_info_from_joint,
    directed_information,
    directed_information_kim,
    exchange_terms,
    information_functional,
    per_step_terms,
    state_gap_check,
    zero_capacity_witness,
)
from .errors import CapExceededError, NoStationaryError, NotMarkovianError, ValidationError
from .estimation import (
    empirical_violation_rate,
    estimate_memoryless_channel,
    mismatch_loss_bound,
    sanov_pinsker_bound,
    two_phase_scheme,
)
from .exponents import (
    beta_exponent,
    e0_lower_bound_check,
    f_n_exponent,
    fn_superadditivity_check,
    gallager_e0,
    optimal_rho,
    random_coding_bound,
)
from .presets import PRESETS, bsc_pair, burst_family, ge_gap_family, load_preset, zero_capacity_family
from .simulate import (
    Example1Row,
    TrialConfig,
    TrialResult,
    exact_error_probability,
    example1_config,
    example1_demo,
    example1_row,
    run_trials,
    simulate_batch,
)
from .verify import CheckResult, run_suites

__version__ = "0.1.0"

__all__ = [
    "CapExceededError",
    "CapacityReport",
    "CausalConditioning",
    "CheckResult",
    "CodeTree",
    "Codebook",
    "CompoundFamily",
    "ConcatTree",
    "DirectedInfoResult",
    "Example1Row",
    "FeedbackGapResult",
    "FeedbackMap",
    "FscSpec",
    "GilbertElliotParams",
    "MLDecoder",
    "NoStationaryError",
    "NotMarkovianError",
    "PRESETS",
    "RankingFunction",
    "SeparabilityReport",
    "SolverConfig",
    "SuperadditivityResult",
    "TreeType",
    "TrialConfig",
    "TrialResult",
    "UniversalDecoder",
    "ValidationError",
    "beta_exponent",
    "blahut_arimoto",
    "bsc",
    "bsc_pair",
    "build_ranking",
    "burst_family",
    "causal_channel_prob",
    "causal_log_prob_rows",
    "causal_prob_rows",
    "channel_prob_table",
    "compute_Cn",
    "compute_Cn_markovian",
    "compute_Cn_nofeedback",
    "continuity_bound_check",
    "delta_rate_penalty",
    "directed_info_from_joint",
    "directed_information",
    "directed_information_kim",
    "dominant_type_subcode",
    "e0_lower_bound_check",
    "empirical_violation_rate",
    "estimate_memoryless_channel",
    "exact_error_probability",
    "example1_config",
    "example1_demo",
    "example1_row",
    "exchange_terms",
    "f_n_exponent",
    "feedback_paths",
    "fn_superadditivity_check",
    "forward_pass",
    "gallager_e0",
    "ge_feedback_gap",
    "ge_gap_family",
    "history_index",
    "identity_feedback",
    "iid_policy",
    "information_functional",
    "input_prob",
    "joint_and_output_probs",
    "kernel_distance",
    "load_channel",
    "load_family",
    "load_policy",
    "load_preset",
    "make_gilbert_elliot",
    "make_memoryless",
    "memoryless_compound_fb_capacity",
    "merge_rankings",
    "mismatch_loss_bound",
    "mixture_policy",
    "ml_decode",
    "naive_causal_channel_prob",
    "nearest_member",
    "no_feedback",
    "optimal_rho",
    "path",
    "paths_rows",
    "per_step_terms",
    "policy_weight_table",
    "product_policy",
    "quantize_channel",
    "quantize_family",
    "random_coding_bound",
    "random_policy",
    "run_suites",
    "run_trials",
    "sample_codebook",
    "sample_codetree",
    "sample_concat_codebook",
    "sample_uniform_from_type",
    "sanov_pinsker_bound",
    "save_family",
    "save_policy",
    "separability_check",
    "simulate_batch",
    "state_gap_check",
    "state_transition_matrix",
    "stationary_distribution",
    "superadditivity_check",
    "tree_code",
    "tree_from_code",
    "tree_likelihood",
    "tree_log_likelihood",
    "tree_prob",
    "tree_size",
    "tree_type",
    "two_phase_scheme",
    "type_count_bound",
    "uniform_ergodicity_horizon",
    "uniform_policy",
    "universal_decode",
    "zero_capacity_family",
    "zero_capacity_witness",
]

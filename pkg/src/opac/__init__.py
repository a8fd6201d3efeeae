"""Tabular off-policy actor-critic with decaying regularization, plus exact oracles.

Two training algorithms on finite MDPs: an off-policy actor-critic whose
actor is regularized toward the uniform policy with a decaying weight, and an
expected soft (entropy-regularized) actor-critic. Everything an experiment
reports is checkable against closed-form linear-algebra oracles, and runs are
bit-reproducible from (config, seed).
"""

from .actor_critic import (
    AgentState,
    ProjectionConfig,
    StepRecord,
    TrainingAborted,
    alg1_step,
    alg2_step,
    default_projection,
    evaluate_policy,
    init_agent,
    project,
    run_steps,
)
from .harness import (
    CSV_HEADER,
    MetricsRow,
    RunConfig,
    RunSummary,
    StationarityReport,
    SweepSummary,
    build_mdp,
    load_config,
    parse_config_text,
    parse_seed_spec,
    run_experiment,
    stationarity_report,
    sweep,
)
from .mdp import (
    ChainSpec,
    TabularMdp,
    chain_domain,
    load_mdp,
    sample_index,
    save_mdp,
    step,
    validate,
)
from .oracle import (
    ContractionCertificate,
    MixingEstimate,
    SoftValueTables,
    ValueTables,
    contraction_certificate,
    discounted_occupancy,
    exact_objective_and_gradients,
    exact_q,
    exact_soft_q,
    lp_norm,
    mixing_estimate,
    optimal_return,
    pair_transition_matrix,
    state_transition_matrix,
    stationary_distribution,
)
from .policy import (
    BehaviorPolicyConfig,
    PolicyParams,
    entropy,
    grad_entropy,
    grad_kl_uniform,
    grad_log_pi,
    importance_ratio,
    kl_uniform,
    load_theta,
    log_pi,
    mu,
    mu_table,
    pi,
    pi_table,
    save_theta,
)
from .sa_engine import (
    OperatorFamily,
    SaState,
    expected_sarsa_operator,
    sa_step,
    soft_expected_sarsa_operator,
    tracking_error,
)
from .schedule import ScheduleSet, default_schedule, rates, validate_assumptions

__all__ = [
    "AgentState",
    "BehaviorPolicyConfig",
    "CSV_HEADER",
    "ChainSpec",
    "ContractionCertificate",
    "MetricsRow",
    "MixingEstimate",
    "OperatorFamily",
    "PolicyParams",
    "ProjectionConfig",
    "RunConfig",
    "RunSummary",
    "SaState",
    "ScheduleSet",
    "SoftValueTables",
    "StationarityReport",
    "StepRecord",
    "SweepSummary",
    "TabularMdp",
    "TrainingAborted",
    "ValueTables",
    "alg1_step",
    "alg2_step",
    "build_mdp",
    "chain_domain",
    "contraction_certificate",
    "default_projection",
    "default_schedule",
    "discounted_occupancy",
    "entropy",
    "evaluate_policy",
    "exact_objective_and_gradients",
    "exact_q",
    "exact_soft_q",
    "expected_sarsa_operator",
    "grad_entropy",
    "grad_kl_uniform",
    "grad_log_pi",
    "importance_ratio",
    "init_agent",
    "kl_uniform",
    "load_config",
    "load_mdp",
    "load_theta",
    "log_pi",
    "lp_norm",
    "mixing_estimate",
    "mu",
    "mu_table",
    "optimal_return",
    "pair_transition_matrix",
    "parse_config_text",
    "parse_seed_spec",
    "pi",
    "pi_table",
    "project",
    "rates",
    "run_experiment",
    "run_steps",
    "sa_step",
    "sample_index",
    "save_mdp",
    "save_theta",
    "soft_expected_sarsa_operator",
    "state_transition_matrix",
    "stationarity_report",
    "stationary_distribution",
    "step",
    "sweep",
    "tracking_error",
    "validate",
    "validate_assumptions",
]

"""Adaptive social learning over agent networks, and the inverse problem of
recovering each agent's influences and data quality from public beliefs."""

from .errors import (
    AssumptionViolationError,
    ConfigError,
    DataError,
    GraphGenerationError,
    InsufficientDataError,
    NumericalError,
    SocLearnError,
)
from .forward import (
    SimulationTrace,
    adapt_step,
    combine_step,
    estimate_states,
    init_log_beliefs,
    iter_psi_jsonl,
    lambda_from_beliefs,
    likelihood_log_ratios,
    linear_recursion_step,
    read_trace_csv,
    read_trace_json,
    run_simulation,
    write_psi_jsonl,
    write_trace_csv,
    write_trace_json,
)
from .graphs import (
    CombinationMatrix,
    generate_erdos_renyi,
    is_strongly_connected,
    perron_vector,
    read_matrix_csv,
    read_matrix_json,
    write_matrix_csv,
    write_matrix_json,
)
from .harness import (
    ExperimentConfig,
    MetricsReport,
    TrialMetrics,
    binary_detection_scenario,
    load_experiment_config,
    rotated_categorical_scenario,
    run_experiment,
    run_trial,
    social_learning_accuracy,
    write_metrics_csv,
    write_metrics_json,
)
from .inverse import (
    BoundEntry,
    HypothesisEstimate,
    InverseConfig,
    InverseEstimator,
    InverseResult,
    estimate_hypothesis_sets,
    estimate_trace_r,
    expected_log_ratios,
    informativeness,
    project_left_stochastic,
    run_inverse,
    theorem_bound,
    theorem_bound_table,
)
from .models import (
    AgentTruth,
    CategoricalLikelihood,
    GaussianLikelihood,
    LikelihoodModel,
    check_bounded_likelihoods,
    make_truths,
    optimal_set,
    read_model_spec,
    write_model_spec,
)

__version__ = "0.1.0"

__all__ = [
    "AgentTruth",
    "AssumptionViolationError",
    "BoundEntry",
    "CategoricalLikelihood",
    "CombinationMatrix",
    "ConfigError",
    "DataError",
    "ExperimentConfig",
    "GaussianLikelihood",
    "GraphGenerationError",
    "HypothesisEstimate",
    "InsufficientDataError",
    "InverseConfig",
    "InverseEstimator",
    "InverseResult",
    "LikelihoodModel",
    "MetricsReport",
    "NumericalError",
    "SimulationTrace",
    "SocLearnError",
    "TrialMetrics",
    "adapt_step",
    "binary_detection_scenario",
    "check_bounded_likelihoods",
    "combine_step",
    "estimate_hypothesis_sets",
    "estimate_states",
    "estimate_trace_r",
    "expected_log_ratios",
    "generate_erdos_renyi",
    "informativeness",
    "init_log_beliefs",
    "is_strongly_connected",
    "iter_psi_jsonl",
    "lambda_from_beliefs",
    "likelihood_log_ratios",
    "linear_recursion_step",
    "load_experiment_config",
    "make_truths",
    "optimal_set",
    "perron_vector",
    "project_left_stochastic",
    "read_matrix_csv",
    "read_matrix_json",
    "read_model_spec",
    "read_trace_csv",
    "read_trace_json",
    "rotated_categorical_scenario",
    "run_experiment",
    "run_inverse",
    "run_simulation",
    "run_trial",
    "social_learning_accuracy",
    "theorem_bound",
    "theorem_bound_table",
    "write_matrix_csv",
    "write_matrix_json",
    "write_metrics_csv",
    "write_metrics_json",
    "write_model_spec",
    "write_psi_jsonl",
    "write_trace_csv",
    "write_trace_json",
]

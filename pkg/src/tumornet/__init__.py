"""Logistic-map tumor growth simulation and staged neural classification.

Synthesizes cohorts of benign and metastasizing growth trajectories from
a noisy logistic cell-population map, then trains a chain of small
from-scratch networks to regress growth features and separate the two
classes, with tooling to compare the trained classifier against the
exact Bayes posterior.
"""

from tumornet._dispatch import BACKEND, USE_NUMBA
from tumornet.cohort import (
    Cohort,
    CohortConfig,
    FeatureBounds,
    PatientRecord,
    Phase,
    generate_benign,
    generate_cohort,
    generate_malignant,
    load_cohort,
    phase_target,
    save_cohort,
    split,
    synthesize_counter_examples,
    to_feature_vector,
)
from tumornet.errors import (
    CoverageError,
    DivergenceError,
    DomainError,
    FormatError,
    NumericalError,
    ScalingError,
    SingularityError,
    TumornetError,
    UsageError,
)
from tumornet.evaluate import (
    ClassDensityPair,
    Density,
    EvalReport,
    bayes_posterior,
    classification_metrics,
    default_grid,
    evaluate_cohort,
    expected_sse,
    oracle_curve,
    posterior_convergence_experiment,
    regression_metrics,
)
from tumornet.growth import (
    GeneActivitySignature,
    GeneSensitivity,
    LogisticParams,
    RegimeKind,
    RegimeLabel,
    RubinowDiscretization,
    Trajectory,
    bifurcation_scan,
    classify_regime,
    gene_activity_to_growth_rate,
    logistic_step,
    lyapunov_exponent,
    rubinow_to_logistic,
    simulate,
)
from tumornet.nested import (
    NestedModel,
    NestedTrainPlan,
    PhasePlan,
    build_phase_input,
    default_plan,
    load_model,
    predict,
    predict_batch,
    save_model,
    train_nested,
    train_novelty,
)
from tumornet.network import (
    Network,
    NetworkSpec,
    TrainConfig,
    Transfer,
    backprop_gradients,
    batch_outputs,
    forward,
    grow_hidden_until_adequate,
    init_network,
    sse_loss,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "USE_NUMBA",
    "Cohort",
    "CohortConfig",
    "FeatureBounds",
    "PatientRecord",
    "Phase",
    "generate_benign",
    "generate_cohort",
    "generate_malignant",
    "load_cohort",
    "phase_target",
    "save_cohort",
    "split",
    "synthesize_counter_examples",
    "to_feature_vector",
    "CoverageError",
    "DivergenceError",
    "DomainError",
    "FormatError",
    "NumericalError",
    "ScalingError",
    "SingularityError",
    "TumornetError",
    "UsageError",
    "ClassDensityPair",
    "Density",
    "EvalReport",
    "bayes_posterior",
    "classification_metrics",
    "default_grid",
    "evaluate_cohort",
    "expected_sse",
    "oracle_curve",
    "posterior_convergence_experiment",
    "regression_metrics",
    "GeneActivitySignature",
    "GeneSensitivity",
    "LogisticParams",
    "RegimeKind",
    "RegimeLabel",
    "RubinowDiscretization",
    "Trajectory",
    "bifurcation_scan",
    "classify_regime",
    "gene_activity_to_growth_rate",
    "logistic_step",
    "lyapunov_exponent",
    "rubinow_to_logistic",
    "simulate",
    "NestedModel",
    "NestedTrainPlan",
    "PhasePlan",
    "build_phase_input",
    "default_plan",
    "load_model",
    "predict",
    "predict_batch",
    "save_model",
    "train_nested",
    "train_novelty",
    "Network",
    "NetworkSpec",
    "TrainConfig",
    "Transfer",
    "backprop_gradients",
    "batch_outputs",
    "forward",
    "grow_hidden_until_adequate",
    "init_network",
    "sse_loss",
    "train",
    "__version__",
]

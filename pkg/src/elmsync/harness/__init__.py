"""Experiment driver: configuration, Monte Carlo evaluation, sweeps and export."""

from .config import ExperimentConfig, config_from_dict, load_config
from .scenarios import SCENARIOS, run_experiment_suite, run_fig2, run_gen_eta, run_gen_L
from .simulate import (
    CurveRow,
    ErrorProbabilityCurve,
    Estimator,
    TrialOutcome,
    collect_training_data,
    elm_estimator,
    evaluate,
    evaluate_curve,
    generate_training_set,
    resolve_eta,
    run_trial,
    sc_corr_estimator,
    timing_error,
    train_estimator,
    ts_learn_estimator,
    ts_learn_features,
    wilson_interval,
)

"""The three experiment families and the sweep driver that writes them out."""

import logging
from pathlib import Path

from ..labels import LabelScheme
from .config import ExperimentConfig
from .report import write_curve_csv, write_plot_script
from .simulate import Estimator, collect_training_data, evaluate, resolve_eta, train_estimator

__all__ = ["SCENARIOS", "run_fig2", "run_gen_L", "run_gen_eta", "run_experiment_suite"]

log = logging.getLogger(__name__)

PROPOSED = (LabelScheme.MIDPOINT.value, LabelScheme.ISI_FREE.value)
ALL_LABELS = (LabelScheme.ONEHOT_END.value,) + PROPOSED


def run_fig2(cfg: ExperimentConfig, snr_grid_db=None, n_trials=None):
    """SC_corr, TS_Learn and the three label designs on common windows.

    Training and testing share ``L_train``/``L_test`` and the back-off
    calibrated to ``cfg.target_evm`` unless ``eta_train``/``eta_test`` are set.
    """
    data = collect_training_data(cfg, features=("metric", "raw"))
    log.info("fig2: trained on %d windows, eta=%.4f", len(data["theta"]), data["eta"])
    estimators = [Estimator("sc_corr"), train_estimator(cfg, "ts_learn", data, LabelScheme.ISI_FREE.value)]
    estimators += [train_estimator(cfg, "elm", data, scheme) for scheme in ALL_LABELS]
    return evaluate(cfg, estimators, scenario="fig2", snr_grid_db=snr_grid_db, n_trials=n_trials)


def run_gen_L(cfg: ExperimentConfig, snr_grid_db=None, n_trials=None, L_grid=None):
    """Every (L_train, L_test) pair for both proposed labels, plus SC_corr per L_test."""
    L_grid = cfg.L_grid if L_grid is None else L_grid
    trained = []
    for L_train in L_grid:
        data = collect_training_data(cfg, L=L_train, features=("metric",))
        trained += [train_estimator(cfg, "elm", data, scheme) for scheme in PROPOSED]
    curves = []
    for L_test in L_grid:
        curves += evaluate(
            cfg, [Estimator("sc_corr")] + trained, scenario="genL",
            snr_grid_db=snr_grid_db, L_test=L_test, n_trials=n_trials,
        )
    return curves


def run_gen_eta(cfg: ExperimentConfig, snr_grid_db=None, n_trials=None, eta_grid=None):
    """Every (eta_train, eta_test) pair for both proposed labels, plus SC_corr per eta_test."""
    eta_grid = cfg.eta_grid if eta_grid is None else eta_grid
    trained = []
    for eta_train in eta_grid:
        data = collect_training_data(cfg, eta=eta_train, features=("metric",))
        trained += [train_estimator(cfg, "elm", data, scheme) for scheme in PROPOSED]
    curves = []
    for eta_test in eta_grid:
        curves += evaluate(
            cfg, [Estimator("sc_corr")] + trained, scenario="genEta",
            snr_grid_db=snr_grid_db, eta_test=eta_test, n_trials=n_trials,
        )
    return curves


SCENARIOS = {"fig2": run_fig2, "genL": run_gen_L, "genEta": run_gen_eta}


def curve_filename(curve) -> str:
    parts = [curve.scenario, curve.name.replace("-", "")]
    if curve.L_train is not None:
        parts.append(f"Ltr{curve.L_train}")
    parts.append(f"Lte{curve.L_test}")
    if curve.eta_train is not None:
        parts.append(f"etr{curve.eta_train:.4g}")
    parts.append(f"ete{curve.eta_test:.4g}")
    return "_".join(parts) + ".csv"


def run_experiment_suite(scenario: str, cfg: ExperimentConfig, outdir, *, render=True) -> list[Path]:
    """Run one scenario and write a CSV per curve, a plot script and (optionally) a PNG."""
    if scenario not in SCENARIOS:
        raise KeyError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIOS)}")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    resolve_eta(cfg, cfg.eta_train)
    curves = SCENARIOS[scenario](cfg)
    written = [write_curve_csv(c, outdir / curve_filename(c)) for c in curves]
    written.append(write_plot_script(outdir / f"plot_{scenario}.py", scenario))
    if render:
        from ..plotting import plot_scenario

        written.append(plot_scenario(curves, scenario, outdir / f"{scenario}.png"))
    return written

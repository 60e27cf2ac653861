import math
from dataclasses import dataclass, field

import numpy as np
import pytest
import scipy.stats
import yaml

from elmsync import rng as rngmod
from elmsync.elm import init_elm
from elmsync.errors import ConfigurationError, DomainError, StateError
from elmsync.harness import (
    ExperimentConfig,
    Estimator,
    collect_training_data,
    config_from_dict,
    evaluate,
    evaluate_curve,
    generate_training_set,
    load_config,
    run_experiment_suite,
    run_trial,
    sc_corr_estimator,
    timing_error,
    train_estimator,
    ts_learn_estimator,
    ts_learn_features,
    wilson_interval,
)
from elmsync.harness.report import COLUMNS, read_curve_csv
from elmsync.harness.simulate import resolve_eta, window_source
from elmsync.metric import timing_metric

SMALL = ExperimentConfig(
    eta_train=0.05, eta_test=0.05, n_train=300, n_test_trials=200,
    snr_grid_db=(8.0, 16.0), chunk_size=64, n_hidden=64, n_hidden_raw=64,
)


@dataclass
class OracleEstimator:
    """Returns a fixed offset from the true STO, read from the test stream."""

    thetas: list
    offset: object
    kind: str = "oracle"
    label_scheme: str = ""
    L_train: int = None
    eta_train: float = None
    name: str = "oracle"
    _pos: list = field(default_factory=lambda: [0])

    def predict(self, features):
        n = len(features.r)
        start = self._pos[0] % len(self.thetas)
        self._pos[0] += n
        theta = np.asarray(self.thetas[start:start + n])
        return self.offset(theta)


def _test_thetas(cfg, snr):
    src = window_source(cfg, stream=rngmod.STREAM_TEST, L=cfg.L_test, eta=cfg.eta_test, snr_grid_db=[snr])
    return [src.draw(i)["theta"] for i in range(cfg.n_test_trials)]


# ------------------------------------------------------------ config


def test_config_defaults():
    cfg = ExperimentConfig()
    assert cfg.hidden_units == 640 and cfg.hidden_units_raw == 1280
    assert cfg.n_lead_symbols == 2


@pytest.mark.parametrize("kw", [
    dict(L_train=16), dict(L_test=0), dict(n_train=0), dict(snr_grid_db=()),
    dict(estimator="ml"), dict(nu_mode="sweep"), dict(eta_test=-0.1), dict(workers=0),
])
def test_config_invariants(kw):
    with pytest.raises(ConfigurationError):
        ExperimentConfig(**kw)


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigurationError) as exc:
        config_from_dict({"n_train": 4, "bogus": 1, "system": {"N": 64, "Nq": 3}})
    assert "bogus" in str(exc.value) and "system.Nq" in str(exc.value)


def test_load_config_yaml(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({"n_train": 8, "system": {"N": 32, "Ng": 8}, "snr_grid_db": [10],
                                    "L_train": 4, "L_test": 4, "L_grid": [2, 4]}))
    cfg = load_config(path)
    assert cfg.n_train == 8 and cfg.system.Nd == 80 and cfg.snr_grid_db == (10.0,)
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_calibrated_eta_near_forty_percent_point():
    eta = resolve_eta(ExperimentConfig(), None)
    assert 0.04 < eta < 0.06


# ------------------------------------------------------------ training data


def test_training_set_small():
    ts = generate_training_set(SMALL.with_(n_train=4))
    assert ts.inputs.shape == (4, 160) and ts.targets.shape == (4, 160)
    np.testing.assert_allclose(np.linalg.norm(ts.inputs, axis=1), 1.0, rtol=1e-9)
    assert np.all(ts.targets.sum(axis=1) == SMALL.system.Ng - SMALL.L_train + 2)
    again = generate_training_set(SMALL.with_(n_train=4))
    assert np.array_equal(ts.inputs, again.inputs) and np.array_equal(ts.theta, again.theta)


def test_training_data_independent_of_chunking():
    a = collect_training_data(SMALL.with_(chunk_size=7), n=50)
    b = collect_training_data(SMALL.with_(chunk_size=50), n=50)
    assert np.array_equal(a["metric"], b["metric"]) and np.array_equal(a["theta"], b["theta"])


def test_training_shares_theta_across_channel_lengths():
    a = collect_training_data(SMALL, L=8, n=20)
    b = collect_training_data(SMALL, L=12, n=20)
    assert np.array_equal(a["theta"], b["theta"])


# ------------------------------------------------------------ estimators


def test_error_region_boundaries():
    theta, L, Ng = 20, 8, 16
    assert not timing_error(theta + L, theta, L, Ng)
    assert timing_error(theta + L - 1, theta, L, Ng)
    assert not timing_error(theta + Ng + 1, theta, L, Ng)
    assert timing_error(theta + Ng + 2, theta, L, Ng)


def test_sc_corr_on_clean_plateau(params):
    # Halves copied bit-for-bit and silence around the preamble: M is exactly 1
    # from theta onwards and below 1 before, so the earliest maximum is theta.
    # A random payload right after the preamble can push M slightly above 1
    # just past the plateau, which is why it is left out here.
    N, Ng = params.N, params.Ng
    rng = np.random.default_rng(0)
    for theta in (0, 17, 90, params.max_theta):
        half = rng.standard_normal(N // 2) + 1j * rng.standard_normal(N // 2)
        body = np.concatenate([half, half])
        pre = np.concatenate([body[-Ng:], body]) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        r = np.zeros(params.observation_length, dtype=complex)
        r[theta:theta + len(pre)] = pre[:params.observation_length - theta]
        M = timing_metric(r, params)
        assert np.all(M[theta:theta + Ng + 1] == 1.0)
        est = sc_corr_estimator(r, params)
        assert theta <= est <= theta + Ng


def test_sc_corr_zero_window(params):
    assert sc_corr_estimator(np.zeros((1, params.observation_length)), params)[0] == 0


def test_ts_learn_features(params):
    r = np.random.default_rng(0).standard_normal((3, params.observation_length)) + 0j
    r[1] = 0
    f = ts_learn_features(r, params)
    assert f.shape == (3, 2 * params.Nd)
    assert math.isclose(np.linalg.norm(f[0]), 1.0, rel_tol=1e-12)
    assert np.array_equal(f[1], np.zeros(2 * params.Nd))
    model = init_elm(8, 2 * params.Nd, 0)
    model = model.__class__(model.W, model.b, np.random.default_rng(1).standard_normal((params.Nd, 8)))
    est = ts_learn_estimator(r, model, params)
    assert np.array_equal(est, ts_learn_estimator(r, model, params))
    bad = init_elm(8, params.Nd, 0)
    bad = bad.__class__(bad.W, bad.b, np.zeros((params.Nd, 8)))
    with pytest.raises(DomainError):
        ts_learn_estimator(r, bad, params)
    zero = model.__class__(model.W, np.zeros(8), model.upsilon)
    assert ts_learn_estimator(np.zeros((1, params.observation_length)), zero, params)[0] == 0


def test_untrained_estimators_rejected():
    with pytest.raises(StateError):
        Estimator("elm")
    with pytest.raises(StateError):
        run_trial(SMALL, "elm")


# ------------------------------------------------------------ evaluation


def test_oracle_estimators():
    cfg = SMALL.with_(snr_grid_db=(8.0,))
    thetas = _test_thetas(cfg, 8.0)
    inside = OracleEstimator(thetas, lambda t: t + cfg.system.Ng)
    curve = evaluate(cfg, [inside])[0]
    assert curve.rows[0].n_errors == 0
    cfg_lo = SMALL.with_(snr_grid_db=(8.0,))
    never = OracleEstimator(thetas, lambda t: np.zeros_like(t))
    curve = evaluate(cfg_lo, [never])[0]
    # theta + L_test >= 1 for every draw, so index 0 is always outside the region
    assert curve.rows[0].p_error == 1.0


def test_binomial_coverage_at_one_percent():
    # observed p within [0.008, 0.012] for n=1e4, p=0.01
    n, p = 10_000, 0.01
    exact = scipy.stats.binom.cdf(120, n, p) - scipy.stats.binom.cdf(79, n, p)
    assert exact >= 0.95
    counts = np.random.default_rng(0).binomial(n, p, 4000)
    assert np.mean((counts >= 80) & (counts <= 120)) >= 0.95
    covered = [lo <= p <= hi for lo, hi in (wilson_interval(int(k), n) for k in counts[:1000])]
    assert 0.93 <= np.mean(covered) <= 0.97


def test_wilson_edges():
    assert wilson_interval(0, 100)[0] == 0.0
    assert wilson_interval(100, 100)[1] == 1.0
    lo, hi = wilson_interval(10, 100)
    assert lo < 0.1 < hi
    # published value for k=10, n=100: [0.0552, 0.1744]
    assert math.isclose(lo, 0.0552, abs_tol=1e-4) and math.isclose(hi, 0.1744, abs_tol=1e-4)


@pytest.fixture(scope="module")
def small_models():
    data = collect_training_data(SMALL, features=("metric", "raw"))
    return {
        "elm": train_estimator(SMALL, "elm", data, "isi_free"),
        "ts_learn": train_estimator(SMALL, "ts_learn", data, "isi_free"),
    }


def test_run_trial_matches_evaluate(small_models):
    cfg = SMALL.with_(snr_grid_db=(16.0,), n_test_trials=40)
    elm = small_models["elm"]
    curve = evaluate(cfg, [Estimator("sc_corr"), elm])
    for kind, c, model in (("sc_corr", curve[0], None), ("elm", curve[1], elm.model)):
        outcomes = [run_trial(cfg, kind, model, 16.0, i) for i in range(40)]
        assert sum(o.is_error for o in outcomes) == c.rows[0].n_errors
        for o in outcomes:
            assert o.is_error == bool(timing_error(o.theta_hat, o.theta, cfg.L_test, cfg.system.Ng))


def test_curves_sorted_and_consistent(small_models):
    cfg = SMALL.with_(snr_grid_db=(16.0, 8.0))
    curve = evaluate_curve(cfg, small_models["elm"])
    assert curve.snr_db == [8.0, 16.0]
    for row in curve.rows:
        assert row.p_error == row.n_errors / row.n_trials
        assert row.ci_low <= row.p_error <= row.ci_high


def test_common_random_numbers(small_models):
    cfg = SMALL.with_(snr_grid_db=(8.0,))
    alone = evaluate(cfg, [Estimator("sc_corr")])[0]
    together = evaluate(cfg, [small_models["ts_learn"], Estimator("sc_corr")])[1]
    assert alone.rows == together.rows


def test_reproducible_across_workers(small_models):
    cfg = SMALL.with_(snr_grid_db=(8.0,), n_test_trials=150, chunk_size=32)
    ests = [Estimator("sc_corr"), small_models["elm"]]
    one = evaluate(cfg, ests)
    two = evaluate(cfg.with_(workers=2), ests)
    assert [c.rows for c in one] == [c.rows for c in two]


# ------------------------------------------------------------ suites and export


@pytest.mark.parametrize("scenario,n_curves", [("fig2", 5), ("genL", 3 * (1 + 6)), ("genEta", 3 * (1 + 6))])
def test_suite_outputs(tmp_path, scenario, n_curves):
    cfg = SMALL.with_(n_train=100, n_test_trials=40, snr_grid_db=(12.0,), n_hidden=32, n_hidden_raw=32)
    paths = run_experiment_suite(scenario, cfg, tmp_path, render=scenario == "fig2")
    csvs = [p for p in paths if p.suffix == ".csv"]
    assert len(csvs) == n_curves
    assert (tmp_path / f"plot_{scenario}.py").exists()
    if scenario == "fig2":
        assert (tmp_path / "fig2.png").stat().st_size > 0
        names = {(r["estimator"], r["label_scheme"]) for p in csvs for r in read_curve_csv(p)}
        assert len(names) == 5
    header = csvs[0].read_text().splitlines()[0]
    assert header == ",".join(COLUMNS)
    if scenario == "genL":
        pairs = {(r["L_train"], r["L_test"]) for p in csvs for r in read_curve_csv(p) if r["L_train"] not in ("", None)}
        assert len(pairs) == 9


def test_shipped_configs_load():
    from pathlib import Path

    paths = sorted((Path(__file__).parent.parent / "configs").glob("*.yaml"))
    assert len(paths) >= 4
    for path in paths:
        load_config(path)

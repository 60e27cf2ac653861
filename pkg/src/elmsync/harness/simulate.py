"""Monte Carlo machinery: window generation, estimators, training, evaluation.

Each trial's randomness (STO, payload, CFO, phase, noise, channel) comes from
its own generator keyed by ``(master_seed, stream, snr, index)``.  Trials are
rendered in fixed-size chunks; with more than one worker the chunks are
farmed out to processes and reassembled in order, so results are identical
for any worker count.  Channel taps are drawn last so that runs differing
only in channel length share every other draw.
"""

import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import repeat

import numpy as np

from .. import rng as rngmod
from ..elm import ElmModel, TrainingSet, estimate_sto, infer, init_elm, train
from ..errors import DomainError, StateError
from ..frame import SystemParams, add_cyclic_prefix, build_schmidl_preamble, modulate_subcarriers, ofdm_modulate
from ..impairments import (
    SalehParams,
    calibrate_backoff,
    complex_noise,
    draw_channel,
    propagate,
    saleh_distort,
    snr_to_noise_variance,
)
from ..labels import LabelScheme, make_labels
from ..metric import normalize_tm, sc_corr_estimate, timing_metric
from .config import ExperimentConfig

__all__ = [
    "WindowSource",
    "Estimator",
    "CurveRow",
    "ErrorProbabilityCurve",
    "TrialOutcome",
    "wilson_interval",
    "timing_error",
    "resolve_eta",
    "preamble_for",
    "window_source",
    "collect_training_data",
    "generate_training_set",
    "train_estimator",
    "sc_corr_estimator",
    "elm_estimator",
    "ts_learn_features",
    "ts_learn_estimator",
    "run_trial",
    "evaluate",
    "evaluate_curve",
]


# ---------------------------------------------------------------- windows


@dataclass(frozen=True)
class WindowSource:
    """Everything needed to render trial ``i`` of one Monte Carlo stream."""

    params: SystemParams
    saleh: SalehParams
    preamble: np.ndarray = field(repr=False)
    eta: float
    L: int
    snr_grid_db: tuple
    sigma_P2: float
    master_seed: int
    stream: int
    nu_mode: str = "random"
    nu: float = 0.0
    phi_mode: str = "random"
    phi: float = 0.0
    pdp_decay_db: float = 3.0
    n_payload: int = 2
    n_lead: int = 0

    @property
    def key(self) -> int:
        # Test streams run one SNR each and key on it; training streams mix SNRs.
        if self.stream == rngmod.STREAM_TEST and len(self.snr_grid_db) == 1:
            return rngmod.snr_key(self.snr_grid_db[0])
        return 0

    def draw(self, index: int) -> dict:
        p = self.params
        g = rngmod.trial_rng(self.master_seed, self.stream, self.key, index)
        theta = int(g.integers(0, p.max_theta + 1))
        snr = self.snr_grid_db[0] if len(self.snr_grid_db) == 1 else self.snr_grid_db[g.integers(len(self.snr_grid_db))]
        n_sym = self.n_lead + self.n_payload
        payload = modulate_subcarriers(g, p, n=n_sym * p.N).reshape(n_sym, p.N)
        nu = g.uniform(-0.5, 0.5) if self.nu_mode == "random" else self.nu
        phi = g.uniform(0.0, 2.0 * math.pi) if self.phi_mode == "random" else self.phi
        noise = complex_noise(g, p.observation_length)
        taps = draw_channel(self.L, self.pdp_decay_db, g).taps
        return dict(theta=theta, snr=snr, payload=payload, nu=nu, phi=phi, noise=noise, taps=taps)

    def render(self, start: int, stop: int):
        """Trials ``start .. stop-1`` as ``(theta, snr_db, r)`` with ``r`` of
        length ``Nd + N - 1``."""
        p = self.params
        draws = [self.draw(i) for i in range(start, stop)]
        B = len(draws)
        theta = np.array([d["theta"] for d in draws], dtype=np.int64)
        snr = np.array([d["snr"] for d in draws], dtype=float)
        payload = np.stack([d["payload"] for d in draws])
        data = add_cyclic_prefix(ofdm_modulate(payload), p.Ng).reshape(B, -1)
        lead = self.n_lead * p.symbol_length
        frames = np.concatenate(
            [data[:, :lead], np.broadcast_to(self.preamble, (B, len(self.preamble))), data[:, lead:]], axis=1
        )
        s_tilde = saleh_distort(frames, self.saleh, self.eta)
        r = propagate(
            s_tilde,
            np.stack([d["taps"] for d in draws]),
            theta - lead,
            np.array([d["nu"] for d in draws]),
            np.array([d["phi"] for d in draws]),
            p.N,
            p.observation_length,
        )
        sigma2 = np.array([snr_to_noise_variance(s, self.sigma_P2) for s in snr])
        r += np.sqrt(sigma2)[:, None] * np.stack([d["noise"] for d in draws])
        return theta, snr, r


def _render_chunk(source: WindowSource, start: int, stop: int):
    return source.render(start, stop)


def iter_chunks(source: WindowSource, n: int, chunk_size: int, workers: int = 1):
    """Yield rendered chunks in trial order."""
    starts = list(range(0, n, chunk_size))
    stops = [min(s + chunk_size, n) for s in starts]
    if workers <= 1 or len(starts) <= 1:
        for a, b in zip(starts, stops):
            yield source.render(a, b)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(_render_chunk, repeat(source), starts, stops)


@lru_cache(maxsize=32)
def _preamble(params: SystemParams, seed: int) -> np.ndarray:
    pre = build_schmidl_preamble(seed, params)
    pre.setflags(write=False)
    return pre


def preamble_for(cfg: ExperimentConfig) -> np.ndarray:
    return _preamble(cfg.system, cfg.preamble_seed)


@lru_cache(maxsize=32)
def _calibrated(target, saleh, params, seed, trials):
    return calibrate_backoff(target, saleh, params, seed=seed, trials=trials)


def resolve_eta(cfg: ExperimentConfig, eta: float | None) -> float:
    """``eta`` itself, or the back-off calibrated to ``cfg.target_evm``."""
    if eta is not None:
        return float(eta)
    seed = rngmod.trial_seed(cfg.master_seed, rngmod.STREAM_CALIBRATE, 0, 0)
    return _calibrated(cfg.target_evm, cfg.saleh, cfg.system, int(seed.generate_state(1)[0]), cfg.calibration_trials)


def reference_power(cfg: ExperimentConfig, eta: float) -> float:
    """Power the SNR is referenced to: the transmitted (post-HPA) preamble,
    or ``sigma_d2`` when ``snr_reference == "sigma_d2"``."""
    if cfg.snr_reference == "sigma_d2":
        return cfg.system.sigma_d2
    return float(np.mean(np.abs(saleh_distort(preamble_for(cfg), cfg.saleh, eta)) ** 2))


def window_source(cfg: ExperimentConfig, *, stream: int, L: int, eta: float, snr_grid_db) -> WindowSource:
    return WindowSource(
        params=cfg.system,
        saleh=cfg.saleh,
        preamble=preamble_for(cfg),
        eta=eta,
        L=L,
        snr_grid_db=tuple(float(s) for s in snr_grid_db),
        sigma_P2=reference_power(cfg, eta),
        master_seed=cfg.master_seed,
        stream=stream,
        nu_mode=cfg.nu_mode,
        nu=cfg.nu,
        phi_mode=cfg.phi_mode,
        phi=cfg.phi,
        pdp_decay_db=cfg.pdp_decay_db,
        n_payload=cfg.n_payload_symbols,
        n_lead=cfg.n_lead_symbols,
    )


# ---------------------------------------------------------------- estimators


def sc_corr_estimator(r, params: SystemParams) -> np.ndarray:
    return sc_corr_estimate(timing_metric(r, params))


def elm_estimator(r, model: ElmModel, params: SystemParams) -> np.ndarray:
    return estimate_sto(infer(normalize_tm(timing_metric(r, params)), model))


def ts_learn_features(r, params: SystemParams) -> np.ndarray:
    """Real and imaginary parts of the Nd window samples, L2-normalised."""
    window = np.asarray(r, dtype=complex)[..., :params.Nd]
    if window.shape[-1] != params.Nd:
        raise DomainError(f"need at least Nd={params.Nd} samples, got {window.shape[-1]}")
    return normalize_tm(np.concatenate([window.real, window.imag], axis=-1))


def ts_learn_estimator(r, model: ElmModel, params: SystemParams) -> np.ndarray:
    if model.n_inputs != 2 * params.Nd:
        raise DomainError(f"raw-signal model expects {model.n_inputs} inputs, window gives {2 * params.Nd}")
    return estimate_sto(infer(ts_learn_features(r, params), model))


@dataclass(frozen=True)
class Estimator:
    """An estimator plus the metadata reported next to its curve."""

    kind: str
    model: ElmModel | None = None
    label_scheme: str = ""
    L_train: int | None = None
    eta_train: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.kind in ("elm", "ts_learn") and (self.model is None or not self.model.trained):
            raise StateError(f"estimator {self.kind!r} needs a trained model")
        if not self.name:
            object.__setattr__(self, "name", self.display_name)

    @property
    def display_name(self) -> str:
        if self.kind == "sc_corr":
            return "SC_corr"
        if self.kind == "ts_learn":
            return "TS_Learn"
        return LabelScheme.parse(self.label_scheme).display_name

    def predict(self, features: "_Features") -> np.ndarray:
        if self.kind == "sc_corr":
            return sc_corr_estimate(features.metric)
        if self.kind == "elm":
            return estimate_sto(infer(features.metric_normalized, self.model))
        return estimate_sto(infer(features.raw, self.model))


class _Features:
    """Lazily computed estimator inputs for one chunk of windows."""

    def __init__(self, r, params):
        self.r, self.params = r, params
        self._metric = self._normalized = self._raw = None

    @property
    def metric(self):
        if self._metric is None:
            self._metric = timing_metric(self.r, self.params)
        return self._metric

    @property
    def metric_normalized(self):
        if self._normalized is None:
            self._normalized = normalize_tm(self.metric)
        return self._normalized

    @property
    def raw(self):
        if self._raw is None:
            self._raw = ts_learn_features(self.r, self.params)
        return self._raw


# ---------------------------------------------------------------- curves

_Z95 = statistics.NormalDist().inv_cdf(0.975)


def wilson_interval(k: int, n: int, z: float = _Z95) -> tuple[float, float]:
    if n <= 0:
        return 0.0, 1.0
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class CurveRow:
    snr_db: float
    n_trials: int
    n_errors: int
    p_error: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, snr_db, n_trials, n_errors):
        lo, hi = wilson_interval(n_errors, n_trials)
        return cls(float(snr_db), int(n_trials), int(n_errors), n_errors / n_trials, lo, hi)


@dataclass
class ErrorProbabilityCurve:
    scenario: str
    estimator: str
    label_scheme: str
    L_train: int | None
    L_test: int
    eta_train: float | None
    eta_test: float
    master_seed: int
    name: str = ""
    rows: list = field(default_factory=list)

    def row(self, snr_db: float) -> CurveRow:
        for r in self.rows:
            if math.isclose(r.snr_db, snr_db):
                return r
        raise KeyError(snr_db)

    def p(self, snr_db: float) -> float:
        return self.row(snr_db).p_error

    @property
    def snr_db(self):
        return [r.snr_db for r in self.rows]


@dataclass(frozen=True)
class TrialOutcome:
    theta: int
    theta_hat: int
    is_error: bool


def timing_error(theta_hat, theta, L: int, Ng: int):
    """True where the estimate falls outside ``[theta + L, theta + Ng + 1]``."""
    theta_hat = np.asarray(theta_hat)
    theta = np.asarray(theta)
    return (theta_hat < theta + L) | (theta_hat > theta + Ng + 1)


def evaluate(
    cfg: ExperimentConfig,
    estimators,
    *,
    scenario: str = "eval",
    snr_grid_db=None,
    L_test: int | None = None,
    eta_test: float | None = None,
    n_trials: int | None = None,
) -> list[ErrorProbabilityCurve]:
    """Error-probability curves for several estimators on shared windows."""
    snr_grid_db = sorted(cfg.snr_grid_db if snr_grid_db is None else snr_grid_db)
    L_test = cfg.L_test if L_test is None else L_test
    eta = resolve_eta(cfg, cfg.eta_test if eta_test is None else eta_test)
    n_trials = cfg.n_test_trials if n_trials is None else n_trials
    p = cfg.system
    curves = [
        ErrorProbabilityCurve(
            scenario, e.kind, e.label_scheme, e.L_train, L_test, e.eta_train, eta, cfg.master_seed, e.name
        )
        for e in estimators
    ]
    for snr in snr_grid_db:
        src = window_source(cfg, stream=rngmod.STREAM_TEST, L=L_test, eta=eta, snr_grid_db=[snr])
        errors = [0] * len(estimators)
        for theta, _, r in iter_chunks(src, n_trials, cfg.chunk_size, cfg.workers):
            feats = _Features(r, p)
            for j, est in enumerate(estimators):
                errors[j] += int(np.count_nonzero(timing_error(est.predict(feats), theta, L_test, p.Ng)))
        for curve, k in zip(curves, errors):
            curve.rows.append(CurveRow.from_counts(snr, n_trials, k))
    return curves


def evaluate_curve(cfg: ExperimentConfig, estimator: str | Estimator, model: ElmModel | None = None, **kw):
    if isinstance(estimator, str):
        estimator = Estimator(
            estimator,
            model,
            label_scheme=cfg.label_scheme if estimator == "elm" else "",
            L_train=cfg.L_train if estimator != "sc_corr" else None,
            eta_train=resolve_eta(cfg, cfg.eta_train) if estimator != "sc_corr" else None,
        )
    return evaluate(cfg, [estimator], **kw)[0]


def run_trial(
    cfg: ExperimentConfig,
    estimator: str,
    model: ElmModel | None = None,
    snr_db: float = 20.0,
    trial_index: int = 0,
) -> TrialOutcome:
    """One test trial, seeded exactly like trial ``trial_index`` of :func:`evaluate`."""
    if estimator in ("elm", "ts_learn") and (model is None or not model.trained):
        raise StateError(f"estimator {estimator!r} needs a trained model")
    eta = resolve_eta(cfg, cfg.eta_test)
    src = window_source(cfg, stream=rngmod.STREAM_TEST, L=cfg.L_test, eta=eta, snr_grid_db=[snr_db])
    theta, _, r = src.render(trial_index, trial_index + 1)
    if estimator == "sc_corr":
        theta_hat = sc_corr_estimator(r, cfg.system)
    elif estimator == "elm":
        theta_hat = elm_estimator(r, model, cfg.system)
    elif estimator == "ts_learn":
        theta_hat = ts_learn_estimator(r, model, cfg.system)
    else:
        raise DomainError(f"unknown estimator {estimator!r}")
    err = timing_error(theta_hat[0], theta[0], cfg.L_test, cfg.system.Ng)
    return TrialOutcome(int(theta[0]), int(theta_hat[0]), bool(err))


# ---------------------------------------------------------------- training


def collect_training_data(cfg: ExperimentConfig, *, L: int | None = None, eta: float | None = None,
                          n: int | None = None, features=("metric",)) -> dict:
    """Training inputs of each requested kind (``metric``/``raw``) plus true STOs."""
    L = cfg.L_train if L is None else L
    eta = resolve_eta(cfg, cfg.eta_train if eta is None else eta)
    n = cfg.n_train if n is None else n
    src = window_source(cfg, stream=rngmod.STREAM_TRAIN, L=L, eta=eta, snr_grid_db=cfg.snr_grid_db)
    out = {k: [] for k in features}
    thetas = []
    for theta, _, r in iter_chunks(src, n, cfg.chunk_size, cfg.workers):
        feats = _Features(r, cfg.system)
        thetas.append(theta)
        for k in features:
            out[k].append(feats.metric_normalized if k == "metric" else feats.raw)
    data = {k: np.concatenate(v) for k, v in out.items()}
    data["theta"] = np.concatenate(thetas)
    data["L"], data["eta"] = L, eta
    return data


def generate_training_set(cfg: ExperimentConfig, *, features: str = "metric", label_scheme=None, **kw) -> TrainingSet:
    data = collect_training_data(cfg, features=(features,), **kw)
    scheme = cfg.label_scheme if label_scheme is None else label_scheme
    targets = make_labels(scheme, data["theta"], cfg.system, data["L"])
    return TrainingSet(data[features], targets, data["theta"])


def train_estimator(cfg: ExperimentConfig, kind: str, data: dict, label_scheme: str = "") -> Estimator:
    """Fit an ELM (``kind="elm"``) or raw-input ELM (``"ts_learn"``) on collected data."""
    if kind == "elm":
        model = init_elm(cfg.hidden_units, cfg.system.Nd, cfg.elm_seed)
        inputs = data["metric"]
    elif kind == "ts_learn":
        model = init_elm(cfg.hidden_units_raw, 2 * cfg.system.Nd, cfg.elm_seed + 1)
        inputs = data["raw"]
        label_scheme = label_scheme or cfg.label_scheme
    else:
        raise DomainError(f"cannot train estimator kind {kind!r}")
    targets = make_labels(label_scheme, data["theta"], cfg.system, data["L"])
    model = train(TrainingSet(inputs, targets), model, ridge=cfg.ridge)
    return Estimator(kind, model, label_scheme=label_scheme, L_train=data["L"], eta_train=data["eta"])

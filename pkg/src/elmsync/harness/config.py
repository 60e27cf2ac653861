"""Experiment configuration and its YAML loader."""

from dataclasses import asdict, dataclass, field, fields, replace

import yaml

from ..errors import ConfigurationError
from ..frame import SystemParams
from ..impairments import SalehParams
from ..labels import LabelScheme

__all__ = ["ExperimentConfig", "load_config", "config_from_dict", "ESTIMATORS"]

ESTIMATORS = ("sc_corr", "elm", "ts_learn")
_MODES = ("random", "fixed")
_SNR_REFERENCES = ("transmitted", "sigma_d2")


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemParams = field(default_factory=SystemParams)
    saleh: SalehParams = field(default_factory=SalehParams)
    label_scheme: str = "isi_free"
    estimator: str = "elm"
    snr_grid_db: tuple = (0.0, 4.0, 8.0, 12.0, 16.0, 20.0)
    n_train: int = 2**14
    n_test_trials: int = 10_000
    L_train: int = 8
    L_test: int = 8
    # None -> calibrate from target_evm
    eta_train: float | None = None
    eta_test: float | None = None
    target_evm: float = 40.0
    calibration_trials: int = 200
    nu_mode: str = "random"
    nu: float = 0.0
    phi_mode: str = "random"
    phi: float = 0.0
    pdp_decay_db: float = 3.0
    n_payload_symbols: int = 2
    # data symbols sent before the preamble; 0 means silence before the frame
    n_lead_symbols: int = 2
    preamble_seed: int = 1
    snr_reference: str = "transmitted"
    master_seed: int = 2024
    elm_seed: int = 7
    n_hidden: int | None = None
    n_hidden_raw: int | None = None
    ridge: float = 1e-8
    L_grid: tuple = (8, 10, 12)
    eta_grid: tuple = (0.05, 0.2, 0.35)
    workers: int = 1
    chunk_size: int = 1024

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "L_grid", tuple(int(v) for v in self.L_grid))
        object.__setattr__(self, "eta_grid", tuple(float(v) for v in self.eta_grid))
        p = self.system
        problems = []
        LabelScheme.parse(self.label_scheme)
        if self.estimator not in ESTIMATORS:
            problems.append(f"estimator must be one of {ESTIMATORS}")
        if not self.snr_grid_db:
            problems.append("snr_grid_db is empty")
        if self.n_train < 1 or self.n_test_trials < 1:
            problems.append("n_train and n_test_trials must be >= 1")
        for L in (self.L_train, self.L_test, *self.L_grid):
            if not 1 <= L < p.Ng:
                problems.append(f"channel length {L} must satisfy 1 <= L < Ng={p.Ng}")
        for eta in (self.eta_train, self.eta_test, *self.eta_grid):
            if eta is not None and not eta > 0:
                problems.append(f"eta must be positive, got {eta}")
        if self.nu_mode not in _MODES or self.phi_mode not in _MODES:
            problems.append(f"nu_mode/phi_mode must be one of {_MODES}")
        if self.snr_reference not in _SNR_REFERENCES:
            problems.append(f"snr_reference must be one of {_SNR_REFERENCES}")
        if self.n_payload_symbols < 1 or self.n_lead_symbols < 0:
            problems.append("n_payload_symbols must be >= 1 and n_lead_symbols >= 0")
        if self.workers < 1 or self.chunk_size < 1:
            problems.append("workers and chunk_size must be >= 1")
        if problems:
            raise ConfigurationError("; ".join(dict.fromkeys(problems)))

    @property
    def hidden_units(self) -> int:
        return self.n_hidden or 8 * self.system.symbol_length

    @property
    def hidden_units_raw(self) -> int:
        return self.n_hidden_raw or 16 * self.system.symbol_length

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


_NESTED = {"system": SystemParams, "saleh": SalehParams}


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data or {})
    known = {f.name for f in fields(ExperimentConfig)}
    offenders = sorted(k for k in data if k not in known)
    for key, cls in _NESTED.items():
        sub = data.get(key)
        if sub is None:
            continue
        if not isinstance(sub, dict):
            offenders.append(key)
            continue
        sub_known = {f.name for f in fields(cls)}
        offenders += sorted(f"{key}.{k}" for k in sub if k not in sub_known)
    if offenders:
        raise ConfigurationError(f"unknown configuration keys: {', '.join(offenders)}")
    for key, cls in _NESTED.items():
        if key in data:
            data[key] = cls(**data[key])
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if data is not None and not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return config_from_dict(data)

"""ELM-refined Schmidl-Cox timing synchronisation for OFDM under HPA distortion."""

from .elm import ElmModel, TrainingSet, estimate_sto, infer, init_elm, load_model, save_model, train
from .errors import (
    CalibrationError,
    ConfigurationError,
    DomainError,
    ElmSyncError,
    FormatError,
    StateError,
    TrainingError,
)
from .frame import SystemParams, assemble_frame, build_schmidl_preamble, ofdm_modulate
from .impairments import SalehParams, calibrate_backoff, saleh_distort
from .labels import LabelScheme, make_label, make_labels
from .metric import normalize_tm, timing_metric

__version__ = "0.1.0"

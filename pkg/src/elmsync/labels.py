"""Learning labels over the Nd-sample observation window.

All indices are 0-based window positions.  For true STO ``theta`` and channel
length ``L`` the ISI-free region is ``[theta + L, theta + Ng + 1]``.
"""

from enum import Enum

import numpy as np

from .errors import ConfigurationError, DomainError
from .frame import SystemParams

__all__ = [
    "LabelScheme",
    "label_onehot_end",
    "label_midpoint",
    "label_isifree",
    "make_label",
    "make_labels",
    "isi_free_region",
]


class LabelScheme(str, Enum):
    ONEHOT_END = "onehot_end"
    MIDPOINT = "midpoint"
    ISI_FREE = "isi_free"

    @property
    def display_name(self) -> str:
        return _DISPLAY[self]

    @classmethod
    def parse(cls, value) -> "LabelScheme":
        try:
            return cls(value)
        except ValueError:
            raise ConfigurationError(
                f"unknown label scheme {value!r}; expected one of {[s.value for s in cls]}"
            ) from None


_DISPLAY = {
    LabelScheme.ONEHOT_END: "Ref_onehot",
    LabelScheme.MIDPOINT: "Prop_T_mid",
    LabelScheme.ISI_FREE: "Prop_T_ISI-free",
}


def isi_free_region(theta, params: SystemParams, L: int):
    return theta + L, theta + params.Ng + 1


def _check(theta, params, L):
    if L < 1 or L > params.Ng + 1:
        raise DomainError(f"channel length L={L} must lie in [1, Ng+1={params.Ng + 1}]")
    theta = np.asarray(theta)
    if np.any(theta < 0) or np.any(theta + params.Ng + 1 > params.Nd - 1):
        raise DomainError(f"theta outside [0, {params.Nd - params.Ng - 2}]")


def _onehot_index(scheme, theta, params, L):
    if scheme is LabelScheme.ONEHOT_END:
        return theta + params.Ng + 1
    return theta + (params.Ng + L + 1) // 2


def make_labels(scheme, theta, params: SystemParams, L: int) -> np.ndarray:
    """Stack of labels, one row per entry of ``theta``."""
    scheme = LabelScheme.parse(scheme)
    theta = np.atleast_1d(np.asarray(theta, dtype=np.int64))
    _check(theta, params, L)
    T = np.zeros((len(theta), params.Nd))
    if scheme is LabelScheme.ISI_FREE:
        n = np.arange(params.Nd)
        lo, hi = isi_free_region(theta[:, None], params, L)
        T[(n >= lo) & (n <= hi)] = 1.0
    else:
        T[np.arange(len(theta)), _onehot_index(scheme, theta, params, L)] = 1.0
    return T


def make_label(scheme, theta: int, params: SystemParams, L: int) -> np.ndarray:
    return make_labels(scheme, [theta], params, L)[0]


def label_onehot_end(theta: int, params: SystemParams, L: int) -> np.ndarray:
    """Single 1 at ``theta + Ng + 1``, the end of the ISI-free region."""
    return make_label(LabelScheme.ONEHOT_END, theta, params, L)


def label_midpoint(theta: int, params: SystemParams, L: int) -> np.ndarray:
    """Single 1 at ``theta + floor((Ng + L + 1) / 2)``."""
    return make_label(LabelScheme.MIDPOINT, theta, params, L)


def label_isifree(theta: int, params: SystemParams, L: int) -> np.ndarray:
    """Ones over the whole ISI-free region, ``Ng - L + 2`` of them."""
    return make_label(LabelScheme.ISI_FREE, theta, params, L)

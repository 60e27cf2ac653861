"""Schmidl-Cox coarse timing metric and its L2 normalisation.

    P(d) = sum_{m<N/2} conj(r(d+m)) r(d+m+N/2)
    R(d) = sum_{m<N/2} |r(d+m+N/2)|^2
    M(d) = |P(d)|^2 / R(d)^2

Samples past the end of ``r`` count as zero.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .frame import SystemParams

__all__ = [
    "autocorrelation_P",
    "energy_R",
    "timing_metric",
    "normalize_tm",
    "sc_corr_estimate",
]

ENERGY_GUARD = 1e-12
NORM_GUARD = 1e-15


def _sample(r, i):
    return r[i] if i < len(r) else 0.0


def autocorrelation_P(r, d: int, N: int) -> complex:
    """Lag-N/2 correlation at one trial offset, by direct summation."""
    r = np.asarray(r, dtype=complex)
    half = N // 2
    return complex(sum(np.conj(_sample(r, d + m)) * _sample(r, d + m + half) for m in range(half)))


def energy_R(r, d: int, N: int) -> float:
    r = np.asarray(r, dtype=complex)
    half = N // 2
    return float(sum(abs(_sample(r, d + m + half)) ** 2 for m in range(half)))


def timing_metric(r, params: SystemParams) -> np.ndarray:
    """``M(d)`` for ``d = 0 .. Nd-1``; leading axes of ``r`` are batch axes.

    Where ``R(d)`` is below ``1e-12`` times the mean window energy the metric
    is set to zero.
    """
    r = np.asarray(r, dtype=complex)
    N, Nd = params.N, params.Nd
    half = N // 2
    need = Nd + N - 1
    if r.shape[-1] < need:
        pad = [(0, 0)] * (r.ndim - 1) + [(0, need - r.shape[-1])]
        r = np.pad(r, pad)
    r = r[..., :need]
    # conj(x) * y written out in real arithmetic so rotations by multiples of
    # 90 degrees leave the metric bit-identical.
    a1, b1 = r.real[..., :need - half], r.imag[..., :need - half]
    a2, b2 = r.real[..., half:], r.imag[..., half:]
    prod_re = a1 * a2 + b1 * b2
    prod_im = a1 * b2 - b1 * a2
    energy = a2 * a2 + b2 * b2

    def window_sum(x):
        return sliding_window_view(x, half, axis=-1)[..., :Nd, :].sum(axis=-1)

    P_re, P_im, R = window_sum(prod_re), window_sum(prod_im), window_sum(energy)
    eps = ENERGY_GUARD * np.mean(np.abs(r[..., :Nd]) ** 2, axis=-1, keepdims=True)
    live = R > eps
    num = P_re * P_re + P_im * P_im
    return np.divide(num, R * R, out=np.zeros_like(R), where=live)


def normalize_tm(g) -> np.ndarray:
    """``g / ||g||_2`` along the last axis; all-zero rows stay all-zero."""
    g = np.asarray(g, dtype=float)
    norm = np.linalg.norm(g, axis=-1, keepdims=True)
    return np.divide(g, norm, out=np.zeros_like(g), where=norm >= NORM_GUARD)


def sc_corr_estimate(metric) -> np.ndarray:
    """Argmax of the metric; the earliest index wins ties."""
    return np.argmax(metric, axis=-1)

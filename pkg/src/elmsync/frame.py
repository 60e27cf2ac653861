"""Baseband OFDM frame construction.

A frame is a Schmidl-type preamble (even subcarriers only, so the body repeats
after N/2 samples) followed by CP-prefixed data symbols.  The time-domain
modulator is the plain inverse-DFT sum without a 1/N factor, so one symbol
carries a mean sample power of ``N * sigma_d2``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "SystemParams",
    "Segment",
    "ComplexFrame",
    "constellation",
    "modulate_subcarriers",
    "ofdm_modulate",
    "add_cyclic_prefix",
    "build_schmidl_preamble",
    "assemble_frame",
    "dump_iq",
    "load_iq",
]


@dataclass(frozen=True)
class SystemParams:
    """OFDM geometry.

    Parameters
    ----------
    N : int
        Subcarriers per symbol; an even power of two.
    Ng : int
        Cyclic-prefix length in samples.
    Nd : int, optional
        Observation-window length.  Defaults to ``2 * (N + Ng)``.
    sigma_d2 : float
        Per-subcarrier symbol power.
    """

    N: int = 64
    Ng: int = 16
    Nd: int | None = None
    sigma_d2: float = 1.0

    def __post_init__(self):
        if self.N < 2 or self.N & (self.N - 1):
            raise ConfigurationError(f"N must be an even power of two, got {self.N}")
        if not 0 <= self.Ng < self.N:
            raise ConfigurationError(f"Ng must satisfy 0 <= Ng < N, got Ng={self.Ng}")
        if self.Nd is None:
            object.__setattr__(self, "Nd", 2 * (self.N + self.Ng))
        if self.Nd < self.Ng + 2:
            raise ConfigurationError(f"Nd={self.Nd} too short for Ng={self.Ng}")
        if not self.sigma_d2 > 0:
            raise ConfigurationError("sigma_d2 must be positive")

    @property
    def symbol_length(self) -> int:
        return self.N + self.Ng

    @property
    def max_theta(self) -> int:
        """Largest STO whose whole ISI-free region lies inside the window."""
        return self.Nd - (self.Ng + 2)

    @property
    def observation_length(self) -> int:
        """Samples needed so the metric at every trial offset sees real signal."""
        return self.Nd + self.N - 1


@dataclass(frozen=True)
class Segment:
    name: str
    offset: int
    length: int


@dataclass
class ComplexFrame:
    samples: np.ndarray
    layout: list[Segment] = field(default_factory=list)

    def __len__(self):
        return len(self.samples)

    def segment(self, name: str) -> np.ndarray:
        for seg in self.layout:
            if seg.name == name:
                return self.samples[seg.offset:seg.offset + seg.length]
        raise KeyError(name)


def constellation(scheme: str, sigma_d2: float = 1.0) -> np.ndarray:
    """Unit-modulus constellation points scaled to power ``sigma_d2``."""
    scheme = scheme.lower()
    if scheme == "qpsk":
        pts = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2)
    elif scheme == "bpsk":
        pts = np.array([1.0 + 0j, -1.0 + 0j])
    else:
        raise ConfigurationError(f"unknown modulation scheme {scheme!r}")
    return pts * np.sqrt(sigma_d2)


def modulate_subcarriers(seed, params: SystemParams, scheme: str = "qpsk", n: int | None = None) -> np.ndarray:
    """Draw i.i.d. frequency-domain symbols uniformly from the constellation.

    ``seed`` may be anything :func:`numpy.random.default_rng` accepts,
    including an existing generator (which is advanced in place).
    """
    pts = constellation(scheme, params.sigma_d2)
    rng = np.random.default_rng(seed)
    return pts[rng.integers(0, len(pts), params.N if n is None else n)]


def ofdm_modulate(d) -> np.ndarray:
    """``s(n) = sum_k d(k) exp(j 2 pi n k / N)`` along the last axis."""
    d = np.asarray(d, dtype=complex)
    return np.fft.ifft(d, axis=-1) * d.shape[-1]


def add_cyclic_prefix(symbol, Ng: int) -> np.ndarray:
    symbol = np.asarray(symbol)
    n = symbol.shape[-1]
    if Ng >= n:
        raise ConfigurationError(f"cyclic prefix Ng={Ng} must be shorter than the symbol ({n})")
    if Ng == 0:
        return symbol.copy()
    return np.concatenate([symbol[..., n - Ng:], symbol], axis=-1)


def build_schmidl_preamble(seed, params: SystemParams) -> np.ndarray:
    """CP-prefixed preamble whose body consists of two identical halves.

    Even subcarriers carry a seeded QPSK sequence boosted by sqrt(2); odd
    subcarriers are empty, which keeps the total subcarrier power equal to a
    data symbol's.
    """
    N = params.N
    if N % 2:
        raise ConfigurationError("preamble needs an even N")
    spectrum = np.zeros(N, dtype=complex)
    spectrum[::2] = np.sqrt(2.0) * modulate_subcarriers(seed, params, n=N // 2)
    return add_cyclic_prefix(ofdm_modulate(spectrum), params.Ng)


def assemble_frame(preamble, n_payload: int, seed, params: SystemParams, scheme: str = "qpsk") -> ComplexFrame:
    if n_payload < 1:
        raise DomainError("a frame needs at least one payload symbol")
    rng = np.random.default_rng(seed)
    preamble = np.asarray(preamble, dtype=complex)
    parts = [preamble]
    layout = [Segment("preamble", 0, len(preamble))]
    offset = len(preamble)
    for i in range(n_payload):
        sym = add_cyclic_prefix(ofdm_modulate(modulate_subcarriers(rng, params, scheme)), params.Ng)
        parts.append(sym)
        layout.append(Segment(f"data{i}", offset, len(sym)))
        offset += len(sym)
    return ComplexFrame(np.concatenate(parts), layout)


def dump_iq(samples, path) -> None:
    """Write samples as interleaved little-endian float64 I/Q."""
    samples = np.asarray(samples, dtype=complex)
    iq = np.empty(2 * samples.size, dtype="<f8")
    iq[0::2] = samples.real.ravel()
    iq[1::2] = samples.imag.ravel()
    iq.tofile(path)


def load_iq(path) -> np.ndarray:
    iq = np.fromfile(path, dtype="<f8")
    if iq.size % 2:
        raise DomainError(f"{path}: odd number of float64 values in I/Q dump")
    return iq[0::2] + 1j * iq[1::2]

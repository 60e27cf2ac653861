"""Transmitter nonlinearity, EVM, multipath, CFO/phase/STO and AWGN.

The received window follows

    r(n) = sum_l h(l) s~(n - theta - l) exp(j(2 pi n nu / N + phi)) + w(n)

with ``s~`` the HPA output.  Samples of ``s~`` outside the frame are silent;
the experiment harness puts data symbols ahead of the preamble when it wants
a continuous stream.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError, ConfigurationError, DomainError
from .frame import ComplexFrame, SystemParams, assemble_frame, build_schmidl_preamble

__all__ = [
    "SalehParams",
    "ChannelRealization",
    "ImpairmentConfig",
    "saleh_distort",
    "linear_reference",
    "compute_evm",
    "measure_evm",
    "calibrate_backoff",
    "power_delay_profile",
    "draw_channel",
    "snr_to_noise_variance",
    "propagate",
    "complex_noise",
    "apply_channel",
]


@dataclass(frozen=True)
class SalehParams:
    """AM/AM and AM/PM coefficients of the Saleh amplifier model."""

    alpha_a: float = 1.96
    beta_a: float = 0.99
    alpha_phi: float = 2.53
    beta_phi: float = 2.82

    def __post_init__(self):
        for name in ("alpha_a", "beta_a", "alpha_phi", "beta_phi"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"Saleh parameter {name} must be positive")

    def amplitude(self, x):
        x = np.asarray(x, dtype=float)
        return self.alpha_a * x / (1.0 + self.beta_a * x * x)

    def phase(self, x):
        x = np.asarray(x, dtype=float)
        x2 = x * x
        return self.alpha_phi * x2 / (1.0 + self.beta_phi * x2)

    @property
    def max_amplitude(self) -> float:
        """Peak of the AM/AM curve, reached at ``x = 1/sqrt(beta_a)``."""
        return self.alpha_a / (2.0 * math.sqrt(self.beta_a))


@dataclass(frozen=True)
class ChannelRealization:
    taps: np.ndarray

    @property
    def L(self) -> int:
        return len(self.taps)


@dataclass(frozen=True)
class ImpairmentConfig:
    snr_db: float = math.inf
    nu: float = 0.0
    phi: float = 0.0
    theta: int = 0
    eta: float = 1.0
    L: int = 1

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigurationError("eta must be positive")
        if self.L < 1:
            raise ConfigurationError("channel length L must be at least 1")


def saleh_distort(s, p: SalehParams, eta: float) -> np.ndarray:
    """Memoryless HPA: ``A(eta r) exp(j(psi + Phi(eta r)))`` per sample."""
    if not eta > 0:
        raise DomainError("eta must be positive")
    s = np.asarray(s, dtype=complex)
    r = np.abs(s)
    x = eta * r
    # Complex gain (A(x)/r) e^{j Phi(x)} depends on |s| only.  Applying it in
    # real arithmetic (numpy's complex multiply may fuse) keeps the map exactly
    # covariant under quarter-turn rotations of s.
    gain = np.divide(p.amplitude(x), r, out=np.zeros_like(r), where=r > 0)
    phase = p.phase(x)
    c, d = gain * np.cos(phase), gain * np.sin(phase)
    a, b = s.real, s.imag
    out = np.empty_like(s)
    out.real = a * c - b * d
    out.imag = a * d + b * c
    return out


def linear_reference(s, p: SalehParams, eta: float) -> np.ndarray:
    """The undistorted signal amplified by the small-signal gain ``alpha_a * eta``."""
    return p.alpha_a * eta * np.asarray(s, dtype=complex)


def compute_evm(distorted, reference, axis=None):
    """EVM in percent of ``distorted`` against ``reference``."""
    distorted = np.asarray(distorted, dtype=complex)
    reference = np.asarray(reference, dtype=complex)
    if distorted.shape != reference.shape:
        raise DomainError(f"shape mismatch {distorted.shape} vs {reference.shape}")
    ref_energy = np.sum(np.abs(reference) ** 2, axis=axis)
    if np.any(ref_energy == 0):
        raise DomainError("EVM reference is all zeros")
    err_energy = np.sum(np.abs(distorted - reference) ** 2, axis=axis)
    return 100.0 * np.sqrt(err_energy / ref_energy)


def measure_evm(s, p: SalehParams, eta: float, axis=None):
    return compute_evm(saleh_distort(s, p, eta), linear_reference(s, p, eta), axis=axis)


def _calibration_frames(params, seed, trials, n_payload):
    rng = np.random.default_rng(seed)
    frames = [
        assemble_frame(build_schmidl_preamble(rng, params), n_payload, rng, params).samples
        for _ in range(trials)
    ]
    return np.stack(frames)


def calibrate_backoff(
    target_evm: float,
    p: SalehParams,
    params: SystemParams,
    seed=0,
    trials: int = 200,
    *,
    n_payload: int = 1,
    bracket: tuple[float, float] = (1e-4, 10.0),
    tol: float = 0.5,
    max_iter: int = 100,
) -> float:
    """Find the back-off ``eta`` whose mean EVM over random frames hits ``target_evm``.

    Bisection runs in log(eta) on a fixed set of frames, so EVM(eta) is a
    deterministic function during the search.  Every evaluated point is checked
    against the others for monotonicity.
    """
    if not target_evm > 0:
        raise CalibrationError(f"target EVM must be positive, got {target_evm}%")
    frames = _calibration_frames(params, seed, trials, n_payload)

    def evm(eta):
        return float(np.mean(measure_evm(frames, p, eta, axis=-1)))

    lo, hi = bracket
    seen = {lo: evm(lo), hi: evm(hi)}
    if not seen[lo] <= target_evm <= seen[hi]:
        raise CalibrationError(
            f"target EVM {target_evm}% unreachable: bracket [{lo:g}, {hi:g}] spans "
            f"{seen[lo]:.4f}% .. {seen[hi]:.4f}%"
        )
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        value = evm(mid)
        seen[mid] = value
        etas = sorted(seen)
        if any(seen[a] > seen[b] for a, b in zip(etas, etas[1:])):
            raise CalibrationError(f"EVM(eta) is not monotone near eta={mid:g}")
        if abs(value - target_evm) < tol:
            return mid
        if value < target_evm:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(f"bisection did not converge within {max_iter} steps")


def power_delay_profile(L: int, decay_db_per_tap: float = 3.0) -> np.ndarray:
    if L < 1:
        raise DomainError("channel length L must be at least 1")
    pdp = 10.0 ** (-np.arange(L) * decay_db_per_tap / 10.0)
    return pdp / pdp.sum()


def draw_channel(L: int, decay_db_per_tap: float = 3.0, seed=None) -> ChannelRealization:
    """Rayleigh taps with an exponential power-delay profile of unit total power."""
    pdp = power_delay_profile(L, decay_db_per_tap)
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(L) + 1j * rng.standard_normal(L)
    return ChannelRealization(g * np.sqrt(pdp / 2.0))


def snr_to_noise_variance(snr_db: float, sigma_P2: float = 1.0) -> float:
    return sigma_P2 * 10.0 ** (-snr_db / 10.0)


def complex_noise(rng, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples of unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(0.5)


def propagate(s_tilde, taps, theta, nu, phi, N: int, n_out: int) -> np.ndarray:
    """Noise-free part of the received signal, batched over the leading axis.

    ``s_tilde`` is (B, F), ``taps`` (B, L), ``theta``/``nu``/``phi`` (B,).
    Samples before the frame start and after its end are silent.
    """
    s_tilde = np.atleast_2d(np.asarray(s_tilde, dtype=complex))
    taps = np.atleast_2d(np.asarray(taps, dtype=complex))
    theta = np.atleast_1d(np.asarray(theta, dtype=np.int64))
    B, F = s_tilde.shape
    n = np.arange(n_out)
    rows = np.arange(B)[:, None]
    out = np.zeros((B, n_out), dtype=complex)
    for l in range(taps.shape[1]):
        idx = n[None, :] - theta[:, None] - l
        valid = (idx >= 0) & (idx < F)
        shifted = np.where(valid, s_tilde[rows, np.clip(idx, 0, F - 1)], 0)
        out += taps[:, l:l + 1] * shifted
    nu = np.atleast_1d(np.asarray(nu, dtype=float))[:, None]
    phi = np.atleast_1d(np.asarray(phi, dtype=float))[:, None]
    if np.any(nu) or np.any(phi):
        out = out * np.exp(1j * (2.0 * np.pi * n[None, :] * nu / N + phi))
    return out


def apply_channel(
    frame,
    ch: ChannelRealization,
    cfg: ImpairmentConfig,
    params: SystemParams,
    seed=None,
    *,
    sigma_P2: float | None = None,
    n_out: int | None = None,
) -> np.ndarray:
    """Received samples ``r(0 .. n_out-1)`` for an already-distorted frame.

    ``n_out`` defaults to the window length ``Nd``.  The noise variance is
    referenced to ``sigma_P2`` (defaults to ``params.sigma_d2``).
    """
    if not 0 <= cfg.theta <= params.max_theta:
        raise DomainError(f"theta={cfg.theta} outside [0, {params.max_theta}]")
    samples = frame.samples if isinstance(frame, ComplexFrame) else np.asarray(frame, dtype=complex)
    n_out = params.Nd if n_out is None else n_out
    r = propagate(samples[None, :], ch.taps[None, :], [cfg.theta], [cfg.nu], [cfg.phi], params.N, n_out)[0]
    sigma2 = snr_to_noise_variance(cfg.snr_db, params.sigma_d2 if sigma_P2 is None else sigma_P2)
    if sigma2 > 0:
        r = r + math.sqrt(sigma2) * complex_noise(np.random.default_rng(seed), n_out)
    return r

"""Grids, transform matrices, and the frequency-space gain engine.

Conventions used throughout the package:

* Frequency grid: baseband [-B/2, B/2), M bins, bin m at f = m * df with
  df = B/M and m in [-M/2, M/2).
* Angle grid: uniform in sin(theta) over [-1, 1), D bins.
* Time grid: K taps spaced Ts = 1/B.
* Time->frequency transform U(f, k) = exp(+j 2 pi f k Ts); with the grids
  above this is the DFT kernel exp(+j 2 pi m k / M).  `dft_matrix` returns
  it scaled by 1/sqrt(M) so that U^H U = I for K <= M.  The gain engine uses
  the unscaled kernel so that a coherent full-array beam peaks at |G| = N.
* Antenna->space transform V(n, d) = exp(-j n pi sin(theta_d)), unit
  magnitude entries; V V^H = D * I on the uniform sin(theta) grid (D >= N).
* A delay/phase pair contributes exp(j (Phi_n + 2 pi f tau_n)) at frequency
  f, so beams satisfy Phi_n + 2 pi f tau_n = n pi sin(theta).  Under this
  sign pairing a true-time-delay ramp tau_n = n/B points at
  sin(theta) = 2 f / B, which is the empirical anchor for the convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


def round_half_away(x):
    """Round to nearest integer with .5 ties away from zero.

    Used for every integer choice in the closed-form weights so that the
    behavior is symmetric for +/- steering angles.
    """
    x = np.asarray(x, dtype=float)
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def wrap_phase(phi):
    """Wrap phases into [0, 2*pi)."""
    return np.mod(phi, TWO_PI)


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform-linear-array and evaluation-grid parameters.

    Attributes:
        num_antennas: N, array elements at half-wavelength spacing.
        bandwidth_hz: B, total system bandwidth.
        num_freq_bins: M, frequency grid size over [-B/2, B/2).
        num_angle_bins: D, sin(theta) grid size over [-1, 1); D >= N so the
            angle grid at least critically samples the array.
        num_time_taps: K, discrete delay taps spaced Ts = 1/B.
    """

    num_antennas: int = 16
    bandwidth_hz: float = 400e6
    num_freq_bins: int = 512
    num_angle_bins: int = 256
    num_time_taps: int = 32

    def __post_init__(self):
        if self.num_antennas < 2:
            raise ValueError("num_antennas must be >= 2")
        if self.num_freq_bins < 2:
            raise ValueError("num_freq_bins must be >= 2")
        if self.num_angle_bins < self.num_antennas:
            raise ValueError("num_angle_bins must be >= num_antennas")
        if self.num_time_taps < 1:
            raise ValueError("num_time_taps must be >= 1")
        if self.num_time_taps > self.num_freq_bins:
            raise ValueError("num_time_taps must be <= num_freq_bins")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")

    @property
    def sample_period_s(self) -> float:
        return 1.0 / self.bandwidth_hz

    @property
    def delta_f_hz(self) -> float:
        return self.bandwidth_hz / self.num_freq_bins

    @property
    def max_delay_s(self) -> float:
        """Largest delay representable on the time grid, K * Ts."""
        return self.num_time_taps * self.sample_period_s

    @property
    def freq_axis_hz(self) -> np.ndarray:
        m = np.arange(self.num_freq_bins) - self.num_freq_bins // 2
        return m * self.delta_f_hz

    @property
    def sin_theta_axis(self) -> np.ndarray:
        d = np.arange(self.num_angle_bins)
        return -1.0 + 2.0 * d / self.num_angle_bins


@dataclass
class DelayPhaseWeights:
    """Per-antenna delay (seconds) and phase (radians) weights.

    Phases are wrapped to [0, 2*pi) on construction.  Delays must be
    non-negative; synthesis routines shift out any common negative offset
    before constructing this type.
    """

    delays_s: np.ndarray
    phases_rad: np.ndarray
    quantized: bool = False

    def __post_init__(self):
        self.delays_s = np.asarray(self.delays_s, dtype=float)
        self.phases_rad = wrap_phase(np.asarray(self.phases_rad, dtype=float))
        if self.delays_s.shape != self.phases_rad.shape:
            raise ValueError("delays and phases must have equal length")
        if self.delays_s.ndim != 1:
            raise ValueError("delays and phases must be 1-D")
        if np.any(self.delays_s < 0):
            raise ValueError("delays must be non-negative")

    @property
    def num_antennas(self) -> int:
        return self.delays_s.shape[0]


@dataclass
class TimeAntennaWeights:
    """Complex K x N weight profile over discrete time taps per antenna."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 2:
            raise ValueError("values must be a K x N matrix")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    @property
    def num_taps(self) -> int:
        return self.values.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.values.shape[1]


@dataclass
class FrequencySpaceImage:
    """Gain matrix over (frequency bin x angle bin) with its axes."""

    values: np.ndarray
    freq_axis_hz: np.ndarray
    sin_theta_axis: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        self.freq_axis_hz = np.asarray(self.freq_axis_hz, dtype=float)
        self.sin_theta_axis = np.asarray(self.sin_theta_axis, dtype=float)
        if self.values.shape != (self.freq_axis_hz.size, self.sin_theta_axis.size):
            raise ValueError("image shape inconsistent with axes")
        for axis in (self.freq_axis_hz, self.sin_theta_axis):
            if axis.size > 1 and not np.all(np.diff(axis) > 0):
                raise ValueError("axes must be strictly increasing")

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def magnitude_db(self, num_antennas: int) -> np.ndarray:
        """|G| in dB relative to the full-array coherent peak N."""
        mag = np.maximum(self.magnitude, 1e-300)
        return 20.0 * np.log10(mag / num_antennas)


def steering_matrix(config: ArrayConfig) -> np.ndarray:
    """Antenna->space transform V, N x D, entries exp(-j n pi sin(theta_d))."""
    n = np.arange(config.num_antennas)
    return np.exp(-1j * np.pi * np.outer(n, config.sin_theta_axis))


def dft_matrix(config: ArrayConfig) -> np.ndarray:
    """Time->frequency transform U, M x K, scaled so U^H U = I.

    Entry (m, k) is exp(j 2 pi f_m k Ts) / sqrt(M); columns are orthonormal
    for K <= M, which ArrayConfig guarantees.
    """
    k = np.arange(config.num_time_taps)
    phase = TWO_PI * np.outer(config.freq_axis_hz, k) * config.sample_period_s
    return np.exp(1j * phase) / np.sqrt(config.num_freq_bins)


def gain_pattern(weights: TimeAntennaWeights, config: ArrayConfig) -> FrequencySpaceImage:
    """Evaluate G = U W V on the configured grids (unscaled transforms).

    A single unit-magnitude tap per antenna with coherent phasing peaks at
    |G| = N.
    """
    if weights.values.shape != (config.num_time_taps, config.num_antennas):
        raise ValueError(
            "weights shape %s does not match config (K=%d, N=%d)"
            % (weights.values.shape, config.num_time_taps, config.num_antennas)
        )
    u_raw = dft_matrix(config) * np.sqrt(config.num_freq_bins)
    v = steering_matrix(config)
    values = u_raw @ weights.values @ v
    return FrequencySpaceImage(values, config.freq_axis_hz, config.sin_theta_axis)


def gain_at(weights: DelayPhaseWeights, freq_hz, sin_theta, config: ArrayConfig):
    """Continuous-delay gain sum_n exp(j(Phi_n + 2 pi f tau_n)) exp(-j n pi sin).

    Accepts scalar or broadcastable array arguments for `freq_hz` and
    `sin_theta`.  Consistent with `gain_pattern` of the delta-encoded
    weights up to delay-to-tap rounding error.
    """
    freq_hz = np.asarray(freq_hz, dtype=float)
    sin_theta = np.asarray(sin_theta, dtype=float)
    if np.any(np.abs(sin_theta) > 1.0):
        raise ValueError("|sin_theta| must be <= 1")
    if np.any(np.abs(freq_hz) > config.bandwidth_hz / 2 + 1e-9):
        raise ValueError("|freq_hz| must be <= B/2")
    n = np.arange(weights.num_antennas)
    antenna_term = np.exp(
        1j * (weights.phases_rad + TWO_PI * freq_hz[..., None] * weights.delays_s)
    )
    space_term = np.exp(-1j * np.pi * sin_theta[..., None] * n)
    return np.sum(antenna_term * space_term, axis=-1)


def gain_image(weights: DelayPhaseWeights, config: ArrayConfig) -> FrequencySpaceImage:
    """Full M x D gain image of continuous delay/phase weights.

    Same quantity as `gain_at` evaluated on the configured grids, without
    snapping delays to time taps.
    """
    n = np.arange(weights.num_antennas)
    antenna = np.exp(
        1j
        * (
            weights.phases_rad[None, :]
            + TWO_PI * config.freq_axis_hz[:, None] * weights.delays_s[None, :]
        )
    )
    space = np.exp(-1j * np.pi * np.outer(n, config.sin_theta_axis))
    return FrequencySpaceImage(antenna @ space, config.freq_axis_hz, config.sin_theta_axis)


def encode_delta_weights(w: DelayPhaseWeights, config: ArrayConfig) -> TimeAntennaWeights:
    """Encode delay/phase weights as a delta at the tap nearest each delay.

    Nearest-tap rounding with ties toward the smaller index.  Raises if a
    delay rounds past the last tap.
    """
    ratio = w.delays_s / config.sample_period_s
    taps = np.ceil(ratio - 0.5).astype(int)
    if np.any(taps >= config.num_time_taps):
        raise ValueError("delay exceeds the K*Ts time window")
    values = np.zeros((config.num_time_taps, w.num_antennas), dtype=complex)
    values[taps, np.arange(w.num_antennas)] = np.exp(1j * w.phases_rad)
    return TimeAntennaWeights(values)


def snr_image(gain: FrequencySpaceImage, link_budget_db: float, num_antennas: int) -> np.ndarray:
    """Map a gain image to SNR in dB, calibrated so |G| = N -> link budget."""
    return gain.magnitude_db(num_antennas) + link_budget_db

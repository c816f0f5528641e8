"""Frequency-space to delay-antenna synthesis.

Pipeline: draw the desired binary frequency-space image, invert it to the
time-antenna domain with the conjugate transposes of the two unitary
transforms, pick the dominant tap per antenna as its delay/phase, and
quantize for the hardware.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from dpalab.core import (
    ArrayConfig,
    DelayPhaseWeights,
    FrequencySpaceImage,
    TimeAntennaWeights,
    TWO_PI,
    dft_matrix,
    round_half_away,
    steering_matrix,
    wrap_phase,
)

# One beam occupies the angle bins within +/- half of this width around its
# direction; 12 degrees matches the half-power sector width of the user
# grouping.
DEFAULT_BEAM_WIDTH_SIN = float(np.sin(np.deg2rad(12.0)))


@dataclass(frozen=True)
class BeamSpec:
    """One directional beam over a contiguous frequency band."""

    sin_theta: float
    f_low_hz: float
    f_high_hz: float
    width_sin: float = DEFAULT_BEAM_WIDTH_SIN

    def __post_init__(self):
        if not -1.0 <= self.sin_theta <= 1.0:
            raise ValueError("sin_theta must be in [-1, 1]")
        if self.f_low_hz >= self.f_high_hz:
            raise ValueError("f_low_hz must be < f_high_hz")
        if self.width_sin <= 0:
            raise ValueError("width_sin must be positive")

    @property
    def bandwidth_hz(self) -> float:
        return self.f_high_hz - self.f_low_hz


@dataclass
class BeamPlan:
    """An ordered set of disjoint-band beams within [-B/2, B/2]."""

    beams: list[BeamSpec]
    bandwidth_hz: float = 400e6

    def __post_init__(self):
        for beam in self.beams:
            half = self.bandwidth_hz / 2.0
            if beam.f_low_hz < -half - 1e-6 or beam.f_high_hz > half + 1e-6:
                raise ValueError("beam band outside [-B/2, B/2]")
        ordered = sorted(self.beams, key=lambda b: b.f_low_hz)
        for lo, hi in zip(ordered, ordered[1:]):
            if hi.f_low_hz < lo.f_high_hz - 1e-6:
                raise ValueError("beam bands must be disjoint")

    @property
    def fractions(self) -> np.ndarray:
        """Bandwidth fraction per beam, in the stored beam order."""
        return np.array([b.bandwidth_hz / self.bandwidth_hz for b in self.beams])

    @property
    def total_fraction(self) -> float:
        return float(np.sum(self.fractions))

    @classmethod
    def equal_split(cls, sin_thetas, bandwidth_hz: float = 400e6,
                    width_sin: float = DEFAULT_BEAM_WIDTH_SIN) -> "BeamPlan":
        """Exhaustive plan: contiguous equal bands, lowest band first."""
        count = len(sin_thetas)
        edges = np.linspace(-bandwidth_hz / 2.0, bandwidth_hz / 2.0, count + 1)
        beams = [
            BeamSpec(s, edges[i], edges[i + 1], width_sin)
            for i, s in enumerate(sin_thetas)
        ]
        return cls(beams, bandwidth_hz)

    @classmethod
    def proportional(cls, sin_thetas, fractions, bandwidth_hz: float = 400e6,
                     width_sin: float = DEFAULT_BEAM_WIDTH_SIN) -> "BeamPlan":
        """Exhaustive plan with per-beam bandwidth fractions, lowest first."""
        fractions = np.asarray(fractions, dtype=float)
        edges = -bandwidth_hz / 2.0 + bandwidth_hz * np.concatenate(
            [[0.0], np.cumsum(fractions)]
        )
        beams = [
            BeamSpec(s, edges[i], edges[i + 1], width_sin)
            for i, s in enumerate(sin_thetas)
        ]
        return cls(beams, bandwidth_hz)

    def to_json(self) -> str:
        return json.dumps(
            {
                "bandwidth_hz": self.bandwidth_hz,
                "beams": [
                    {
                        "sin_theta": b.sin_theta,
                        "f_low_hz": b.f_low_hz,
                        "f_high_hz": b.f_high_hz,
                        "width_sin": b.width_sin,
                    }
                    for b in self.beams
                ],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "BeamPlan":
        data = json.loads(text)
        beams = [
            BeamSpec(
                sin_theta=b["sin_theta"],
                f_low_hz=b["f_low_hz"],
                f_high_hz=b["f_high_hz"],
                width_sin=b.get("width_sin", DEFAULT_BEAM_WIDTH_SIN),
            )
            for b in data["beams"]
        ]
        return cls(beams, bandwidth_hz=data.get("bandwidth_hz", 400e6))


@dataclass(frozen=True)
class QuantizerSpec:
    """Hardware quantizer: 6-bit phase, 0.1 ns delay step over [0, 6.4 ns)."""

    phase_bits: int = 6
    delay_step_s: float = 0.1e-9
    delay_range_s: float = 6.4e-9

    def __post_init__(self):
        if self.phase_bits < 1:
            raise ValueError("phase_bits must be >= 1")
        if self.delay_step_s <= 0:
            raise ValueError("delay_step_s must be positive")
        if self.delay_range_s <= 0:
            raise ValueError("delay_range_s must be positive")

    @classmethod
    def from_bits(cls, phase_bits: int, delay_bits: int,
                  delay_step_s: float = 0.1e-9) -> "QuantizerSpec":
        return cls(phase_bits, delay_step_s, delay_step_s * 2**delay_bits)


def build_desired_image(plan: BeamPlan, config: ArrayConfig) -> FrequencySpaceImage:
    """Binary image: 1 inside each beam's band x angular stripe, else 0."""
    freq = config.freq_axis_hz
    sin = config.sin_theta_axis
    values = np.zeros((freq.size, sin.size))
    for beam in plan.beams:
        in_band = (freq >= beam.f_low_hz) & (freq < beam.f_high_hz)
        in_stripe = np.abs(sin - beam.sin_theta) <= beam.width_sin / 2.0
        if not np.any(in_stripe):
            raise ValueError("beam direction outside the angle grid")
        values[np.ix_(in_band, in_stripe)] = 1.0
    return FrequencySpaceImage(values, freq, sin)


def fsda_transform(desired: FrequencySpaceImage, config: ArrayConfig) -> TimeAntennaWeights:
    """Least-squares time-antenna weights, W = pinv(U) G pinv(V).

    Both pseudo-inverses reduce to scaled conjugate transposes because U has
    orthonormal columns and V has orthogonal rows on the configured grids.
    """
    expected = (config.num_freq_bins, config.num_angle_bins)
    if desired.values.shape != expected:
        raise ValueError(
            "image shape %s does not match config grid %s" % (desired.values.shape, expected)
        )
    u_unit = dft_matrix(config)
    v = steering_matrix(config)
    scale = np.sqrt(config.num_freq_bins) * config.num_angle_bins
    values = (u_unit.conj().T @ desired.values @ v.conj().T) / scale
    return TimeAntennaWeights(values)


def extract_delay_phase(w: TimeAntennaWeights, config: ArrayConfig) -> DelayPhaseWeights:
    """Dominant tap per antenna column: its index gives the delay, its
    argument the phase.  Exact magnitude ties resolve to the smaller tap.

    The time axis is circular (the transform is a DFT), so taps in the
    upper half of the window represent negative relative delays; they are
    unwrapped to k - K and the whole set is shifted so the minimum delay
    is zero.
    """
    magnitudes = np.abs(w.values)
    if np.any(np.all(magnitudes == 0.0, axis=0)):
        raise ValueError("all-zero antenna column; desired image is empty or infeasible")
    taps = np.argmax(magnitudes, axis=0)
    cols = np.arange(w.num_antennas)
    phases = wrap_phase(np.angle(w.values[taps, cols]))
    taps = taps.astype(float)
    taps[taps > w.num_taps / 2] -= w.num_taps
    taps -= taps.min()
    return DelayPhaseWeights(taps * config.sample_period_s, phases)


def quantize_weights(w: DelayPhaseWeights, q: QuantizerSpec) -> DelayPhaseWeights:
    """Snap phases and min-shifted delays to the quantizer grids."""
    delays = w.delays_s - np.min(w.delays_s)
    if np.any(delays >= q.delay_range_s):
        raise ValueError("delay span exceeds the quantizer range")
    delays = round_half_away(delays / q.delay_step_s) * q.delay_step_s
    phase_step = TWO_PI / 2**q.phase_bits
    phases = wrap_phase(round_half_away(w.phases_rad / phase_step) * phase_step)
    return DelayPhaseWeights(delays, phases, quantized=True)


def synthesize(
    plan: BeamPlan,
    config: ArrayConfig,
    q: QuantizerSpec | None = QuantizerSpec(),
) -> DelayPhaseWeights:
    """Full pipeline: desired image -> 2D inverse -> peak extraction -> quantize.

    Pass ``q=None`` to keep the continuous (unquantized) weights.
    """
    desired = build_desired_image(plan, config)
    w = fsda_transform(desired, config)
    weights = extract_delay_phase(w, config)
    if q is not None:
        weights = quantize_weights(weights, q)
    return weights

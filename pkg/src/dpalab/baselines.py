"""Weight synthesis for the comparison front-ends.

Phased array (single frequency-flat beam / TDMA), split-antenna array,
true-time-delay rainbow, and the idealized per-subcarrier oracle.  All of
them emit weights (or images) consumable by the core gain engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from dpalab.core import ArrayConfig, DelayPhaseWeights, FrequencySpaceImage, wrap_phase
from dpalab.fsda import BeamPlan


class ArchKind(str, Enum):
    PHASED_TDMA = "tdma"
    SPLIT_ANTENNA = "split"
    TTD_RAINBOW = "ttd"
    DPA = "dpa"
    ORACLE = "oracle"


@dataclass
class Architecture:
    """Front-end choice plus its architecture-specific parameters."""

    kind: ArchKind
    splits: int | None = None
    plan: BeamPlan | None = None


def phased_array_weights(sin_theta0: float, num_antennas: int) -> DelayPhaseWeights:
    """Frequency-flat beam at sin_theta0: Phi_n = n pi sin(theta0), no delay."""
    if abs(sin_theta0) > 1.0:
        raise ValueError("|sin_theta0| must be <= 1")
    n = np.arange(num_antennas)
    phases = wrap_phase(n * np.pi * sin_theta0)
    return DelayPhaseWeights(np.zeros(num_antennas), phases)


def split_array_weights(directions, num_antennas: int) -> DelayPhaseWeights:
    """Contiguous sub-arrays, one per direction, each locally steered.

    With S directions the array splits into S contiguous blocks of size
    floor(N/S); the remainder antennas go to the earlier blocks.  Each block
    runs its own phase progression from its first element.
    """
    directions = list(directions)
    splits = len(directions)
    if splits < 1 or splits > num_antennas:
        raise ValueError("need 1 <= len(directions) <= num_antennas")
    base, rem = divmod(num_antennas, splits)
    phases = np.zeros(num_antennas)
    start = 0
    for s, sin_theta in enumerate(directions):
        size = base + (1 if s < rem else 0)
        local = np.arange(size)
        phases[start:start + size] = local * np.pi * sin_theta
        start += size
    return DelayPhaseWeights(np.zeros(num_antennas), wrap_phase(phases))


def ttd_rainbow_weights(num_antennas: int, bandwidth_hz: float) -> DelayPhaseWeights:
    """Fixed delay ramp tau_n = n/B: each frequency points at sin = 2f/B."""
    n = np.arange(num_antennas)
    return DelayPhaseWeights(n / bandwidth_hz, np.zeros(num_antennas))


def oracle_gain(plan: BeamPlan, config: ArrayConfig) -> FrequencySpaceImage:
    """Ideal per-subcarrier beamformer: |G| = N inside every beam cell.

    Each frequency bin belongs to at most one beam (disjoint bands); within
    its band a beam shows the full coherent gain over its angular stripe and
    contributes nothing elsewhere.
    """
    freq = config.freq_axis_hz
    sin = config.sin_theta_axis
    values = np.zeros((freq.size, sin.size))
    claimed = np.zeros(freq.size, dtype=bool)
    for beam in plan.beams:
        in_band = (freq >= beam.f_low_hz) & (freq < beam.f_high_hz)
        if np.any(claimed & in_band):
            raise ValueError("frequency bin assigned to two beams")
        claimed |= in_band
        in_stripe = np.abs(sin - beam.sin_theta) <= beam.width_sin / 2.0
        values[np.ix_(in_band, in_stripe)] = float(config.num_antennas)
    return FrequencySpaceImage(values, freq, sin)

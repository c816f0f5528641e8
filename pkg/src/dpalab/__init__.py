"""Desk-scale delay-phased-array beamforming laboratory.

Synthesizes per-antenna delay/phase weights for frequency-direction
multi-beams (2D-transform algorithm and closed-form expressions),
provides phased-array / split-antenna / true-time-delay / oracle
baselines, and evaluates all of them in a TTI-level multi-user
network emulation.
"""

from dpalab.core import (
    ArrayConfig,
    DelayPhaseWeights,
    FrequencySpaceImage,
    TimeAntennaWeights,
    dft_matrix,
    encode_delta_weights,
    gain_at,
    gain_image,
    gain_pattern,
    snr_image,
    steering_matrix,
)
from dpalab.fsda import (
    BeamPlan,
    BeamSpec,
    QuantizerSpec,
    build_desired_image,
    extract_delay_phase,
    fsda_transform,
    quantize_weights,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayConfig",
    "BeamPlan",
    "BeamSpec",
    "DelayPhaseWeights",
    "FrequencySpaceImage",
    "QuantizerSpec",
    "TimeAntennaWeights",
    "build_desired_image",
    "dft_matrix",
    "encode_delta_weights",
    "extract_delay_phase",
    "fsda_transform",
    "gain_at",
    "gain_image",
    "gain_pattern",
    "quantize_weights",
    "snr_image",
    "steering_matrix",
    "synthesize",
]

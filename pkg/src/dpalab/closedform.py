"""Closed-form delay/phase synthesis and the least-squares line-fit oracle.

The two-beam and generalized multi-beam weights come from fitting a line
h(n, f) = Phi_n + 2 pi f tau_n to the per-antenna step-function phase
constraint, with strategically chosen 2*pi offsets per beam to keep the
step sizes small.  `line_fit_oracle` solves the finite-M least-squares
system explicitly and doubles as an independent check of the closed-form
algebra.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from dpalab.core import DelayPhaseWeights, TWO_PI, round_half_away, wrap_phase
from dpalab.fsda import BeamPlan


def two_beam_weights(sin_theta0: float, bandwidth_hz: float, num_antennas: int) -> DelayPhaseWeights:
    """Closed-form weights for two equal-bandwidth beams at -/+ theta0.

    The lower half band [-B/2, 0) points at -theta0 and the upper half at
    +theta0.  Delays lie in [0, 3/(2B)); phases are integer multiples of pi.
    """
    if not 0.0 <= sin_theta0 <= 1.0:
        raise ValueError("sin_theta0 must be in [0, 1]")
    n = np.arange(num_antennas)
    span = 1.5 / bandwidth_hz
    delays = np.mod(span * n * sin_theta0 + span / 2.0, span)
    phases = wrap_phase(round_half_away(n * sin_theta0) * np.pi)
    return DelayPhaseWeights(delays, phases)


def _plan_angles_fractions(plan: BeamPlan):
    """Beam directions and bandwidth fractions sorted by ascending band."""
    beams = sorted(plan.beams, key=lambda b: b.f_low_hz)
    sin_thetas = np.array([b.sin_theta for b in beams])
    alphas = np.array([b.f_high_hz - b.f_low_hz for b in beams])
    alphas = alphas / plan.bandwidth_hz
    return sin_thetas, alphas


def generalized_weights_raw(sin_thetas, alphas, bandwidth_hz, num_antennas):
    """Unshifted multi-beam delays and unwrapped phases.

    `sin_thetas` must be ordered lowest frequency band first, and `alphas`
    are the matching bandwidth fractions summing to 1.  Returns
    (delays, phases) where delays may be negative and phases unwrapped.
    """
    sin_thetas = np.asarray(sin_thetas, dtype=float)
    alphas = np.asarray(alphas, dtype=float)
    if not np.isclose(np.sum(alphas), 1.0, atol=1e-9):
        raise ValueError("bandwidth fractions must sum to 1")
    n = np.arange(num_antennas)[:, None]
    phi = np.pi * n * sin_thetas[None, :]  # (N, D)

    # k_1 = 0; k_d = k_{d-1} + round((n sin(theta_{d-1}) - n sin(theta_d)) / 2)
    k = np.zeros_like(phi)
    steps = round_half_away(n * (sin_thetas[None, :-1] - sin_thetas[None, 1:]) / 2.0)
    k[:, 1:] = np.cumsum(steps, axis=1)

    adjusted = phi + TWO_PI * k
    phases = np.sum(alphas[None, :] * adjusted, axis=1)
    coeff = alphas * (2.0 * np.cumsum(alphas) - alphas - 1.0)
    delays = (3.0 / (np.pi * bandwidth_hz)) * np.sum(adjusted * coeff[None, :], axis=1)
    return delays, phases


def generalized_weights(plan: BeamPlan, bandwidth_hz: float, num_antennas: int) -> DelayPhaseWeights:
    """Closed-form weights for an arbitrary exhaustive multi-beam plan.

    Beams are ordered by ascending frequency band; the plan's fractions
    must sum to 1.  Delays are shifted by a global constant so the minimum
    delay is zero; phases are wrapped to [0, 2*pi).
    """
    sin_thetas, alphas = _plan_angles_fractions(plan)
    delays, phases = generalized_weights_raw(sin_thetas, alphas, bandwidth_hz, num_antennas)
    delays = delays - np.min(delays)
    return DelayPhaseWeights(delays, wrap_phase(phases))


def asymmetric_two_beam_weights(
    sin_theta1: float,
    sin_theta2: float,
    alpha: float,
    bandwidth_hz: float,
    num_antennas: int,
) -> DelayPhaseWeights:
    """Two arbitrary beams: fractions alpha (lower band) and 1 - alpha.

    Beam 1 at `sin_theta1` occupies the lower alpha*B of the band, beam 2
    the rest.  Equals `generalized_weights` with two beams.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    n = np.arange(num_antennas)
    phi1 = np.pi * n * sin_theta1
    phi2 = np.pi * n * sin_theta2
    k2 = round_half_away(n * (sin_theta1 - sin_theta2) / 2.0)
    phases = alpha * phi1 + (1.0 - alpha) * (phi2 + TWO_PI * k2)
    delays = (3.0 / (np.pi * bandwidth_hz)) * (
        (-phi1 + phi2 + TWO_PI * k2) * alpha * (1.0 - alpha)
    )
    delays = delays - np.min(delays)
    return DelayPhaseWeights(delays, wrap_phase(phases))


@dataclass
class LineFitProblem:
    """Finite-M line fit of a per-antenna step-function phase constraint.

    `samples_rad` holds the (already 2*pi-adjusted) step-function values at
    frequencies m * delta_f for m = -M/2 .. M/2, so there are M + 1 samples
    and the bandwidth is B = (M + 1) * delta_f.
    """

    samples_rad: np.ndarray
    delta_f_hz: float

    def __post_init__(self):
        self.samples_rad = np.asarray(self.samples_rad, dtype=float)
        if self.samples_rad.size < 3 or self.samples_rad.size % 2 == 0:
            raise ValueError("need an odd number (>= 3) of samples, m = -M/2..M/2")
        if self.delta_f_hz <= 0:
            raise ValueError("delta_f_hz must be positive")

    @property
    def num_bins(self) -> int:
        """M, the number of frequency steps (samples - 1)."""
        return self.samples_rad.size - 1


def line_fit_oracle(problem: LineFitProblem):
    """Least-squares slope/intercept of the step function, via (A^T A)^-1 A^T b.

    A has rows [1, m] for m = -M/2 .. M/2, so A^T A is diagonal and the
    solution is written out explicitly.  Returns (phase_rad, delay_s) where
    the slope maps to delay through x[1] / (2 pi delta_f).
    """
    b = problem.samples_rad
    m_half = problem.num_bins // 2
    m = np.arange(-m_half, m_half + 1, dtype=float)
    # (A^T A) = diag(M + 1, sum m^2); both strictly positive for M >= 2
    phase = np.sum(b) / m.size
    slope = np.dot(m, b) / np.dot(m, m)
    delay = slope / (TWO_PI * problem.delta_f_hz)
    return phase, delay


def line_fit_residual(problem: LineFitProblem) -> float:
    """Sum of squared residuals of the best-fit line."""
    phase, delay = line_fit_oracle(problem)
    m_half = problem.num_bins // 2
    m = np.arange(-m_half, m_half + 1, dtype=float)
    fit = phase + TWO_PI * problem.delta_f_hz * delay * m
    return float(np.sum((fit - problem.samples_rad) ** 2))


def two_beam_line_fit_problem(
    antenna_index: int,
    sin_theta0: float,
    bandwidth_hz: float,
    num_freq_bins: int,
    k: int | None = None,
) -> LineFitProblem:
    """Step-function samples for the symmetric two-beam constraint.

    The lower M/2 samples take k*2*pi - n*pi*sin(theta0) and the upper
    M/2 + 1 samples take +n*pi*sin(theta0).  `k` defaults to the
    error-minimizing choice round(n * sin(theta0)).
    """
    if num_freq_bins % 2 != 0:
        raise ValueError("num_freq_bins must be even")
    phi = antenna_index * np.pi * sin_theta0
    if k is None:
        k = int(round_half_away(antenna_index * sin_theta0))
    half = num_freq_bins // 2
    samples = np.concatenate(
        [np.full(half, k * TWO_PI - phi), np.full(half + 1, phi)]
    )
    delta_f = bandwidth_hz / (num_freq_bins + 1)
    return LineFitProblem(samples, delta_f)


@dataclass
class RangeEntry:
    """Delay-range requirement for one plan size and antenna count."""

    num_beams: int
    num_antennas: int
    delay_range_s: float
    ttd_range_s: float


@dataclass
class RangeReport:
    """Delay range / resolution requirements across plans and array sizes."""

    entries: list[RangeEntry] = field(default_factory=list)
    delay_bits: int = 6

    def resolution_required_s(self, entry: RangeEntry) -> float:
        """Quantizer step that covers the range with `delay_bits` control."""
        return entry.delay_range_s / 2**self.delay_bits

    def to_csv_rows(self):
        yield "beams,antennas,delay_range_ns,ttd_range_ns"
        for e in self.entries:
            yield "%d,%d,%.6f,%.6f" % (
                e.num_beams,
                e.num_antennas,
                e.delay_range_s * 1e9,
                e.ttd_range_s * 1e9,
            )


def delay_range_analysis(plans, bandwidth_hz: float, antenna_counts) -> RangeReport:
    """Report max-min delay of the closed-form weights per plan and N.

    The comparison column is the per-element true-time-delay hardware range
    (N - 1) / (2B), i.e. 1.25 ns per element at 400 MHz.
    """
    report = RangeReport()
    for plan in plans:
        sin_thetas, alphas = _plan_angles_fractions(plan)
        for num_antennas in antenna_counts:
            delays, _ = generalized_weights_raw(
                sin_thetas, alphas, bandwidth_hz, num_antennas
            )
            report.entries.append(
                RangeEntry(
                    num_beams=len(plan.beams),
                    num_antennas=num_antennas,
                    delay_range_s=float(np.max(delays) - np.min(delays)),
                    ttd_range_s=(num_antennas - 1) / (2.0 * bandwidth_hz),
                )
            )
    return report

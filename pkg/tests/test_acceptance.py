"""End-to-end acceptance checks.

Each test validates one headline property of the package at its stated
tolerance and prints a single PASS/FAIL line so the suite doubles as a
checklist (`pytest -s tests/test_acceptance.py`).
"""

import numpy as np
import pytest

from dpalab import cli
from dpalab import closedform as cf
from dpalab import fsda
from dpalab import netsim as ns
from dpalab.core import ArrayConfig, DelayPhaseWeights, gain_image
from dpalab.baselines import Architecture, ArchKind, ttd_rainbow_weights

B = 400e6


def report(name: str, passed: bool, detail: str):
    print("\n[%s] %s: %s" % ("PASS" if passed else "FAIL", name, detail))
    assert passed, "%s: %s" % (name, detail)


def test_01_two_beam_range_and_pointing():
    span = 1.5 / B  # 3.75 ns at 400 MHz
    # Angle grid near critical sampling: one bin is comparable to the
    # array beamwidth, so the criterion tolerates the physical in-band
    # beam drift without resolving sub-beamwidth detail.
    cfg = ArrayConfig(num_antennas=16, num_freq_bins=128, num_angle_bins=32)
    bin_w = 2.0 / cfg.num_angle_bins
    lower = cfg.freq_axis_hz < 0
    in_range = True
    worst_frac = 1.0
    for s0 in np.linspace(0.0, 1.0, 50):
        w = cf.two_beam_weights(s0, B, 16)
        in_range &= bool(np.all(w.delays_s >= 0) and np.all(w.delays_s < span))
        peaks = cfg.sin_theta_axis[
            np.argmax(np.abs(gain_image(w, cfg).values), axis=1)
        ]
        # the angle grid covers [-1, 1); fold the +1 edge back for s0 = 1
        err_lo = np.minimum(np.abs(peaks[lower] + s0),
                            np.abs(peaks[lower] + s0 - 2.0))
        err_hi = np.minimum(np.abs(peaks[~lower] - s0),
                            np.abs(peaks[~lower] - s0 + 2.0))
        frac = np.mean(np.concatenate([err_lo, err_hi]) <= bin_w + 1e-12)
        worst_frac = min(worst_frac, float(frac))
    passed = in_range and worst_frac >= 0.95
    report(
        "two-beam delay range and pointing",
        passed,
        "delays in [0, 3.75 ns): %s; worst in-band pointing fraction %.3f (need >= 0.95)"
        % (in_range, worst_frac),
    )


def test_02_generalized_reduces_to_two_beam():
    worst = 0.0
    span = 1.5 / B  # delays only matter modulo this wrap interval
    for s0 in np.linspace(0.05, 0.95, 10):
        plan = fsda.BeamPlan.equal_split([-s0, s0], B)
        wg = cf.generalized_weights(plan, B, 16)
        wt = cf.two_beam_weights(s0, B, 16)
        # differences must share one global shift, modulo the wrap
        d = np.mod(wt.delays_s - wg.delays_s - (wt.delays_s[0] - wg.delays_s[0]),
                   span)
        worst = max(worst, float(np.max(np.minimum(d, span - d)) / span))
        dphi = np.mod(wt.phases_rad - wg.phases_rad, 2 * np.pi)
        dphi = np.minimum(dphi, 2 * np.pi - dphi)
        worst = max(worst, float(np.max(dphi) / (2 * np.pi)))
    passed = worst < 1e-12
    report(
        "generalized weights reduce to the symmetric two-beam form",
        passed,
        "worst relative deviation %.3e (need < 1e-12)" % worst,
    )


def test_03_line_fit_oracle_convergence():
    span = 1.5 / B
    grids = (256, 1024, 4096)
    worst_by_m = []
    for m_bins in grids:
        worst = 0.0
        for n in range(1, 8):
            for s0 in (0.2, 0.45, 0.6, 0.85):
                w = cf.two_beam_weights(s0, B, 8)
                problem = cf.two_beam_line_fit_problem(n, s0, B, m_bins)
                phase, delay = cf.line_fit_oracle(problem)
                fitted = np.mod(delay + span / 2.0, span)
                derr = min(abs(fitted - w.delays_s[n]),
                           span - abs(fitted - w.delays_s[n])) / span
                # the fitted intercept approaches the closed-form phase
                # round(n sin theta0) * pi as the grid refines
                target = cf.round_half_away(n * s0) * np.pi
                perr = abs(phase - target) / (2 * np.pi)
                worst = max(worst, max(derr, perr))
        worst_by_m.append(worst)
    monotone = worst_by_m[0] >= worst_by_m[1] >= worst_by_m[2]
    passed = monotone and worst_by_m[-1] < 1e-3
    report(
        "closed form matches the least-squares line fit",
        passed,
        "worst relative error %s over grids %s (need monotone, final < 1e-3)"
        % (["%.2e" % e for e in worst_by_m], list(grids)),
    )


def test_04_image_synthesis_matches_closed_form():
    cfg = ArrayConfig(num_antennas=32, num_freq_bins=512,
                      num_angle_bins=32, num_time_taps=512)
    plans = {
        "3-beam": fsda.BeamPlan.equal_split([-0.5, 0.0, 0.5], B,
                                            width_sin=2.0 / 32),
        "5-beam": fsda.BeamPlan.equal_split(
            [-0.625, -0.3125, 0.0, 0.3125, 0.625], B, width_sin=2.0 / 32),
    }
    details = []
    passed = True
    for label, plan in plans.items():
        wf = fsda.synthesize(plan, cfg, q=None)
        wm = cf.generalized_weights(plan, B, 32)
        imgs = {
            "image": np.abs(gain_image(wf, cfg).values),
            "math": np.abs(gain_image(wm, cfg).values),
        }
        agree = float(np.mean(
            np.argmax(imgs["image"], axis=1) == np.argmax(imgs["math"], axis=1)
        ))
        margins = []
        for img in imgs.values():
            desired = fsda.build_desired_image(plan, cfg).values > 0
            in_db = 20 * np.log10(np.mean(img[desired]) / 32)
            out_db = 20 * np.log10(np.mean(img[~desired]) / 32)
            margins.append(in_db - out_db)
        passed &= agree >= 0.90 and min(margins) > 6.0
        details.append("%s agreement %.3f, in/out margins %.1f/%.1f dB"
                       % (label, agree, margins[0], margins[1]))
    report(
        "image-synthesis and closed-form patterns agree",
        passed,
        "; ".join(details) + " (need agreement >= 0.90)",
    )


def test_05_quantization_degradation():
    details = []
    passed = True
    for which in ("phase", "delay"):
        degs = [cli.quantization_degradation(bits, which)
                for bits in range(1, 7)]
        monotone = all(a >= b - 1e-9 for a, b in zip(degs, degs[1:]))
        under_1db = all(d < 1.0 for d in degs[2:])
        passed &= monotone and under_1db
        details.append("%s %s dB" % (which, ["%.3f" % d for d in degs]))
    report(
        "quantization loss monotone and < 1 dB from 3 bits",
        passed,
        "; ".join(details),
    )


def test_06_multi_beam_vs_split_antenna():
    config = cli._benchmark_config(16)
    results = {}
    for count in (4, 8):
        dirs = np.sin(np.deg2rad(np.linspace(-40.0, 40.0, count)))
        dpa = float(np.mean(cli._multi_beam_snrs(
            dirs, [1.0 / count] * count, config)))
        split = float(np.mean(cli._split_snrs(dirs, config)))
        results[count] = (dpa, split)
    gap4 = results[4][0] - results[4][1]
    gap8 = results[8][0] - results[8][1]
    oracle_gap = -results[8][0]  # the oracle sits at 0 dB by definition
    passed = gap4 >= 3.0 and gap8 >= 6.0 and oracle_gap <= 2.5
    report(
        "multi-beam SNR advantage over the split array",
        passed,
        "4 dirs +%.2f dB (need >= 3), 8 dirs +%.2f dB (need >= 6), "
        "oracle gap %.2f dB (need <= 2.5)" % (gap4, gap8, oracle_gap),
    )


def test_07_bandwidth_fraction_snr_convergence():
    config = cli._benchmark_config(16)

    def deviation(dirs, beta):
        count = len(dirs)
        rest = (1.0 - beta) / (count - 1)
        snrs = cli._multi_beam_snrs(dirs, [beta] + [rest] * (count - 1), config)
        return abs(snrs[0] - float(np.mean(snrs)))

    dev2 = deviation(np.sin(np.deg2rad([-15.0, 15.0])), 0.20)
    dev16 = deviation(np.sin(np.deg2rad(np.linspace(-40.0, 40.0, 16))), 0.04)
    passed = dev2 <= 1.0 and dev16 <= 1.0
    report(
        "per-beam SNR reaches the average at small bandwidth fractions",
        passed,
        "2 groups @ 20%%: %.2f dB; 16 groups @ 4%%: %.2f dB (need <= 1)"
        % (dev2, dev16),
    )


def test_08_power_conservation():
    cfg = ArrayConfig(num_antennas=16, num_freq_bins=32, num_angle_bins=64)
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        w = DelayPhaseWeights(rng.uniform(0, 5e-9, 16),
                              rng.uniform(0, 2 * np.pi, 16))
        mean_power = np.mean(np.abs(gain_image(w, cfg).values) ** 2, axis=1)
        worst = max(worst, float(np.max(np.abs(mean_power / 16 - 1.0))))
    passed = worst < 1e-6
    report(
        "per-frequency power conservation over the angle grid",
        passed,
        "worst relative error %.2e over 100 random weight vectors (need < 1e-6)"
        % worst,
    )


def test_09_emulation_orderings():
    kinds = (ArchKind.DPA, ArchKind.PHASED_TDMA, ArchKind.SPLIT_ANTENNA,
             ArchKind.TTD_RAINBOW)
    loss = {}
    worst = {}
    for kind in kinds:
        rep = ns.run_emulation(ns.table_one_scenario(Architecture(kind)))
        loss[kind] = rep.packet_loss_fraction()
        worst[kind] = rep.latency_stats_s()[2]
    ordering = (loss[ArchKind.TTD_RAINBOW] > loss[ArchKind.SPLIT_ANTENNA]
                > loss[ArchKind.PHASED_TDMA] > loss[ArchKind.DPA])
    dpa_lossless = loss[ArchKind.DPA] == 0.0
    dpa_fastest = all(worst[ArchKind.DPA] < worst[k]
                      for k in kinds if k != ArchKind.DPA)
    passed = ordering and dpa_lossless and dpa_fastest
    report(
        "emulation loss ordering and latency",
        passed,
        "loss ttd %.3f > split %.3f > tdma %.3f > dpa %.3f; worst latency "
        "dpa %.3f ms vs others %.3f/%.3f/%.3f ms" % (
            loss[ArchKind.TTD_RAINBOW], loss[ArchKind.SPLIT_ANTENNA],
            loss[ArchKind.PHASED_TDMA], loss[ArchKind.DPA],
            worst[ArchKind.DPA] * 1e3, worst[ArchKind.PHASED_TDMA] * 1e3,
            worst[ArchKind.SPLIT_ANTENNA] * 1e3,
            worst[ArchKind.TTD_RAINBOW] * 1e3,
        ),
    )


def test_10_rainbow_pointing_locus():
    cfg = ArrayConfig(num_antennas=16, num_freq_bins=128, num_angle_bins=512)
    w = ttd_rainbow_weights(16, B)
    img = np.abs(gain_image(w, cfg).values)
    peaks = cfg.sin_theta_axis[np.argmax(img, axis=1)]
    expected = 2.0 * cfg.freq_axis_hz / B
    worst = float(np.max(np.abs(peaks - expected)))
    bin_w = 2.0 / cfg.num_angle_bins
    passed = worst <= bin_w + 1e-12
    report(
        "fixed delay ramp points each frequency at sin = 2f/B",
        passed,
        "worst pointing error %.5f (need <= one angle bin %.5f)"
        % (worst, bin_w),
    )

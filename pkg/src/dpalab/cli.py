"""Command-line front-end: weight synthesis, pattern export, benchmark
sweeps, network emulation, and self-validation, all emitting plot-ready
CSV/JSON files.

Output directory resolution: --out flag, else the DPALAB_OUT_DIR
environment variable, else the current directory.  Errors are reported
as a JSON object on stderr with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from dpalab.core import (
    ArrayConfig,
    DelayPhaseWeights,
    gain_image,
)
from dpalab import closedform as cf
from dpalab import fsda
from dpalab import baselines as bl
from dpalab import netsim as ns

OUT_DIR_ENV = "DPALAB_OUT_DIR"

ARCH_BY_NAME = {k.value: k for k in bl.ArchKind}


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(OUT_DIR_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _config(args) -> ArrayConfig:
    return ArrayConfig(
        num_antennas=args.antennas,
        bandwidth_hz=args.bandwidth_hz,
        num_freq_bins=args.freq_bins,
        num_angle_bins=args.angle_bins,
        num_time_taps=args.freq_bins,
    )


def _quantizer(args) -> fsda.QuantizerSpec | None:
    if args.no_quantize:
        return None
    return fsda.QuantizerSpec(
        phase_bits=args.phase_bits,
        delay_step_s=args.delay_step_ns * 1e-9,
    )


def _load_plan(args) -> fsda.BeamPlan:
    if args.plan:
        return fsda.BeamPlan.from_json(Path(args.plan).read_text())
    # Default demonstration plan: symmetric two beams at +/- 30 degrees.
    s0 = np.sin(np.deg2rad(30.0))
    return fsda.BeamPlan.equal_split([-s0, s0], args.bandwidth_hz)


def _weights_for(plan: fsda.BeamPlan, method: str, config: ArrayConfig,
                 q: fsda.QuantizerSpec | None) -> DelayPhaseWeights:
    if method == "closedform":
        w = cf.generalized_weights(plan, config.bandwidth_hz, config.num_antennas)
        return fsda.quantize_weights(w, q) if q is not None else w
    return fsda.synthesize(plan, config, q=q)


def _write_csv(path: Path, rows) -> None:
    path.write_text("\n".join(rows) + "\n")


def cmd_weights(args) -> list:
    plan = _load_plan(args)
    config = _config(args)
    q = _quantizer(args)
    out = _out_dir(args)
    methods = ["fsda", "closedform"] if args.method == "both" else [args.method]
    tables = {m: _weights_for(plan, m, config, q) for m in methods}
    header = "antenna"
    for m in methods:
        header += f",delay_ns_{m},phase_deg_{m}"
    if len(methods) == 2:
        header += ",delay_diff_ns,phase_diff_deg"
    header += ",quantized"
    rows = [header]
    for n in range(config.num_antennas):
        cells = [str(n)]
        for m in methods:
            w = tables[m]
            cells += ["%.6f" % (w.delays_s[n] * 1e9),
                      "%.4f" % np.degrees(w.phases_rad[n])]
        if len(methods) == 2:
            a, b = tables[methods[0]], tables[methods[1]]
            dphi = np.degrees(
                (a.phases_rad[n] - b.phases_rad[n] + np.pi) % (2 * np.pi) - np.pi
            )
            cells += ["%.6f" % ((a.delays_s[n] - b.delays_s[n]) * 1e9),
                      "%.4f" % dphi]
        cells.append(str(int(q is not None)))
        rows.append(",".join(cells))
    path = out / "weights.csv"
    _write_csv(path, rows)
    return [str(path)]


def cmd_pattern(args) -> list:
    config = _config(args)
    out = _out_dir(args)
    kind = ARCH_BY_NAME[args.arch]
    plan = _load_plan(args)
    if kind == bl.ArchKind.ORACLE:
        image = bl.oracle_gain(plan, config)
    else:
        if kind == bl.ArchKind.DPA:
            w = _weights_for(plan, args.method if args.method != "both" else "fsda",
                             config, _quantizer(args))
        elif kind == bl.ArchKind.PHASED_TDMA:
            w = bl.phased_array_weights(plan.beams[0].sin_theta, config.num_antennas)
        elif kind == bl.ArchKind.SPLIT_ANTENNA:
            w = bl.split_array_weights([b.sin_theta for b in plan.beams],
                                       config.num_antennas)
        else:
            w = bl.ttd_rainbow_weights(config.num_antennas, config.bandwidth_hz)
        image = gain_image(w, config)
    db = image.magnitude_db(config.num_antennas)
    rows = ["freq_hz," + ",".join("%.6f" % s for s in image.sin_theta_axis)]
    for i, f in enumerate(image.freq_axis_hz):
        rows.append("%.1f," % f + ",".join("%.3f" % v for v in db[i]))
    path = out / f"pattern_{args.arch}.csv"
    _write_csv(path, rows)
    return [str(path)]


# --------------------------------------------------------------------------
# Benchmark sweeps.  Each helper returns CSV rows so tests can reuse them.

def _stripe_peak_snr_db(img: np.ndarray, config: ArrayConfig,
                        beam: fsda.BeamSpec) -> float:
    """Mean in-band beam-peak power near the beam direction, dB re N^2."""
    f = config.freq_axis_hz
    sel = (f >= beam.f_low_hz) & (f < beam.f_high_hz)
    stripe = np.abs(config.sin_theta_axis - beam.sin_theta) <= beam.width_sin / 2.0
    peak = img[np.ix_(sel, stripe)].max(axis=1)
    return 10.0 * np.log10(np.mean(peak**2) / config.num_antennas**2)


def _multi_beam_snrs(dirs, fracs, config: ArrayConfig) -> list:
    plan = fsda.BeamPlan.proportional(
        list(dirs), fracs, config.bandwidth_hz,
        width_sin=2.0 / config.num_antennas,
    )
    w = cf.generalized_weights(plan, config.bandwidth_hz, config.num_antennas)
    img = np.abs(gain_image(w, config).values)
    return [_stripe_peak_snr_db(img, config, b) for b in plan.beams]


def _split_snrs(dirs, config: ArrayConfig) -> list:
    w = bl.split_array_weights(list(dirs), config.num_antennas)
    img = np.abs(gain_image(w, config).values)
    half = 1.0 / config.num_antennas
    out = []
    for s in dirs:
        stripe = np.abs(config.sin_theta_axis - s) <= half
        peak = img[:, stripe].max(axis=1)
        out.append(10.0 * np.log10(np.mean(peak**2) / config.num_antennas**2))
    return out


def _benchmark_config(num_antennas: int = 16) -> ArrayConfig:
    return ArrayConfig(num_antennas=num_antennas, num_freq_bins=512,
                       num_angle_bins=512, num_time_taps=512)


def benchmark_angle_sep(separations_deg=None) -> list:
    """Mean two-user SNR (dB relative to full-array reference) vs angular
    separation, multi-beam front-end against the split array."""
    if separations_deg is None:
        separations_deg = range(0, 61, 4)
    config = _benchmark_config()
    rows = ["separation_deg,dpa_snr_db,split_snr_db"]
    for sep in separations_deg:
        dirs = np.sin(np.deg2rad([-sep / 2.0, sep / 2.0]))
        if sep == 0:
            # Both approaches collapse to one full-array beam.
            dpa = split = np.mean(_multi_beam_snrs([0.0], [1.0], config))
        else:
            dpa = np.mean(_multi_beam_snrs(dirs, [0.5, 0.5], config))
            split = np.mean(_split_snrs(dirs, config))
        rows.append("%d,%.4f,%.4f" % (sep, dpa, split))
    return rows


def benchmark_subcarrier_alloc(group_counts=(2, 16), fractions=None) -> list:
    """Group-1 SNR deviation from the all-user average vs allocated
    bandwidth fraction."""
    if fractions is None:
        fractions = [0.01] + [round(0.02 * k, 2) for k in range(1, 50)]
    config = _benchmark_config()
    rows = ["groups,fraction,group1_snr_db,average_snr_db"]
    for count in group_counts:
        if count == 2:
            dirs = np.sin(np.deg2rad([-15.0, 15.0]))
        else:
            dirs = np.sin(np.deg2rad(np.linspace(-40.0, 40.0, count)))
        for beta in fractions:
            if beta >= 1.0 or beta <= 0.0:
                continue
            rest = (1.0 - beta) / (count - 1)
            snrs = _multi_beam_snrs(dirs, [beta] + [rest] * (count - 1), config)
            avg = float(np.mean(snrs))
            rows.append("%d,%.3f,%.4f,%.4f" % (count, beta, snrs[0] + 25.0 - avg, 25.0))
    return rows


def quantization_degradation(bits: int, which: str, num_antennas: int = 16,
                             trials: int = 20, seed: int = 7) -> float:
    """Mean beam-gain loss in dB when only `which` ('phase' or 'delay') is
    quantized to `bits` bits, over seeded random two-beam cases."""
    config = ArrayConfig(num_antennas=num_antennas)
    B = config.bandwidth_hz
    f = config.freq_axis_hz
    lo, hi = f < 0, f >= 0
    if which == "phase":
        q = fsda.QuantizerSpec(bits, 1e-13, 8e-9)
    else:
        q = fsda.QuantizerSpec(16, 6.4e-9 / 2**bits, 6.4e-9)
    rng = np.random.default_rng(seed)
    pairs = [(-a, b) for a, b in rng.uniform(0.2, 0.8, (trials, 2))]

    def beam_gain(w, s1, s2):
        from dpalab.core import gain_at
        g1 = np.abs(gain_at(w, f[lo], np.full(lo.sum(), s1), config)).mean()
        g2 = np.abs(gain_at(w, f[hi], np.full(hi.sum(), s2), config)).mean()
        return 0.5 * (g1 + g2)

    degs = []
    for s1, s2 in pairs:
        w = cf.asymmetric_two_beam_weights(s1, s2, 0.5, B, num_antennas)
        wq = fsda.quantize_weights(w, q)
        degs.append(20.0 * np.log10(beam_gain(w, s1, s2) / beam_gain(wq, s1, s2)))
    return float(np.mean(degs))


def benchmark_quantization() -> list:
    rows = ["bits,phase_degradation_db,delay_degradation_db"]
    for bits in range(1, 7):
        rows.append("%d,%.4f,%.4f" % (
            bits,
            quantization_degradation(bits, "phase"),
            quantization_degradation(bits, "delay"),
        ))
    return rows


def benchmark_user_dirs(counts=range(1, 9)) -> list:
    """Mean SNR vs number of user directions (the Oracle stays at 0 dB)."""
    rows = ["dirs,dpa_snr_db,split_snr_db,oracle_snr_db"]
    for count in counts:
        config = _benchmark_config()
        if count == 1:
            dirs = [0.0]
        else:
            dirs = np.sin(np.deg2rad(np.linspace(-40.0, 40.0, count)))
        dpa = np.mean(_multi_beam_snrs(dirs, [1.0 / count] * count, config))
        split = np.mean(_split_snrs(dirs, config))
        rows.append("%d,%.4f,%.4f,0.0" % (count, dpa, split))
    return rows


def benchmark_antennas(counts=(8, 16, 32, 64), num_dirs: int = 4) -> list:
    rows = ["antennas,dpa_snr_db,split_snr_db"]
    dirs = np.sin(np.deg2rad(np.linspace(-40.0, 40.0, num_dirs)))
    for n in counts:
        config = _benchmark_config(num_antennas=n)
        dpa = np.mean(_multi_beam_snrs(dirs, [1.0 / num_dirs] * num_dirs, config))
        split = np.mean(_split_snrs(dirs, config))
        rows.append("%d,%.4f,%.4f" % (n, dpa, split))
    return rows


def benchmark_delay_range(bandwidth_hz: float = 400e6) -> list:
    plans = []
    for beams in (2, 3, 4, 5):
        dirs = np.sin(np.deg2rad(np.linspace(-50.0, 50.0, beams)))
        plans.append(fsda.BeamPlan.equal_split(list(dirs), bandwidth_hz))
    report = cf.delay_range_analysis(plans, bandwidth_hz, (8, 16, 32, 64))
    return list(report.to_csv_rows())


BENCHMARKS = {
    "angle_sep": lambda args: benchmark_angle_sep(),
    "subcarrier_alloc": lambda args: benchmark_subcarrier_alloc(),
    "quantization": lambda args: benchmark_quantization(),
    "antennas": lambda args: benchmark_antennas(),
    "user_dirs": lambda args: benchmark_user_dirs(),
    "delay_range": lambda args: benchmark_delay_range(args.bandwidth_hz),
}


def cmd_benchmark(args) -> list:
    out = _out_dir(args)
    rows = BENCHMARKS[args.kind](args)
    path = out / f"benchmark_{args.kind}.csv"
    _write_csv(path, rows)
    return [str(path)]


def cmd_emulate(args) -> list:
    out = _out_dir(args)
    kinds = list(ARCH_BY_NAME.values()) if args.all else [ARCH_BY_NAME[args.arch]]
    kinds = [k for k in kinds if k != bl.ArchKind.ORACLE]
    written = []
    summary_rows = ["architecture,packet_loss_fraction,throughput_mbps,"
                    "latency_median_ms,latency_p99_ms,latency_worst_ms"]
    for kind in kinds:
        arch = bl.Architecture(kind)
        if args.scenario:
            scenario = ns.EmulationScenario.from_json(
                Path(args.scenario).read_text(), architecture=arch)
        else:
            scenario = ns.table_one_scenario(arch, rng_seed=args.seed)
        report = ns.run_emulation(scenario, record_timeseries=True)
        base = out / f"emulation_{kind.value}"
        Path(str(base) + ".json").write_text(json.dumps(report.to_dict(), indent=2))
        ts_rows = ["tti,user,queued_bits,delivered_bits,dropped_packets"]
        ts_rows += ["%d,%d,%d,%d,%d" % row for row in report.timeseries]
        _write_csv(Path(str(base) + ".csv"), ts_rows)
        written += [str(base) + ".json", str(base) + ".csv"]
        med, p99, worst = report.latency_stats_s()
        summary_rows.append("%s,%.4f,%.1f,%s,%s,%s" % (
            kind.value,
            report.packet_loss_fraction(),
            report.throughput_bps() / 1e6,
            "%.3f" % (med * 1e3) if med is not None else "",
            "%.3f" % (p99 * 1e3) if p99 is not None else "",
            "%.3f" % (worst * 1e3) if worst is not None else "",
        ))
    if args.all:
        path = out / "emulation_comparison.csv"
        _write_csv(path, summary_rows)
        written.append(str(path))
    return written


def _validation_checks(config: ArrayConfig) -> dict:
    """Machine-checkable cross-validation properties with measured errors."""
    from dpalab.core import dft_matrix, steering_matrix, gain_image as gimage

    checks = {}
    u = dft_matrix(config)
    err = np.abs(u.conj().T @ u - np.eye(config.num_time_taps)).max()
    checks["dft_unitary"] = {"error": float(err), "passed": bool(err < 1e-9)}

    v = steering_matrix(config)
    err = np.abs(v @ v.conj().T / config.num_angle_bins
                 - np.eye(config.num_antennas)).max()
    checks["steering_orthogonal"] = {"error": float(err), "passed": bool(err < 1e-9)}

    # Power conservation: per-frequency mean of |G|^2 over angles equals N.
    rng = np.random.default_rng(0)
    phases = rng.uniform(0, 2 * np.pi, config.num_antennas)
    delays = rng.uniform(0, 5e-9, config.num_antennas)
    w = DelayPhaseWeights(delays, phases)
    img = gimage(w, config)
    mean_power = np.mean(np.abs(img.values) ** 2, axis=1)
    err = np.abs(mean_power / config.num_antennas - 1.0).max()
    checks["power_conservation"] = {"error": float(err), "passed": bool(err < 1e-6)}

    # Symmetric two-beam closed form against the finite-grid line fit.
    s0, n = 0.6, 3
    problem = cf.two_beam_line_fit_problem(n, s0, config.bandwidth_hz, 4096)
    phase, delay = cf.line_fit_oracle(problem)
    w2 = cf.two_beam_weights(s0, config.bandwidth_hz, config.num_antennas)
    span = 1.5 / config.bandwidth_hz
    delay_err = abs((delay + span * 0.5) - w2.delays_s[n]) / span
    checks["line_fit_two_beam"] = {"error": float(delay_err),
                                   "passed": bool(delay_err < 1e-3)}

    # FSDA against the closed form on a 3-beam plan.
    cfg = ArrayConfig(num_antennas=32, num_freq_bins=512,
                      num_angle_bins=32, num_time_taps=512)
    plan = fsda.BeamPlan.equal_split([-0.5, 0.0, 0.5], cfg.bandwidth_hz,
                                     width_sin=2.0 / 32)
    wf = fsda.synthesize(plan, cfg, q=None)
    wm = cf.generalized_weights(plan, cfg.bandwidth_hz, 32)
    amf = np.argmax(np.abs(gimage(wf, cfg).values), axis=1)
    amm = np.argmax(np.abs(gimage(wm, cfg).values), axis=1)
    agree = float(np.mean(amf == amm))
    checks["fsda_vs_closedform"] = {"agreement": agree, "passed": bool(agree >= 0.9)}
    return checks


def cmd_validate(args) -> list:
    out = _out_dir(args)
    checks = _validation_checks(_config(args))
    result = {"passed": all(c["passed"] for c in checks.values()), "checks": checks}
    path = out / "validation.json"
    path.write_text(json.dumps(result, indent=2))
    print(json.dumps(result, indent=2))
    return [str(path)]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpalab",
        description="Delay-phased-array multi-beam synthesis and emulation",
    )
    parser.add_argument("--antennas", type=int, default=16)
    parser.add_argument("--bandwidth-hz", type=float, default=400e6)
    parser.add_argument("--freq-bins", type=int, default=512)
    parser.add_argument("--angle-bins", type=int, default=256)
    parser.add_argument("--phase-bits", type=int, default=6)
    parser.add_argument("--delay-step-ns", type=float, default=0.1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", help="synthesize per-antenna delays/phases")
    p.add_argument("--plan", default=None, help="beam plan JSON file")
    p.add_argument("--method", choices=["fsda", "closedform", "both"],
                   default="closedform")
    p.add_argument("--no-quantize", action="store_true")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("pattern", help="export a frequency-space gain heatmap")
    p.add_argument("--plan", default=None)
    p.add_argument("--arch", choices=sorted(ARCH_BY_NAME), default="dpa")
    p.add_argument("--method", choices=["fsda", "closedform", "both"],
                   default="closedform")
    p.add_argument("--no-quantize", action="store_true")
    p.set_defaults(func=cmd_pattern)

    p = sub.add_parser("benchmark", help="run a parameter sweep")
    p.add_argument("kind", choices=sorted(BENCHMARKS))
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("emulate", help="run the TTI-level network emulation")
    p.add_argument("--scenario", default=None, help="scenario JSON file")
    p.add_argument("--arch", choices=[k for k in sorted(ARCH_BY_NAME) if k != "oracle"],
                   default="dpa")
    p.add_argument("--all", action="store_true",
                   help="run every architecture and write a comparison table")
    p.set_defaults(func=cmd_emulate)

    p = sub.add_parser("validate", help="run the built-in cross-checks")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        written = args.func(args)
    except Exception as exc:  # noqa: BLE001 - single reporting funnel
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())

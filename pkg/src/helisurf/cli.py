"""Command-line surface: simulate-condensation, synthesize, analyze, fit.

Exit codes: 0 success, 1 internal or convergence failure, 2 user-input
error. Scenario files resolve against the working directory, then
``$HELISURF_CONFIG_DIR``, then the scenarios shipped with the package.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback
from importlib import resources
from pathlib import Path

import numpy as np

from . import io as hio
from .errors import CalibrationError, ConfigError, UserInputError
from .fitting import calibrate_geophone, displacement_from_geophone, fit_kinetic, fit_resonance
from .helium import condensation_trajectory
from .resonator import max_slope_probe, s11_db_slope
from .spectral import (AnalysisReport, calibrate_frequency_noise,
                       compare_pt_on_off, detect_harmonics, rms_displacement,
                       welch_asd)
from .synthesis import (GeophoneModel, TimeTrace, displacement_to_s11_trace,
                        synth_displacement, synth_geophone, trace_derivative)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USER_ERROR = 2


def resolve_config_path(path: str) -> str:
    """Resolve a scenario path: as given, under $HELISURF_CONFIG_DIR, then shipped."""
    if os.path.exists(path):
        return path
    env_dir = os.environ.get("HELISURF_CONFIG_DIR")
    if env_dir:
        candidate = os.path.join(env_dir, path)
        if os.path.exists(candidate):
            return candidate
    shipped = resources.files("helisurf.scenarios") / path
    if shipped.is_file():
        return str(shipped)
    raise ConfigError(
        f"file not found: {path} (searched the working directory, "
        f"$HELISURF_CONFIG_DIR, and the shipped scenarios)")


def _load_config(path: str) -> hio.ScenarioConfig:
    return hio.load_config(resolve_config_path(path))


def _resolve_probe(cfg: hio.ScenarioConfig) -> tuple[float, float]:
    """Probe frequency and dB slope from the acquisition policy."""
    params = cfg.resonance_params()
    policy = cfg._get("acquisition", "probe", "max_slope")
    if policy == "max_slope":
        return max_slope_probe(params)
    if policy == "fixed":
        f0 = cfg._get("acquisition", "probe_f0_hz")
        return f0, float(s11_db_slope(params, f0))
    raise ConfigError(f"unknown probe policy {policy!r} (max_slope or fixed)")


# ---------------------------------------------------------------------------
# commands

def cmd_simulate_condensation(args) -> int:
    cfg = _load_config(args.config)
    scn = cfg.condensation_scenario()
    if scn.schedule:
        t_end = scn.schedule[-1][0]
        dt = cfg._get("condensation", "output_dt_s", max(t_end / 2000.0, 1e-9))
        times = np.arange(0.0, t_end + 0.5 * dt, dt)
    else:
        times = np.array([0.0])
    rows = condensation_trajectory(scn, times)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("# helisurf-condensation v1\n")
        fh.write(f"# config_sha256 = {cfg.source_sha256}\n")
        fh.write("time_s,bulk_depth_m,channel_depth_m,region,f_r_hz\n")
        for t, state, f_r in rows:
            fh.write(f"{repr(t)},{repr(state.bulk_depth)},"
                     f"{repr(state.channel_depth)},{state.region},{repr(f_r)}\n")
    return EXIT_OK


def cmd_synthesize(args) -> int:
    cfg = _load_config(args.config)
    params = cfg.resonance_params()
    shift = cfg.shift_model()
    scn = cfg.fluctuation(pt_on=args.pt_on, seed=args.seed)
    rate = cfg._get("acquisition", "sample_rate_hz")
    duration = cfg._get("acquisition", "duration_s")
    f0, slope = _resolve_probe(cfg)
    db_sigma = cfg._get("acquisition", "db_noise_sigma_db", 0.0)

    common_meta = {
        "config_sha256": cfg.source_sha256,
        "seed": scn.seed,
        "pt_on": scn.pt_on,
    }
    prefix = Path(args.out)

    disp = synth_displacement(scn, rate, duration)
    hio.write_trace(f"{prefix}_displacement.csv", disp, {
        **common_meta, "kind": "displacement"})

    db = displacement_to_s11_trace(disp, params, shift, f0,
                                   db_noise_sigma=db_sigma)
    hio.write_trace(f"{prefix}_s11_db.csv", db, {
        **common_meta, "kind": "s11_db",
        "probe_f0_hz": repr(f0), "probe_slope_db_per_hz": repr(slope),
        "sensitivity_hz_per_m": repr(shift.sensitivity_magnitude())})
    written = [f"{prefix}_displacement.csv", f"{prefix}_s11_db.csv"]

    if cfg.has("geophone_fluctuation"):
        gm = cfg.geophone_model()
        gscn = cfg.fluctuation("geophone_fluctuation", pt_on=args.pt_on,
                               seed=args.seed)
        grate = cfg._get("geophone", "sample_rate_hz")
        gdur = cfg._get("geophone", "duration_s")
        gdisp = synth_displacement(gscn, grate, gdur)
        gvel = trace_derivative(gdisp, "m/s")
        volts = synth_geophone(
            gvel, gm,
            voltage_noise_asd=cfg._get("geophone", "voltage_noise_v_sqrthz", 0.0))
        hio.write_trace(f"{prefix}_geophone_v.csv", volts, {
            **common_meta, "seed": gscn.seed, "pt_on": gscn.pt_on,
            "kind": "geophone_voltage"})
        written.append(f"{prefix}_geophone_v.csv")

    for path in written:
        print(path)
    return EXIT_OK


def _analysis_settings(cfg, args):
    seg = cfg._get("analysis", "segment_length", 2048)
    overlap = cfg._get("analysis", "overlap_fraction", 0.5)
    window = cfg._get("analysis", "window", "hann")
    band = (cfg._get("analysis", "band_lo_hz", 1.0),
            cfg._get("analysis", "band_hi_hz", 200.0))
    if args.band:
        try:
            lo, _, hi = args.band.partition(":")
            band = (float(lo), float(hi))
        except ValueError:
            raise UserInputError(f"--band expects 'f1:f2', got {args.band!r}") from None
    n_max = cfg._get("analysis", "harmonic_n_max", 20)
    threshold = cfg._get("analysis", "harmonic_threshold", 5.0)
    return seg, overlap, window, band, n_max, threshold


def _geophone_from_calibration(path: str) -> GeophoneModel:
    doc = hio.read_report(path)
    if doc.get("kind") == "fit" and doc.get("mode") == "geophone":
        p = doc["parameters"]
        return GeophoneModel(natural_frequency=p["natural_frequency"],
                             damping_ratio=p["damping_ratio"],
                             sensitivity=p["sensitivity"],
                             preamp_gain=p.get("preamp_gain", 100.0))
    raise CalibrationError(f"{path} is not a geophone fit result")


def _analyze_one(trace: TimeTrace, cfg, args, stem: Path, suffix: str) -> AnalysisReport:
    seg, overlap, window, band, n_max, threshold = _analysis_settings(cfg, args)
    f_pt = None
    if cfg.has("fluctuation"):
        f_pt = cfg._get("fluctuation", "f_pt_hz", 0.0) or None

    if trace.unit == "dB":
        params = cfg.resonance_params()
        shift = cfg.shift_model()
        if "probe_f0_hz" in trace.meta:
            f0 = float(trace.meta["probe_f0_hz"])
            slope = float(s11_db_slope(params, f0))
        else:
            f0, slope = _resolve_probe(cfg)
        s_db = welch_asd(trace, seg, overlap, window)
        s_f = calibrate_frequency_noise(s_db, slope)
        sensitivity = shift.sensitivity_magnitude()
        rms = rms_displacement(s_f, sensitivity, band[0], band[1])
        harmonics = tuple(detect_harmonics(s_f, f_pt, n_max, threshold)) if f_pt else ()
        hio.write_spectrum(f"{stem}_sdb{suffix}.csv", s_db)
        hio.write_spectrum(f"{stem}_sf{suffix}.csv", s_f)
        report = AnalysisReport(harmonics, band, rms, sensitivity, probe_slope=slope,
                                extra={"n_segments_averaged": s_db.n_segments_averaged})
    elif trace.unit == "V":
        if args.calibration:
            gm = _geophone_from_calibration(args.calibration)
        elif cfg.has("geophone"):
            gm = cfg.geophone_model()
        else:
            raise CalibrationError(
                "volt traces need --calibration or a [geophone] config section")
        gseg = cfg._get("geophone", "segment_length", 4096) if cfg.has("geophone") else 4096
        cutoff = (cfg._get("geophone", "deconvolution_cutoff_hz",
                           gm.natural_frequency / 4.0)
                  if cfg.has("geophone") else gm.natural_frequency / 4.0)
        gband = band
        if cfg.has("geophone") and not args.band:
            gband = (cfg._get("geophone", "band_lo_hz", band[0]),
                     cfg._get("geophone", "band_hi_hz", band[1]))
        if cfg.has("geophone_fluctuation"):
            f_pt = cfg._get("geophone_fluctuation", "f_pt_hz", 0.0) or f_pt
        s_x, rms = displacement_from_geophone(
            trace, gm, segment_length=gseg, overlap=overlap, window=window,
            cutoff=cutoff, band=gband)
        harmonics = tuple(detect_harmonics(s_x, f_pt, n_max, threshold)) if f_pt else ()
        hio.write_spectrum(f"{stem}_displacement_asd{suffix}.csv", s_x)
        report = AnalysisReport(harmonics, gband, rms, 1.0, probe_slope=None,
                                extra={"n_segments_averaged": s_x.n_segments_averaged,
                                       "deconvolution_cutoff_hz": cutoff})
    elif trace.unit == "m":
        s_x = welch_asd(trace, seg, overlap, window)
        rms = rms_displacement(s_x, 1.0, band[0], band[1])
        harmonics = tuple(detect_harmonics(s_x, f_pt, n_max, threshold)) if f_pt else ()
        hio.write_spectrum(f"{stem}_displacement_asd{suffix}.csv", s_x)
        report = AnalysisReport(harmonics, band, rms, 1.0,
                                extra={"n_segments_averaged": s_x.n_segments_averaged})
    else:
        raise UserInputError(f"cannot analyze traces with unit {trace.unit!r}")

    if report.detected_harmonics:
        with open(f"{stem}_harmonics{suffix}.csv", "w", encoding="utf-8") as fh:
            fh.write("n,frequency_hz,asd_peak\n")
            for h in report.detected_harmonics:
                fh.write(f"{h.n},{repr(h.frequency)},{repr(h.asd_peak)}\n")
    return report


def cmd_analyze(args) -> int:
    cfg = _load_config(args.config)
    stem = Path(args.out).with_suffix("")
    traces = [hio.read_trace(p) for p in args.traces]
    if args.compare:
        if len(traces) != 2:
            raise UserInputError("--compare needs exactly two traces (PT on, PT off)")
        rep_on = _analyze_one(traces[0], cfg, args, stem, "_on")
        rep_off = _analyze_one(traces[1], cfg, args, stem, "_off")
        comparison = compare_pt_on_off(rep_on, rep_off)
        rep_on = AnalysisReport(rep_on.detected_harmonics, rep_on.band,
                                rep_on.delta_h_rms, rep_on.sensitivity_used,
                                probe_slope=rep_on.probe_slope,
                                rms_reduction_pt_off=comparison.reduction,
                                extra=rep_on.extra)
        hio.write_report(args.out, rep_on, config_sha256=cfg.source_sha256,
                         seed=traces[0].meta.get("seed"), comparison=comparison)
        print(f"PT on: {rep_on.delta_h_rms:.3e} m, PT off: "
              f"{comparison.off.delta_h_rms:.3e} m, reduction "
              f"{100 * comparison.reduction:.1f}%")
    else:
        if len(traces) != 1:
            raise UserInputError("analyze expects one trace (or two with --compare)")
        report = _analyze_one(traces[0], cfg, args, stem, "")
        hio.write_report(args.out, report, config_sha256=cfg.source_sha256,
                         seed=traces[0].meta.get("seed"))
        print(f"delta_h_rms = {report.delta_h_rms:.3e} m over "
              f"{report.band[0]}-{report.band[1]} Hz; "
              f"{len(report.detected_harmonics)} harmonics detected")
    return EXIT_OK


def _read_columns(path, n_cols):
    rows = []
    try:
        fh = open(resolve_config_path(str(path)), "r", encoding="utf-8")
    except OSError as exc:
        raise UserInputError(f"cannot read {path}: {exc}") from None
    with fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != n_cols:
                if line_no == 1 and not _is_numeric(parts[0]):
                    continue  # column header
                raise UserInputError(
                    f"{path}:{line_no}: expected {n_cols} columns, got {len(parts)}")
            if not _is_numeric(parts[0]):
                continue
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise UserInputError(f"{path}:{line_no}: non-numeric value") from None
    if not rows:
        raise UserInputError(f"{path}: no data rows")
    return np.asarray(rows).T


def _is_numeric(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def cmd_fit(args) -> int:
    cfg = _load_config(args.config) if args.config else None
    if args.mode == "resonance":
        freqs, db = _read_columns(args.data, 2)
        result = fit_resonance(freqs, db)
    elif args.mode == "kinetic":
        temps, frs = _read_columns(args.data, 2)
        fix_tc = None
        if cfg is not None and cfg.has("resonator"):
            fix_tc = cfg.sections["resonator"].get("tc_k")
        result = fit_kinetic(temps, frs, fix_tc=args.fix_tc or fix_tc)
    elif args.mode == "geophone":
        t, vel, volts = _read_columns(args.data, 3)
        steps = np.diff(t)
        if len(steps) == 0 or np.any(steps <= 0):
            raise UserInputError("geophone data needs an increasing time column")
        rate = 1.0 / steps[0]
        initial = cfg.geophone_model() if cfg and cfg.has("geophone") else GeophoneModel()
        drive = TimeTrace(vel, rate, "m/s")
        response = TimeTrace(volts, rate, "V")
        result = calibrate_geophone(drive, response, initial)
    else:
        raise UserInputError(f"unknown fit mode {args.mode!r}")

    hio.write_fit_result(args.out, result, args.mode)
    summary = ", ".join(f"{k} = {v:.6g}" for k, v in result.parameters.items())
    print(f"{args.mode} fit: converged={result.converged} ({summary})")
    if not result.converged and not args.allow_nonconverged:
        print("fit did not converge", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="helisurf",
        description="CPW-resonator helium surface-noise simulation and analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-condensation",
                       help="write the region I-IV condensation trajectory CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate_condensation)

    p = sub.add_parser("synthesize",
                       help="synthesize displacement, reflection and geophone traces")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--seed", type=int, default=None)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--pt-on", dest="pt_on", action="store_true", default=None)
    group.add_argument("--pt-off", dest="pt_on", action="store_false")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("analyze", help="run the noise-spectroscopy pipeline on traces")
    p.add_argument("traces", nargs="+", help="trace CSV (two with --compare)")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--band", default=None, help="integration band 'f1:f2' [Hz]")
    p.add_argument("--compare", action="store_true",
                   help="treat traces as a PT-on/PT-off pair")
    p.add_argument("--calibration", default=None,
                   help="geophone fit-result JSON for volt traces")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit", help="nonlinear least-squares fits")
    p.add_argument("--mode", required=True,
                   choices=("resonance", "kinetic", "geophone"))
    p.add_argument("--data", required=True,
                   help="input data CSV (looked up like scenario files)")
    p.add_argument("--out", required=True, help="fit-result JSON path")
    p.add_argument("--config", default=None)
    p.add_argument("--fix-tc", type=float, default=None,
                   help="freeze Tc in kinetic mode [K]")
    p.add_argument("--allow-nonconverged", action="store_true")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UserInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR
    except Exception:
        traceback.print_exc()
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

"""Scenario-file parsing and trace/spectrum/report serialization.

Scenario files are line-oriented, sectioned ``key = value`` text. Every
dimensionful key carries its SI unit in the name (length_m, f_pt_hz, ...);
unknown sections or keys are rejected with line diagnostics. Traces and
spectra are CSV with ``# key = value`` metadata headers; reports are
versioned JSON documents.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, UserInputError
from .fitting import FitResult
from .helium import CondensationScenario, HeliumConstants, ShiftModel
from .resonator import KineticModel, ResonanceParams, ResonatorGeometry
from .spectral import AnalysisReport, Harmonic, PtComparison, Spectrum
from .synthesis import FluctuationScenario, GeophoneModel, TimeTrace

SCHEMA_VERSION = 1

_FLOAT_KEYS = {
    "resonator": [
        "length_m", "center_strip_width_m", "gap_width_m", "film_thickness_m",
        "substrate_eps_r", "substrate_thickness_m", "coupling_capacitance_f",
        "f_r_hz", "q_loaded", "q_coupling", "asymmetry_rad", "baseline_db",
        "tc_k", "lk_over_lm", "f_r0_hz",
    ],
    "helium": [
        "density_kg_m3", "surface_tension_n_m", "vdw_gamma_j_m", "eps_helium",
        "g_m_s2", "dfr_dh_hz_m", "channel_full_shift_hz", "bulk_shift_hz",
        "film_region_shift_hz",
    ],
    "condensation": [
        "cell_depth_m", "base_frequency_hz", "dead_volume_cm3",
        "film_volume_cm3", "bulk_volume_cm3", "transient_amplitude_hz",
        "transient_tau_s", "recovery_offset_hz", "output_dt_s",
    ],
    "fluctuation": [
        "f_pt_hz", "building_band_lo_hz", "building_band_hi_hz",
        "building_band_rms_m", "line_frequency_hz", "line_amplitude_m",
        "white_floor_m_sqrthz",
    ],
    "acquisition": ["sample_rate_hz", "duration_s", "probe_f0_hz",
                    "db_noise_sigma_db"],
    "analysis": ["overlap_fraction", "band_lo_hz", "band_hi_hz",
                 "harmonic_threshold"],
    "geophone": [
        "natural_frequency_hz", "damping_ratio", "sensitivity_v_s_m",
        "preamp_gain", "sample_rate_hz", "duration_s",
        "voltage_noise_v_sqrthz", "band_lo_hz", "band_hi_hz",
        "deconvolution_cutoff_hz",
    ],
}
_FLOAT_KEYS["geophone_fluctuation"] = _FLOAT_KEYS["fluctuation"]

_INT_KEYS = {
    "fluctuation": ["seed"],
    "geophone_fluctuation": ["seed"],
    "analysis": ["segment_length", "harmonic_n_max"],
    "geophone": ["segment_length"],
}
_BOOL_KEYS = {
    "fluctuation": ["pt_on"],
    "geophone_fluctuation": ["pt_on"],
}
_STR_KEYS = {
    "acquisition": ["probe"],
    "analysis": ["window"],
    "condensation": ["schedule_t_s_volume_cm3"],
}

_SECTIONS = sorted(set(_FLOAT_KEYS) | set(_INT_KEYS) | set(_BOOL_KEYS) | set(_STR_KEYS))


def _parse_scalar(section, key, raw, line_no):
    if key in _FLOAT_KEYS.get(section, ()):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"key '{key}' expects a number, got {raw!r}",
                              line=line_no) from None
    if key in _INT_KEYS.get(section, ()):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"key '{key}' expects an integer, got {raw!r}",
                              line=line_no) from None
    if key in _BOOL_KEYS.get(section, ()):
        low = raw.lower()
        if low in ("true", "on", "yes", "1"):
            return True
        if low in ("false", "off", "no", "0"):
            return False
        raise ConfigError(f"key '{key}' expects a boolean, got {raw!r}", line=line_no)
    if key in _STR_KEYS.get(section, ()):
        return raw
    return None


_HARMONIC_PREFIX = "pt_harmonic_"


def _parse_harmonic_key(key):
    """pt_harmonic_<n>_amplitude_m / pt_harmonic_<n>_phase_rad -> (n, field)."""
    if not key.startswith(_HARMONIC_PREFIX):
        return None
    rest = key[len(_HARMONIC_PREFIX):]
    for suffix, name in (("_amplitude_m", "amplitude"), ("_phase_rad", "phase")):
        if rest.endswith(suffix):
            idx = rest[: -len(suffix)]
            if idx.isdigit() and int(idx) >= 1:
                return int(idx), name
    return None


@dataclass
class ScenarioConfig:
    """Parsed scenario file: raw section maps plus typed builders."""

    sections: dict = field(default_factory=dict)
    harmonics: dict = field(default_factory=dict)  # section -> {n: {amplitude, phase}}
    source_sha256: str = ""
    path: str = ""

    def has(self, section: str) -> bool:
        return section in self.sections

    def _section(self, name: str) -> dict:
        if name not in self.sections:
            raise ConfigError(f"missing required [{name}] section")
        return self.sections[name]

    def _get(self, section: str, key: str, default=None):
        sec = self._section(section)
        if key in sec:
            return sec[key]
        if default is None:
            raise ConfigError(f"missing key '{key}' in [{section}]")
        return default

    # -- typed builders -----------------------------------------------------

    def geometry(self) -> ResonatorGeometry:
        return ResonatorGeometry(
            length=self._get("resonator", "length_m"),
            center_strip_width=self._get("resonator", "center_strip_width_m"),
            gap_width=self._get("resonator", "gap_width_m"),
            film_thickness=self._get("resonator", "film_thickness_m"),
            substrate_eps_r=self._get("resonator", "substrate_eps_r"),
            substrate_thickness=self._get("resonator", "substrate_thickness_m",
                                          math.inf),
            coupling_capacitance=self._get("resonator", "coupling_capacitance_f", 0.0),
        )

    def resonance_params(self) -> ResonanceParams:
        return ResonanceParams(
            f_r=self._get("resonator", "f_r_hz"),
            q_loaded=self._get("resonator", "q_loaded"),
            q_coupling=self._get("resonator", "q_coupling"),
            asymmetry_phi=self._get("resonator", "asymmetry_rad", 0.0),
            baseline_db=self._get("resonator", "baseline_db", 0.0),
        )

    def kinetic_model(self) -> KineticModel:
        return KineticModel(
            tc=self._get("resonator", "tc_k"),
            lk_over_lm=self._get("resonator", "lk_over_lm"),
            f_r0=self._get("resonator", "f_r0_hz"),
        )

    def helium_constants(self) -> HeliumConstants:
        defaults = HeliumConstants()
        return HeliumConstants(
            rho=self._get("helium", "density_kg_m3", defaults.rho),
            sigma_t=self._get("helium", "surface_tension_n_m", defaults.sigma_t),
            vdw_gamma=self._get("helium", "vdw_gamma_j_m", defaults.vdw_gamma),
            eps_helium=self._get("helium", "eps_helium", defaults.eps_helium),
            g=self._get("helium", "g_m_s2", defaults.g),
        )

    def shift_model(self) -> ShiftModel:
        defaults = ShiftModel()
        return ShiftModel(
            dfr_dh=self._get("helium", "dfr_dh_hz_m", defaults.dfr_dh),
            channel_full_shift=self._get("helium", "channel_full_shift_hz",
                                         defaults.channel_full_shift),
            bulk_shift=self._get("helium", "bulk_shift_hz", defaults.bulk_shift),
            film_region_shift=self._get("helium", "film_region_shift_hz", 0.0),
        )

    def condensation_scenario(self) -> CondensationScenario:
        raw = self._get("condensation", "schedule_t_s_volume_cm3", "")
        schedule = []
        if raw.strip():
            for part in raw.split(","):
                bits = part.strip().split(":")
                if len(bits) != 2:
                    raise ConfigError(
                        f"schedule entry {part.strip()!r} is not 't:volume'")
                try:
                    schedule.append((float(bits[0]), float(bits[1])))
                except ValueError:
                    raise ConfigError(
                        f"schedule entry {part.strip()!r} is not numeric") from None
        return CondensationScenario(
            geometry=self.geometry(),
            constants=self.helium_constants(),
            shift_model=self.shift_model(),
            schedule=tuple(schedule),
            dead_volume=self._get("condensation", "dead_volume_cm3"),
            film_volume=self._get("condensation", "film_volume_cm3"),
            bulk_volume=self._get("condensation", "bulk_volume_cm3"),
            cell_depth=self._get("condensation", "cell_depth_m"),
            base_frequency=self._get("condensation", "base_frequency_hz"),
            transient_amplitude=self._get("condensation", "transient_amplitude_hz",
                                          -2.0e6),
            transient_tau=self._get("condensation", "transient_tau_s", 240.0),
            recovery_offset=self._get("condensation", "recovery_offset_hz", 0.0),
        )

    def fluctuation(self, section: str = "fluctuation", *,
                    pt_on: bool | None = None,
                    seed: int | None = None) -> FluctuationScenario:
        harm = self.harmonics.get(section, {})
        harmonics = tuple(
            (n, spec["amplitude"], spec.get("phase", 0.0))
            for n, spec in sorted(harm.items()))
        return FluctuationScenario(
            pt_fundamental=self._get(section, "f_pt_hz"),
            pt_harmonics=harmonics,
            building_band=(self._get(section, "building_band_lo_hz", 30.0),
                           self._get(section, "building_band_hi_hz", 60.0),
                           self._get(section, "building_band_rms_m", 0.0)),
            line_noise=(self._get(section, "line_frequency_hz", 60.0),
                        self._get(section, "line_amplitude_m", 0.0)),
            white_floor=self._get(section, "white_floor_m_sqrthz", 0.0),
            pt_on=self._get(section, "pt_on", True) if pt_on is None else pt_on,
            seed=self._get(section, "seed", 0) if seed is None else seed,
        )

    def geophone_model(self) -> GeophoneModel:
        defaults = GeophoneModel()
        return GeophoneModel(
            natural_frequency=self._get("geophone", "natural_frequency_hz",
                                        defaults.natural_frequency),
            damping_ratio=self._get("geophone", "damping_ratio",
                                    defaults.damping_ratio),
            sensitivity=self._get("geophone", "sensitivity_v_s_m",
                                  defaults.sensitivity),
            preamp_gain=self._get("geophone", "preamp_gain", defaults.preamp_gain),
        )


def parse_config(text: str, path: str = "<string>") -> ScenarioConfig:
    """Parse scenario-file text; raises ConfigError with line diagnostics."""
    cfg = ScenarioConfig(path=path,
                         source_sha256=hashlib.sha256(text.encode()).hexdigest())
    section = None
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("unterminated section header", line=line_no,
                                  column=len(raw_line))
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(
                    f"unknown section [{section}]; expected one of {_SECTIONS}",
                    line=line_no)
            cfg.sections.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=line_no,
                              column=raw_line.find(line) + 1)
        if section is None:
            raise ConfigError("key outside of any [section]", line=line_no)
        key, _, raw_value = line.partition("=")
        key = key.strip()
        value = raw_value.strip()
        if not value:
            raise ConfigError(f"key '{key}' has no value", line=line_no)

        harmonic = _parse_harmonic_key(key) if section in (
            "fluctuation", "geophone_fluctuation") else None
        if harmonic is not None:
            n, fld = harmonic
            try:
                number = float(value)
            except ValueError:
                raise ConfigError(f"key '{key}' expects a number, got {value!r}",
                                  line=line_no) from None
            cfg.harmonics.setdefault(section, {}).setdefault(n, {})[fld] = number
            continue

        parsed = _parse_scalar(section, key, value, line_no)
        if parsed is None:
            raise ConfigError(f"unknown key '{key}' in [{section}]", line=line_no)
        if key in cfg.sections[section]:
            raise ConfigError(f"duplicate key '{key}' in [{section}]", line=line_no)
        cfg.sections[section][key] = parsed

    for section, harm in cfg.harmonics.items():
        for n, spec in harm.items():
            if "amplitude" not in spec:
                raise ConfigError(
                    f"harmonic {n} in [{section}] has a phase but no "
                    f"pt_harmonic_{n}_amplitude_m")
    return cfg


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from None
    return parse_config(text, path=str(path))


# ---------------------------------------------------------------------------
# trace files

def write_trace(path, trace: TimeTrace, extra_meta: dict | None = None) -> None:
    """Write a trace CSV with a metadata header; byte-stable for fixed input."""
    meta = {"unit": trace.unit,
            "sample_rate_hz": repr(float(trace.sample_rate)),
            "n_samples": str(trace.n_samples)}
    for key, val in {**trace.meta, **(extra_meta or {})}.items():
        meta.setdefault(str(key), repr(float(val)) if isinstance(val, float) else str(val))
    if trace.flags:
        meta["flags"] = ",".join(trace.flags)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# helisurf-trace v1\n")
        for key, val in meta.items():
            fh.write(f"# {key} = {val}\n")
        fh.write("time_s,value\n")
        dt = 1.0 / trace.sample_rate
        for i, v in enumerate(trace.values):
            fh.write(f"{repr(i * dt)},{repr(float(v))}\n")


def _read_header(lines):
    meta = {}
    body_start = 0
    for i, line in enumerate(lines):
        if line.startswith("#"):
            content = line[1:].strip()
            if "=" in content:
                key, _, val = content.partition("=")
                meta[key.strip()] = val.strip()
            body_start = i + 1
        else:
            break
    return meta, body_start


def _read_lines(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise UserInputError(f"cannot read {path}: {exc}") from None


def read_trace(path) -> TimeTrace:
    """Read a trace CSV; validates uniform time grid and declared length."""
    lines = _read_lines(path)
    meta, start = _read_header(lines)
    if "unit" not in meta or "sample_rate_hz" not in meta:
        raise UserInputError(f"{path}: missing unit/sample_rate_hz header")
    unit = meta.pop("unit")
    rate = float(meta.pop("sample_rate_hz"))
    declared = int(meta.pop("n_samples", -1))
    flags = tuple(f for f in meta.pop("flags", "").split(",") if f)
    if start < len(lines) and lines[start].startswith("time_s"):
        start += 1
    times, values = [], []
    for line in lines[start:]:
        if not line.strip():
            continue
        t_str, _, v_str = line.partition(",")
        times.append(float(t_str))
        values.append(float(v_str))
    if declared >= 0 and declared != len(values):
        raise UserInputError(
            f"{path}: header declares {declared} samples, file has {len(values)}")
    t = np.asarray(times)
    if len(t) >= 2:
        steps = np.diff(t)
        if np.any(steps <= 0) or not np.allclose(steps, 1.0 / rate, rtol=1e-9, atol=0):
            raise UserInputError(f"{path}: time column is not uniform at the "
                                 f"declared sample rate")
    return TimeTrace(np.asarray(values), rate, unit, flags=flags, meta=meta)


# ---------------------------------------------------------------------------
# spectra

def write_spectrum(path, spectrum: Spectrum) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# helisurf-spectrum v1\n")
        fh.write(f"# unit = {spectrum.unit}\n")
        fh.write(f"# window = {spectrum.window}\n")
        fh.write(f"# segment_length = {spectrum.segment_length}\n")
        fh.write(f"# overlap_fraction = {repr(spectrum.overlap_fraction)}\n")
        fh.write(f"# n_segments_averaged = {spectrum.n_segments_averaged}\n")
        fh.write("frequency_hz,asd\n")
        for f, a in zip(spectrum.frequencies, spectrum.asd):
            fh.write(f"{repr(float(f))},{repr(float(a))}\n")


def read_spectrum(path) -> Spectrum:
    lines = _read_lines(path)
    meta, start = _read_header(lines)
    if start < len(lines) and lines[start].startswith("frequency_hz"):
        start += 1
    freqs, asd = [], []
    for line in lines[start:]:
        if not line.strip():
            continue
        f_str, _, a_str = line.partition(",")
        freqs.append(float(f_str))
        asd.append(float(a_str))
    return Spectrum(np.asarray(freqs), np.asarray(asd), meta.get("unit", ""),
                    meta.get("window", "hann"), int(meta.get("segment_length", 0)),
                    float(meta.get("overlap_fraction", 0.0)),
                    int(meta.get("n_segments_averaged", 0)))


# ---------------------------------------------------------------------------
# reports

def report_to_dict(report: AnalysisReport) -> dict:
    return {
        "detected_harmonics": [
            {"n": h.n, "frequency_hz": h.frequency, "asd_peak": h.asd_peak}
            for h in report.detected_harmonics],
        "band_hz": [report.band[0], report.band[1]],
        "delta_h_rms_m": report.delta_h_rms,
        "sensitivity_hz_per_m": report.sensitivity_used,
        "probe_slope_db_per_hz": report.probe_slope,
        "rms_reduction_pt_off": report.rms_reduction_pt_off,
        "extra": report.extra,
    }


def report_from_dict(doc: dict) -> AnalysisReport:
    return AnalysisReport(
        detected_harmonics=tuple(
            Harmonic(h["n"], h["frequency_hz"], h["asd_peak"])
            for h in doc["detected_harmonics"]),
        band=(doc["band_hz"][0], doc["band_hz"][1]),
        delta_h_rms=doc["delta_h_rms_m"],
        sensitivity_used=doc["sensitivity_hz_per_m"],
        probe_slope=doc.get("probe_slope_db_per_hz"),
        rms_reduction_pt_off=doc.get("rms_reduction_pt_off"),
        extra=doc.get("extra", {}),
    )


def write_report(path, report: AnalysisReport, *, config_sha256: str = "",
                 seed=None, comparison: PtComparison | None = None,
                 off_report: AnalysisReport | None = None) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "analysis",
        "config_sha256": config_sha256,
        "seed": seed,
    }
    doc.update(report_to_dict(report))
    if comparison is not None:
        doc["kind"] = "comparison"
        doc["off"] = report_to_dict(comparison.off)
        doc["reduction"] = comparison.reduction
        doc["harmonics_on_only"] = list(comparison.harmonics_on_only)
    elif off_report is not None:
        doc["off"] = report_to_dict(off_report)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_report(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UserInputError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UserInputError(f"{path}: invalid JSON ({exc})") from None


def write_fit_result(path, result: FitResult, mode: str) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "fit",
        "mode": mode,
        "parameters": result.parameters,
        "uncertainties": result.uncertainties,
        "residual_rms": result.residual_rms,
        "n_iterations": result.n_iterations,
        "converged": result.converged,
        "message": result.message,
        "warnings": list(result.warnings),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

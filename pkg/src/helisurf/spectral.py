"""Noise-spectroscopy analysis chain.

Welch amplitude-spectral-density estimation, slope calibration from the dB
spectrum to frequency noise, band-limited RMS displacement, pulse-tube
harmonic detection, and PT on/off comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .errors import (CalibrationError, InsufficientDataError, InvalidBandError,
                     InvalidComparisonError, OutOfDomainError)
from .synthesis import TimeTrace

_WINDOWS = ("hann", "hamming", "blackman", "boxcar")


@dataclass(frozen=True)
class Spectrum:
    """One-sided amplitude spectral density on a uniform frequency grid.

    ``asd`` has units of ``unit``/sqrt(Hz); the grid starts at 0 with step
    sample_rate / segment_length.
    """

    frequencies: np.ndarray
    asd: np.ndarray
    unit: str
    window: str
    segment_length: int
    overlap_fraction: float
    n_segments_averaged: int

    def __post_init__(self):
        object.__setattr__(self, "frequencies", np.asarray(self.frequencies, dtype=float))
        object.__setattr__(self, "asd", np.asarray(self.asd, dtype=float))
        if len(self.frequencies) != len(self.asd):
            raise OutOfDomainError("frequency and asd grids must match")
        if self.frequencies[0] != 0.0:
            raise OutOfDomainError("frequency grid must start at 0")
        if np.any(self.asd < 0):
            raise OutOfDomainError("asd must be >= 0")
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise OutOfDomainError("overlap_fraction must lie in [0, 1)")

    @property
    def df(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])


@dataclass(frozen=True)
class Harmonic:
    n: int
    frequency: float
    asd_peak: float


@dataclass(frozen=True)
class AnalysisReport:
    """Result of a full trace analysis.

    ``delta_h_rms`` is the band-limited RMS surface displacement [m];
    ``sensitivity_used`` the |df_r/dh| (or 1.0 for direct-displacement
    paths) that converted frequency noise to displacement.
    """

    detected_harmonics: tuple
    band: tuple
    delta_h_rms: float
    sensitivity_used: float
    probe_slope: float | None = None
    rms_reduction_pt_off: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        f1, f2 = self.band
        if not f1 < f2:
            raise InvalidBandError("band requires f1 < f2")
        if self.delta_h_rms < 0:
            raise OutOfDomainError("delta_h_rms must be >= 0")


@dataclass(frozen=True)
class PtComparison:
    """PT on/off comparison record."""

    on: AnalysisReport
    off: AnalysisReport
    reduction: float
    harmonics_on_only: tuple


def welch_asd(trace: TimeTrace, segment_length: int = 2048,
              overlap: float = 0.5, window: str = "hann") -> Spectrum:
    """Welch averaged-periodogram amplitude spectral density.

    One-sided, density-scaled so that sum(asd**2) * df reproduces the trace
    variance (Parseval, within windowing tolerance). Per-segment means are
    removed. ``segment_length`` must be a power of two and no longer than
    the trace.
    """
    n = trace.n_samples
    if segment_length < 2 or segment_length & (segment_length - 1):
        raise OutOfDomainError("segment_length must be a power of two >= 2")
    if segment_length > n:
        raise InsufficientDataError(
            f"trace of {n} samples is shorter than one segment ({segment_length})")
    if not 0.0 <= overlap < 1.0:
        raise OutOfDomainError("overlap must lie in [0, 1)")
    if window not in _WINDOWS:
        raise OutOfDomainError(f"window must be one of {_WINDOWS}")

    noverlap = int(overlap * segment_length)
    freqs, psd = sps.welch(trace.values, fs=trace.sample_rate, window=window,
                           nperseg=segment_length, noverlap=noverlap,
                           detrend="constant", scaling="density")
    step = segment_length - noverlap
    n_segments = (n - segment_length) // step + 1
    return Spectrum(freqs, np.sqrt(psd), trace.unit, window, segment_length,
                    overlap, n_segments)


def calibrate_frequency_noise(s_db: Spectrum, slope: float) -> Spectrum:
    """Convert a dB-magnitude noise spectrum to frequency noise [Hz/sqrt(Hz)].

    Pointwise S_f = S_dB / |slope| with slope in dB/Hz; a zero slope
    (probe at a magnitude extremum) cannot be calibrated.
    """
    if slope == 0.0 or not np.isfinite(slope):
        raise CalibrationError("probe slope is zero or non-finite; cannot calibrate")
    return Spectrum(s_db.frequencies, s_db.asd / abs(slope), "Hz",
                    s_db.window, s_db.segment_length, s_db.overlap_fraction,
                    s_db.n_segments_averaged)


def _band_weights(freqs: np.ndarray, f1: float, f2: float) -> np.ndarray:
    """Integration weights: bins in [f1, f2], half-weight edges, DC excluded."""
    inband = (freqs >= f1) & (freqs <= f2) & (freqs > 0.0)
    idx = np.flatnonzero(inband)
    if len(idx) == 0:
        raise InvalidBandError(f"band [{f1}, {f2}] Hz contains no spectral bins")
    w = np.zeros(len(freqs))
    w[idx] = 1.0
    w[idx[0]] = 0.5
    w[idx[-1]] = 0.5
    return w


def band_rms(spectrum: Spectrum, f1: float, f2: float) -> float:
    """RMS of the underlying signal over [f1, f2]: sqrt(sum asd^2 df)."""
    if not f1 < f2:
        raise InvalidBandError("band requires f1 < f2")
    if f1 > spectrum.frequencies[-1]:
        raise InvalidBandError("band lies above the spectrum range")
    w = _band_weights(spectrum.frequencies, f1, f2)
    return float(np.sqrt(np.sum(w * spectrum.asd**2) * spectrum.df))


def rms_displacement(s_f: Spectrum, sensitivity: float, f1: float, f2: float) -> float:
    """Band-limited RMS displacement [m] from a frequency-noise spectrum.

    delta_h = (1/sensitivity) * sqrt(integral of S_f^2 over [f1, f2]) with
    trapezoidal band edges; sensitivity = |df_r/dh| [Hz/m] > 0.
    """
    if sensitivity <= 0:
        raise OutOfDomainError("sensitivity must be > 0")
    return band_rms(s_f, f1, f2) / sensitivity


def detect_harmonics(spectrum: Spectrum, f_base: float, n_max: int = 20,
                     threshold_factor: float = 5.0, *,
                     exclusion_bins: int = 3,
                     neighborhood_bins: int = 25) -> list[Harmonic]:
    """Detect a harmonic comb at n * f_base, n = 1..n_max.

    A harmonic is reported when the local maximum within one bin of the
    nominal harmonic bin exceeds ``threshold_factor`` times the median ASD
    of the surrounding neighborhood (``+-neighborhood_bins``, with
    ``+-exclusion_bins`` around every comb multiple excluded so the comb
    cannot inflate its own detection floor; if the comb is too dense to
    leave at least four clean bins, only the candidate peak is excluded and
    the median's robustness carries the rest). The reported frequency is
    the grid bin nearest n * f_base, so it always lies within half a bin of
    the nominal harmonic.
    """
    df = spectrum.df
    if f_base <= df:
        raise OutOfDomainError(
            f"harmonic spacing {f_base} Hz is not resolved at {df} Hz resolution")
    asd = spectrum.asd
    n_bins = len(asd)
    spacing = f_base / df
    # a dense comb cannot afford the full exclusion width around every
    # multiple, or no clean bins remain; shrink it to fit the spacing
    comb_excl = min(exclusion_bins, max(1, int((spacing - 1.0) // 2)))

    def near_comb(m: int) -> bool:
        k = round(m / spacing)
        return k >= 1 and abs(m - k * spacing) <= comb_excl

    found = []
    for n in range(1, n_max + 1):
        target = n * f_base
        j = int(round(target / df))
        if j + 1 >= n_bins or j < 1:
            break
        window = range(max(j - 1, 1), min(j + 1, n_bins - 2) + 1)
        peak_j, peak = -1, -np.inf
        for m in window:
            if asd[m] >= asd[m - 1] and asd[m] >= asd[m + 1] and asd[m] > peak:
                peak_j, peak = m, asd[m]
        if peak_j < 0:
            continue
        lo = max(peak_j - neighborhood_bins, 1)
        hi = min(peak_j + neighborhood_bins, n_bins - 1)
        clean = [asd[m] for m in range(lo, hi + 1) if not near_comb(m)]
        if len(clean) < 4:
            clean = [asd[m] for m in range(lo, hi + 1)
                     if abs(m - peak_j) > exclusion_bins]
        if not clean:
            continue
        floor = float(np.median(clean))
        if peak > threshold_factor * floor and peak > 0.0:
            found.append(Harmonic(n, float(spectrum.frequencies[j]), float(peak)))
    return found


def compare_pt_on_off(on: AnalysisReport, off: AnalysisReport) -> PtComparison:
    """Fractional RMS reduction with the PT off, and the harmonics that vanish."""
    if on.band != off.band:
        raise InvalidComparisonError(
            f"reports cover different bands: {on.band} vs {off.band}")
    if on.delta_h_rms <= 0:
        raise InvalidComparisonError("PT-on report has zero RMS; nothing to compare")
    reduction = 1.0 - off.delta_h_rms / on.delta_h_rms
    off_ns = {h.n for h in off.detected_harmonics}
    lost = tuple(h.n for h in on.detected_harmonics if h.n not in off_ns)
    return PtComparison(on, off, reduction, lost)


def analyze_db_trace(trace: TimeTrace, slope: float, sensitivity: float,
                     band: tuple, *, f_pt: float | None = None,
                     segment_length: int = 2048, overlap: float = 0.5,
                     window: str = "hann", n_max: int = 20,
                     threshold_factor: float = 5.0) -> tuple[AnalysisReport, Spectrum, Spectrum]:
    """Full resonator-path analysis of a dB trace.

    Welch -> slope calibration -> band RMS -> harmonic detection. Returns
    (report, dB spectrum, frequency-noise spectrum).
    """
    s_db = welch_asd(trace, segment_length, overlap, window)
    s_f = calibrate_frequency_noise(s_db, slope)
    f1, f2 = band
    rms = rms_displacement(s_f, sensitivity, f1, f2)
    harmonics = ()
    if f_pt is not None:
        harmonics = tuple(detect_harmonics(s_f, f_pt, n_max, threshold_factor))
    report = AnalysisReport(harmonics, (f1, f2), rms, sensitivity,
                            probe_slope=slope,
                            extra={"n_segments_averaged": s_db.n_segments_averaged})
    return report, s_db, s_f

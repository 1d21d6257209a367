"""Seeded synthesis of surface-displacement, reflection, and geophone traces.

Every generator is deterministic for a fixed (scenario, seed, rate,
duration): each stochastic component draws from its own seeded stream, so
toggling one component never perturbs the others.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidScenarioError, OutOfDomainError
from .helium import ShiftModel
from .resonator import ResonanceParams

# stream tags appended to the scenario seed, one per stochastic component
_STREAM_BAND = 0
_STREAM_LINE_PHASE = 1
_STREAM_FLOOR = 2
_STREAM_DB_NOISE = 3
_STREAM_VOLT_NOISE = 4


@dataclass(frozen=True)
class TimeTrace:
    """Uniformly sampled real series with unit metadata.

    ``unit`` is one of "m" (meters), "dB", "V" (volts), "m/s".
    """

    values: np.ndarray
    sample_rate: float
    unit: str
    flags: tuple = ()
    meta: dict = field(default_factory=dict)

    _UNITS = ("m", "dB", "V", "m/s")

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.sample_rate <= 0:
            raise InvalidScenarioError("sample_rate must be > 0")
        if self.unit not in self._UNITS:
            raise InvalidScenarioError(f"unit must be one of {self._UNITS}")

    @property
    def n_samples(self) -> int:
        return len(self.values)

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sample_rate


@dataclass(frozen=True)
class FluctuationScenario:
    """Parametric spectral content of the helium-surface (or plate) motion.

    Attributes
    ----------
    pt_fundamental : float
        Pulse-tube fundamental frequency [Hz].
    pt_harmonics : tuple of (n, amplitude, phase)
        Harmonic comb at n * pt_fundamental; amplitude in meters, phase in
        radians. Harmonic indices must be distinct and >= 1.
    building_band : tuple (f_lo, f_hi, band_rms)
        Band-limited Gaussian noise, flat in [f_lo, f_hi], with the given
        expected in-band RMS [m].
    line_noise : tuple (frequency, amplitude)
        Single mains-type line [Hz, m]; phase drawn from the seed.
    white_floor : float
        White displacement floor amplitude spectral density [m/sqrt(Hz)].
    pt_on : bool
        Whether the pulse-tube comb is included.
    seed : int
        Seed for all stochastic components.
    """

    pt_fundamental: float
    pt_harmonics: tuple = ()
    building_band: tuple = (30.0, 60.0, 0.0)
    line_noise: tuple = (60.0, 0.0)
    white_floor: float = 0.0
    pt_on: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.pt_fundamental <= 0:
            raise InvalidScenarioError("pt_fundamental must be > 0")
        indices = [n for n, _, _ in self.pt_harmonics]
        if len(set(indices)) != len(indices) or any(n < 1 for n in indices):
            raise InvalidScenarioError("harmonic indices must be distinct and >= 1")
        if any(a < 0 for _, a, _ in self.pt_harmonics):
            raise InvalidScenarioError("harmonic amplitudes must be >= 0")
        f_lo, f_hi, band_rms = self.building_band
        if not f_lo < f_hi:
            raise InvalidScenarioError("building_band requires f_lo < f_hi")
        if band_rms < 0 or self.white_floor < 0 or self.line_noise[1] < 0:
            raise InvalidScenarioError("amplitudes must be >= 0")

    def highest_frequency(self) -> float:
        """Largest frequency carrying configured (nonzero) power [Hz]."""
        freqs = [0.0]
        for n, a, _ in self.pt_harmonics:
            if a > 0:
                freqs.append(n * self.pt_fundamental)
        if self.building_band[2] > 0:
            freqs.append(self.building_band[1])
        if self.line_noise[1] > 0:
            freqs.append(self.line_noise[0])
        return max(freqs)


@dataclass(frozen=True)
class GeophoneModel:
    """Spring-mass electromagnetic velocity sensor plus preamplifier.

    Voltage response to ground velocity v:
    V(w) = preamp_gain * sensitivity * (-w^2) / (w0^2 - w^2 + 2i*zeta*w0*w) * v(w),
    flat at preamp_gain * sensitivity well above the natural frequency.
    """

    natural_frequency: float = 4.5   # [Hz]
    damping_ratio: float = 0.6
    sensitivity: float = 28.8        # [V*s/m]
    preamp_gain: float = 100.0

    def __post_init__(self):
        if self.natural_frequency <= 0:
            raise OutOfDomainError("natural_frequency must be > 0")
        if not 0.0 < self.damping_ratio < 2.0:
            raise OutOfDomainError("damping_ratio must lie in (0, 2)")
        if self.sensitivity <= 0:
            raise OutOfDomainError("sensitivity must be > 0")

    def velocity_response(self, f):
        """Complex transfer V/v at frequency f [V per m/s], preamp included."""
        w = 2.0 * np.pi * np.asarray(f, dtype=float)
        w0 = 2.0 * np.pi * self.natural_frequency
        denom = w0 * w0 - w * w + 2j * self.damping_ratio * w0 * w
        return self.preamp_gain * self.sensitivity * (-(w * w)) / denom


def _n_samples(sample_rate: float, duration: float) -> int:
    n = int(round(sample_rate * duration))
    if n < 2:
        raise InvalidScenarioError("trace must contain at least 2 samples")
    return n


def synth_displacement(scn: FluctuationScenario, sample_rate: float,
                       duration: float) -> TimeTrace:
    """Synthesize the surface displacement h(t) [m] for a scenario.

    Sum of the PT comb (if on), band-limited Gaussian building noise, one
    mains line with seeded phase, and a white Gaussian floor. Bit-identical
    for identical (scenario, sample_rate, duration).
    """
    f_max = scn.highest_frequency()
    if sample_rate <= 2.0 * f_max:
        raise InvalidScenarioError(
            f"sample rate {sample_rate} Sa/s violates the Nyquist guard for "
            f"scenario content up to {f_max} Hz")
    n = _n_samples(sample_rate, duration)
    t = np.arange(n) / sample_rate
    out = np.zeros(n)

    if scn.pt_on:
        for idx, amp, phase in scn.pt_harmonics:
            out += amp * np.sin(2.0 * np.pi * idx * scn.pt_fundamental * t + phase)

    f_lo, f_hi, band_rms = scn.building_band
    if band_rms > 0:
        rng = np.random.default_rng((scn.seed, _STREAM_BAND))
        white = rng.standard_normal(n)
        spec = np.fft.rfft(white)
        freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
        mask = (freqs >= f_lo) & (freqs <= f_hi)
        spec[~mask] = 0.0
        # fraction of white-noise power the brick-wall filter keeps, counting
        # conjugate bins; normalizes the expected in-band variance
        weights = np.ones(len(freqs))
        weights[1:] = 2.0
        if n % 2 == 0:
            weights[-1] = 1.0
        kept = float(np.sum(weights[mask])) / n
        if kept <= 0:
            raise InvalidScenarioError("building band covers no FFT bins")
        shaped = np.fft.irfft(spec, n)
        out += band_rms / np.sqrt(kept) * shaped

    f_line, a_line = scn.line_noise
    if a_line > 0:
        rng = np.random.default_rng((scn.seed, _STREAM_LINE_PHASE))
        phase = rng.uniform(0.0, 2.0 * np.pi)
        out += a_line * np.sin(2.0 * np.pi * f_line * t + phase)

    if scn.white_floor > 0:
        rng = np.random.default_rng((scn.seed, _STREAM_FLOOR))
        sigma = scn.white_floor * np.sqrt(sample_rate / 2.0)
        out += sigma * rng.standard_normal(n)

    return TimeTrace(out, sample_rate, "m", meta={"seed": scn.seed})


def displacement_to_s11_trace(h: TimeTrace, params: ResonanceParams,
                              model: ShiftModel, f0: float, *,
                              db_noise_sigma: float = 0.0,
                              noise_seed: int | None = None,
                              small_signal_fraction: float = 0.1) -> TimeTrace:
    """Fixed-frequency reflection magnitude trace [dB] from a displacement trace.

    Per sample, the resonance moves to f_r + dfr_dh * h(t) and the probe at
    f0 reads 20*log10|S11(f0)| + baseline. Optional additive Gaussian
    measurement noise in dB, with its own seed. If the peak frequency
    excursion exceeds ``small_signal_fraction`` of the linewidth the trace
    is flagged "small-signal-violation" but still produced.
    """
    if h.unit != "m":
        raise InvalidScenarioError("displacement trace must be in meters")
    excursion = abs(model.dfr_dh) * float(np.max(np.abs(h.values), initial=0.0))
    flags = ()
    if excursion > small_signal_fraction * params.linewidth:
        flags = ("small-signal-violation",)

    fr_t = params.f_r + model.dfr_dh * h.values
    x = (f0 - fr_t) / fr_t
    amp = (params.q_loaded / params.q_coupling) * np.exp(1j * params.asymmetry_phi)
    refl = 1.0 - amp / (1.0 + 2j * params.q_loaded * x)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(np.abs(refl)) + params.baseline_db

    if db_noise_sigma > 0:
        rng = np.random.default_rng(
            noise_seed if noise_seed is not None else (h.meta.get("seed", 0), _STREAM_DB_NOISE))
        db = db + db_noise_sigma * rng.standard_normal(len(db))

    meta = dict(h.meta)
    meta.update(probe_f0=f0, db_noise_sigma=db_noise_sigma)
    return TimeTrace(db, h.sample_rate, "dB", flags=flags, meta=meta)


def synth_geophone(ground_velocity: TimeTrace, gm: GeophoneModel, *,
                   voltage_noise_asd: float = 0.0,
                   noise_seed: int | None = None) -> TimeTrace:
    """Geophone + preamp voltage trace [V] from a ground-velocity trace.

    Applies the second-order velocity response by frequency-domain
    filtering; optional white voltage noise given as an ASD [V/sqrt(Hz)].
    """
    if ground_velocity.unit != "m/s":
        raise InvalidScenarioError("geophone input must be a velocity trace (m/s)")
    v = ground_velocity.values
    n = len(v)
    freqs = np.fft.rfftfreq(n, 1.0 / ground_velocity.sample_rate)
    spec = np.fft.rfft(v) * gm.velocity_response(freqs)
    out = np.fft.irfft(spec, n)

    if voltage_noise_asd > 0:
        rng = np.random.default_rng(
            noise_seed if noise_seed is not None
            else (ground_velocity.meta.get("seed", 0), _STREAM_VOLT_NOISE))
        sigma = voltage_noise_asd * np.sqrt(ground_velocity.sample_rate / 2.0)
        out = out + sigma * rng.standard_normal(n)

    return TimeTrace(out, ground_velocity.sample_rate, "V",
                     meta=dict(ground_velocity.meta))


def trace_derivative(trace: TimeTrace, unit: str) -> TimeTrace:
    """Spectral time-derivative of a trace (exact for band-limited content)."""
    n = trace.n_samples
    freqs = np.fft.rfftfreq(n, 1.0 / trace.sample_rate)
    spec = np.fft.rfft(trace.values) * (2j * np.pi * freqs)
    return TimeTrace(np.fft.irfft(spec, n), trace.sample_rate, unit,
                     meta=dict(trace.meta))

import dataclasses

import numpy as np
import pytest

from helisurf import (FluctuationScenario, GeophoneModel, InvalidScenarioError,
                      OutOfDomainError, ResonanceParams, ShiftModel, TimeTrace,
                      displacement_to_s11_trace, s11_db, synth_displacement,
                      synth_geophone, trace_derivative)

PARAMS = ResonanceParams(f_r=1.315e9, q_loaded=1700.0, q_coupling=3400.0)
SHIFT = ShiftModel()


def scenario(**overrides):
    base = dict(pt_fundamental=1.4,
                pt_harmonics=((1, 2e-10, 0.0), (2, 1e-10, 1.0), (5, 5e-11, 2.0)),
                building_band=(30.0, 60.0, 3e-10),
                line_noise=(60.0, 2e-10),
                white_floor=1e-11,
                pt_on=True, seed=123)
    base.update(overrides)
    return FluctuationScenario(**base)


class TestSynthDisplacement:
    def test_all_zero_amplitudes(self):
        scn = scenario(pt_harmonics=(), building_band=(30.0, 60.0, 0.0),
                       line_noise=(60.0, 0.0), white_floor=0.0)
        trace = synth_displacement(scn, 400.0, 40.0)
        assert np.all(trace.values == 0.0)

    def test_single_line_rms(self):
        scn = scenario(pt_harmonics=((1, 1e-9, 0.4),),
                       building_band=(30.0, 60.0, 0.0),
                       line_noise=(60.0, 0.0), white_floor=0.0)
        trace = synth_displacement(scn, 400.0, 40.0)  # 56 full periods
        assert np.sqrt(np.mean(trace.values**2)) == pytest.approx(
            1e-9 / np.sqrt(2), rel=1e-3)

    def test_deterministic(self):
        a = synth_displacement(scenario(), 400.0, 40.0)
        b = synth_displacement(scenario(), 400.0, 40.0)
        assert np.array_equal(a.values, b.values)

    def test_seed_changes_noise(self):
        a = synth_displacement(scenario(), 400.0, 40.0)
        b = synth_displacement(scenario(seed=124), 400.0, 40.0)
        assert not np.array_equal(a.values, b.values)

    def test_pt_off_zeroes_exactly_the_comb(self):
        on = synth_displacement(scenario(pt_on=True), 400.0, 40.0)
        off = synth_displacement(scenario(pt_on=False), 400.0, 40.0)
        # stochastic terms are bit-identical
        no_comb = synth_displacement(scenario(pt_harmonics=()), 400.0, 40.0)
        assert np.array_equal(off.values, no_comb.values)
        comb_only = synth_displacement(
            scenario(building_band=(30.0, 60.0, 0.0), line_noise=(60.0, 0.0),
                     white_floor=0.0), 400.0, 40.0)
        assert np.allclose(on.values - off.values, comb_only.values,
                           atol=1e-24, rtol=0)

    def test_variance_additivity(self):
        # distinct-frequency sinusoids over integer periods are orthogonal;
        # Gaussian components add in expectation, so average over seeds
        ratios = []
        for seed in range(25):
            scn = scenario(seed=seed)
            total = np.var(synth_displacement(scn, 400.0, 40.0).values)
            parts = [
                scenario(seed=seed, building_band=(30.0, 60.0, 0.0),
                         line_noise=(60.0, 0.0), white_floor=0.0),
                scenario(seed=seed, pt_harmonics=(),
                         line_noise=(60.0, 0.0), white_floor=0.0),
                scenario(seed=seed, pt_harmonics=(),
                         building_band=(30.0, 60.0, 0.0), white_floor=0.0),
                scenario(seed=seed, pt_harmonics=(),
                         building_band=(30.0, 60.0, 0.0), line_noise=(60.0, 0.0)),
            ]
            summed = sum(np.var(synth_displacement(p, 400.0, 40.0).values)
                         for p in parts)
            ratios.append(total / summed)
        assert np.mean(ratios) == pytest.approx(1.0, abs=0.02)

    def test_building_band_is_band_limited(self):
        scn = scenario(pt_harmonics=(), line_noise=(60.0, 0.0), white_floor=0.0)
        trace = synth_displacement(scn, 400.0, 40.0)
        spec = np.abs(np.fft.rfft(trace.values))
        freqs = np.fft.rfftfreq(trace.n_samples, 1 / 400.0)
        out_of_band = (freqs < 30.0) | (freqs > 60.0)
        # brick-wall shaped; only FFT round-trip roundoff leaks out of band
        assert np.max(spec[out_of_band]) < 1e-9 * np.max(spec)

    def test_building_band_rms_calibration(self):
        target = 3e-10
        rms2 = [np.var(synth_displacement(
            scenario(pt_harmonics=(), line_noise=(60.0, 0.0), white_floor=0.0,
                     seed=s), 400.0, 40.0).values) for s in range(40)]
        assert np.sqrt(np.mean(rms2)) == pytest.approx(target, rel=0.02)

    def test_nyquist_guard(self):
        with pytest.raises(InvalidScenarioError, match="Nyquist"):
            synth_displacement(scenario(), 100.0, 10.0)  # 60 Hz line needs >120
        # zero-amplitude high-frequency content does not trip the guard
        scn = scenario(line_noise=(60.0, 0.0), building_band=(30.0, 45.0, 1e-10))
        synth_displacement(scn, 100.0, 10.0)

    def test_duplicate_harmonic_rejected(self):
        with pytest.raises(InvalidScenarioError):
            scenario(pt_harmonics=((1, 1e-10, 0.0), (1, 2e-10, 0.0)))


class TestDisplacementToS11:
    def test_zero_displacement_constant_trace(self):
        h = TimeTrace(np.zeros(4000), 400.0, "m")
        f0 = PARAMS.f_r - 1.5e5
        trace = displacement_to_s11_trace(h, PARAMS, SHIFT, f0)
        assert trace.unit == "dB"
        assert np.allclose(trace.values, float(s11_db(PARAMS, f0)), atol=1e-12)

    def test_small_signal_linearization(self):
        from helisurf import max_slope_probe
        f0, slope = max_slope_probe(PARAMS)
        amp = 1e-9
        t = np.arange(16000) / 400.0
        h = TimeTrace(amp * np.sin(2 * np.pi * 1.4 * t), 400.0, "m")
        trace = displacement_to_s11_trace(h, PARAMS, SHIFT, f0)
        wiggle = trace.values - np.mean(trace.values)
        measured = np.sqrt(2.0) * np.std(wiggle)
        expected = abs(slope) * abs(SHIFT.dfr_dh) * amp
        assert measured == pytest.approx(expected, rel=0.01)

    def test_first_order_antisymmetry(self):
        f0 = PARAMS.f_r - 1.5e5
        t = np.arange(4000) / 400.0
        base = float(s11_db(PARAMS, f0))
        h = TimeTrace(5e-10 * np.sin(2 * np.pi * 1.4 * t), 400.0, "m")
        plus = displacement_to_s11_trace(h, PARAMS, SHIFT, f0).values - base
        h_neg = TimeTrace(-h.values, 400.0, "m")
        minus = displacement_to_s11_trace(h_neg, PARAMS, SHIFT, f0).values - base
        # antisymmetric to first order; quadratic error bounded by the
        # curvature at ~0.2% of linewidth excursion
        assert np.allclose(plus, -minus, atol=2e-4 * np.max(np.abs(plus)) + 1e-9)

    def test_small_signal_flag(self):
        t = np.arange(4000) / 400.0
        h = TimeTrace(200e-9 * np.sin(2 * np.pi * 1.4 * t), 400.0, "m")
        trace = displacement_to_s11_trace(h, PARAMS, SHIFT, PARAMS.f_r - 1.5e5)
        assert "small-signal-violation" in trace.flags

    def test_db_noise_seeded(self):
        h = TimeTrace(np.zeros(4000), 400.0, "m", meta={"seed": 9})
        a = displacement_to_s11_trace(h, PARAMS, SHIFT, PARAMS.f_r - 1e5,
                                      db_noise_sigma=0.01)
        b = displacement_to_s11_trace(h, PARAMS, SHIFT, PARAMS.f_r - 1e5,
                                      db_noise_sigma=0.01)
        assert np.array_equal(a.values, b.values)
        assert np.std(a.values) == pytest.approx(0.01, rel=0.1)

    def test_requires_meter_trace(self):
        with pytest.raises(InvalidScenarioError):
            displacement_to_s11_trace(TimeTrace(np.zeros(100), 400.0, "V"),
                                      PARAMS, SHIFT, PARAMS.f_r)


class TestGeophone:
    gm = GeophoneModel(natural_frequency=4.5, damping_ratio=0.5,
                       sensitivity=28.8, preamp_gain=1.0)

    def sine_trace(self, freq, fs=2048.0, dur=16.0, amp=1e-5):
        t = np.arange(int(fs * dur)) / fs
        return TimeTrace(amp * np.sin(2 * np.pi * freq * t), fs, "m/s")

    def test_flat_response_well_above_natural_frequency(self):
        v = self.sine_trace(45.0)  # 10 x f0
        out = synth_geophone(v, self.gm)
        gain = np.std(out.values) / np.std(v.values)
        assert gain == pytest.approx(self.gm.sensitivity, rel=0.015)

    def test_resonance_magnitude_at_half_damping(self):
        # |H(f0)| = S0/(2 zeta) = S0 for zeta = 0.5
        v = self.sine_trace(4.5)
        out = synth_geophone(v, self.gm)
        gain = np.std(out.values) / np.std(v.values)
        assert gain == pytest.approx(self.gm.sensitivity, rel=1e-6)

    def test_dc_rejected(self):
        v = TimeTrace(np.full(4096, 2e-5), 2048.0, "m/s")
        out = synth_geophone(v, self.gm)
        assert np.max(np.abs(out.values)) < 1e-18

    def test_linearity(self):
        v1 = self.sine_trace(7.0)
        v2 = self.sine_trace(33.0)
        combined = TimeTrace(2.0 * v1.values + 3.0 * v2.values, 2048.0, "m/s")
        out = synth_geophone(combined, self.gm)
        expected = (2.0 * synth_geophone(v1, self.gm).values
                    + 3.0 * synth_geophone(v2, self.gm).values)
        assert np.allclose(out.values, expected, rtol=1e-9, atol=1e-21)

    def test_preamp_gain_scales_output(self):
        amplified = dataclasses.replace(self.gm, preamp_gain=100.0)
        v = self.sine_trace(20.0)
        assert np.allclose(synth_geophone(v, amplified).values,
                           100.0 * synth_geophone(v, self.gm).values, rtol=1e-12)

    def test_requires_velocity_trace(self):
        with pytest.raises(InvalidScenarioError):
            synth_geophone(TimeTrace(np.zeros(100), 400.0, "m"), self.gm)

    def test_damping_bounds(self):
        with pytest.raises(OutOfDomainError):
            GeophoneModel(damping_ratio=2.5)


class TestTraceDerivative:
    def test_sinusoid_derivative(self):
        fs, f = 2048.0, 12.0
        t = np.arange(int(fs * 8)) / fs
        x = TimeTrace(3e-9 * np.sin(2 * np.pi * f * t), fs, "m")
        v = trace_derivative(x, "m/s")
        assert v.unit == "m/s"
        assert np.std(v.values) == pytest.approx(
            2 * np.pi * f * 3e-9 / np.sqrt(2), rel=1e-9)

import numpy as np
import pytest

from helisurf import (AnalysisReport, CalibrationError, FluctuationScenario,
                      Harmonic, InsufficientDataError, InvalidBandError,
                      InvalidComparisonError, OutOfDomainError, ResonanceParams,
                      ShiftModel, Spectrum, TimeTrace, band_rms,
                      calibrate_frequency_noise, compare_pt_on_off,
                      detect_harmonics, displacement_to_s11_trace,
                      max_slope_probe, rms_displacement, synth_displacement,
                      welch_asd)

FS = 400.0
SEG = 2048
DF = FS / SEG  # 0.1953125 Hz


def sine_trace(freq, amp=1.0, fs=FS, n=16384, unit="m"):
    t = np.arange(n) / fs
    return TimeTrace(amp * np.sin(2 * np.pi * freq * t + 0.7), fs, unit)


class TestWelch:
    def test_bin_centered_sinusoid_power(self):
        amp = 2.5
        freq = 64 * DF  # 12.5 Hz, exactly on a bin
        spec = welch_asd(sine_trace(freq, amp), SEG, 0.5, "hann")
        j = int(round(freq / spec.df))
        peak_power = np.sum(spec.asd[j - 4:j + 5] ** 2) * spec.df
        assert peak_power == pytest.approx(amp**2 / 2.0, rel=0.02)

    def test_white_noise_parseval(self):
        sigma = 3e-3
        n = SEG + 18 * (SEG // 2)  # exactly 19 averaged segments
        totals, n_segs = [], None
        for seed in range(20):
            rng = np.random.default_rng(seed)
            trace = TimeTrace(sigma * rng.standard_normal(n), FS, "m")
            spec = welch_asd(trace, SEG, 0.5, "hann")
            n_segs = spec.n_segments_averaged
            totals.append(np.sum(spec.asd**2) * spec.df)
        assert n_segs == 19
        assert np.mean(totals) == pytest.approx(sigma**2, rel=0.05)

    def test_zero_trace(self):
        spec = welch_asd(TimeTrace(np.zeros(8192), FS, "dB"), SEG, 0.5, "hann")
        assert np.all(spec.asd == 0.0)
        assert spec.unit == "dB"

    def test_grid_and_segment_count(self):
        spec = welch_asd(TimeTrace(np.zeros(16000), FS, "m"), SEG, 0.5, "hann")
        assert spec.frequencies[0] == 0.0
        assert spec.df == pytest.approx(DF)
        assert spec.n_segments_averaged == (16000 - SEG) // (SEG // 2) + 1 == 14

    def test_parseval_on_scenario_trace(self):
        scn = FluctuationScenario(
            pt_fundamental=1.4,
            pt_harmonics=tuple((n, 2e-10 / np.sqrt(n), 0.1 * n) for n in range(1, 11)),
            building_band=(30.0, 60.0, 3e-10), line_noise=(60.0, 2e-10),
            white_floor=1e-11, seed=5)
        trace = synth_displacement(scn, FS, 40.0)
        spec = welch_asd(trace, SEG, 0.5, "hann")
        assert np.sum(spec.asd**2) * spec.df == pytest.approx(
            np.var(trace.values), rel=0.05)

    def test_power_of_two_enforced(self):
        with pytest.raises(OutOfDomainError, match="power of two"):
            welch_asd(TimeTrace(np.zeros(8192), FS, "m"), 1000, 0.5, "hann")

    def test_short_trace_rejected(self):
        with pytest.raises(InsufficientDataError):
            welch_asd(TimeTrace(np.zeros(1024), FS, "m"), SEG, 0.5, "hann")

    def test_unknown_window_rejected(self):
        with pytest.raises(OutOfDomainError):
            welch_asd(TimeTrace(np.zeros(8192), FS, "m"), SEG, 0.5, "kaiser17")


class TestCalibrateFrequencyNoise:
    def spectrum(self):
        return welch_asd(sine_trace(12.5, 0.01, unit="dB"), SEG, 0.5, "hann")

    def test_unit_slope_identity(self):
        s_db = self.spectrum()
        s_f = calibrate_frequency_noise(s_db, 1.0)
        assert np.array_equal(s_f.asd, s_db.asd)
        assert s_f.unit == "Hz"

    def test_slope_scaling(self):
        s_db = self.spectrum()
        a = calibrate_frequency_noise(s_db, 2e-5)
        b = calibrate_frequency_noise(s_db, -4e-5)  # sign is irrelevant
        assert np.allclose(a.asd, 2.0 * b.asd, rtol=1e-12)

    def test_zero_slope_rejected(self):
        with pytest.raises(CalibrationError):
            calibrate_frequency_noise(self.spectrum(), 0.0)

    def test_fm_line_round_trip(self):
        # inject a frequency-modulation line of 1 kHz RMS and recover it
        params = ResonanceParams(f_r=1.315e9, q_loaded=1700.0, q_coupling=3400.0)
        shift = ShiftModel()
        f0, slope = max_slope_probe(params)
        line_freq = 10 * DF  # bin-centered
        amp = np.sqrt(2.0) * 1e3 / abs(shift.dfr_dh)
        scn = FluctuationScenario(pt_fundamental=line_freq,
                                  pt_harmonics=((1, amp, 0.2),), seed=0)
        h = synth_displacement(scn, FS, 40.96)
        db = displacement_to_s11_trace(h, params, shift, f0)
        s_f = calibrate_frequency_noise(welch_asd(db, SEG, 0.5, "hann"), slope)
        j = int(round(line_freq / s_f.df))
        recovered = np.sqrt(np.sum(s_f.asd[j - 4:j + 5] ** 2) * s_f.df)
        assert recovered == pytest.approx(1e3, rel=0.03)


class TestRmsDisplacement:
    def flat_spectrum(self, level=2.0, n=1025):
        freqs = np.arange(n) * DF
        return Spectrum(freqs, np.full(n, level), "Hz", "hann", SEG, 0.5, 10)

    def test_unit_consistency(self):
        # S_f integrating to 1.4 kHz in-band with 1.4 kHz/nm sensitivity -> 1 nm
        s = self.flat_spectrum(level=0.0)
        asd = s.asd.copy()
        j = 120
        asd[j] = np.sqrt((1.4e3) ** 2 / s.df)
        s = Spectrum(s.frequencies, asd, "Hz", "hann", SEG, 0.5, 10)
        got = rms_displacement(s, 1.4e3 / 1e-9, s.frequencies[j] - 0.5,
                               s.frequencies[j] + 0.5)
        assert got == pytest.approx(1e-9, rel=1e-6)

    def test_monotone_in_band(self):
        rng = np.random.default_rng(11)
        freqs = np.arange(1025) * DF
        s = Spectrum(freqs, rng.uniform(0.0, 5.0, 1025), "Hz", "hann", SEG, 0.5, 10)
        bands = [(10.0, 20.0), (5.0, 20.0), (5.0, 50.0), (1.0, 100.0), (0.5, 180.0)]
        values = [rms_displacement(s, 1e12, *b) for b in bands]
        assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))

    def test_dc_bin_excluded(self):
        s = self.flat_spectrum()
        asd = s.asd.copy()
        asd[0] = 1e9
        spiked = Spectrum(s.frequencies, asd, "Hz", "hann", SEG, 0.5, 10)
        assert rms_displacement(spiked, 1.0, 0.0, 10.0) == pytest.approx(
            rms_displacement(s, 1.0, 0.0, 10.0), rel=1e-12)

    def test_homogeneous_in_spectrum(self):
        s = self.flat_spectrum(3.0)
        scaled = Spectrum(s.frequencies, 4.0 * s.asd, "Hz", "hann", SEG, 0.5, 10)
        assert rms_displacement(scaled, 1.0, 1.0, 100.0) == pytest.approx(
            4.0 * rms_displacement(s, 1.0, 1.0, 100.0), rel=1e-12)

    def test_empty_band_rejected(self):
        s = self.flat_spectrum()
        with pytest.raises(InvalidBandError):
            rms_displacement(s, 1.0, 50.0, 50.0)
        with pytest.raises(InvalidBandError):
            band_rms(s, 300.0, 400.0)  # above Nyquist

    def test_nonpositive_sensitivity_rejected(self):
        with pytest.raises(OutOfDomainError):
            rms_displacement(self.flat_spectrum(), 0.0, 1.0, 10.0)


class TestDetectHarmonics:
    def comb_spectrum(self, pt_on=True, seed=0, floor=1e-11):
        harmonics = tuple((n, 3e-10 / np.sqrt(n), 0.3 * n) for n in range(1, 11))
        scn = FluctuationScenario(pt_fundamental=1.4,
                                  pt_harmonics=harmonics if pt_on else (),
                                  building_band=(30.0, 60.0, 0.0),
                                  line_noise=(60.0, 0.0),
                                  white_floor=floor, pt_on=pt_on, seed=seed)
        return welch_asd(synth_displacement(scn, FS, 40.0), SEG, 0.5, "hann")

    def test_full_comb_detected(self):
        found = detect_harmonics(self.comb_spectrum(), 1.4, 10, 5.0)
        assert [h.n for h in found] == list(range(1, 11))

    def test_frequencies_within_half_bin(self):
        for h in detect_harmonics(self.comb_spectrum(), 1.4, 10, 5.0):
            assert abs(h.frequency - h.n * 1.4) <= DF / 2.0 + 1e-12

    def test_white_noise_no_false_positives(self):
        false_positives = 0
        for seed in range(100):
            spec = self.comb_spectrum(pt_on=False, seed=seed)
            false_positives += len(detect_harmonics(spec, 1.4, 10, 5.0))
        assert false_positives == 0

    def test_zero_spectrum_empty(self):
        spec = welch_asd(TimeTrace(np.zeros(16000), FS, "m"), SEG, 0.5, "hann")
        assert detect_harmonics(spec, 1.4, 10, 5.0) == []

    def test_unresolved_base_rejected(self):
        spec = self.comb_spectrum()
        with pytest.raises(OutOfDomainError):
            detect_harmonics(spec, 0.1, 10, 5.0)

    def test_threshold_scales_detection(self):
        spec = self.comb_spectrum()
        loose = detect_harmonics(spec, 1.4, 10, 2.0)
        strict = detect_harmonics(spec, 1.4, 10, 1e6)
        assert len(loose) >= 10
        assert strict == []


def make_report(rms, band=(1.0, 200.0), harmonics=()):
    return AnalysisReport(tuple(harmonics), band, rms, 1.4e12, probe_slope=-1e-5)


class TestComparePtOnOff:
    def test_resonator_reduction_numbers(self):
        cmp = compare_pt_on_off(make_report(0.9e-9), make_report(0.77e-9))
        assert cmp.reduction == pytest.approx(0.1444, abs=1e-3)

    def test_geophone_reduction_numbers(self):
        cmp = compare_pt_on_off(make_report(58e-9), make_report(47e-9))
        assert cmp.reduction == pytest.approx(0.19, abs=0.002)

    def test_identical_reports(self):
        on = make_report(1e-9, harmonics=[Harmonic(1, 1.4, 5.0)])
        cmp = compare_pt_on_off(on, on)
        assert cmp.reduction == 0.0
        assert cmp.harmonics_on_only == ()

    def test_lost_harmonics_listed(self):
        on = make_report(1e-9, harmonics=[Harmonic(1, 1.4, 5.0),
                                          Harmonic(3, 4.2, 2.0)])
        off = make_report(0.8e-9, harmonics=[Harmonic(1, 1.4, 4.0)])
        assert compare_pt_on_off(on, off).harmonics_on_only == (3,)

    def test_band_mismatch_rejected(self):
        with pytest.raises(InvalidComparisonError):
            compare_pt_on_off(make_report(1e-9, band=(1.0, 200.0)),
                              make_report(1e-9, band=(2.0, 200.0)))


class TestPipelineRoundTrip:
    def test_line_amplitudes_and_total_rms(self):
        # synthesize -> analyze closes within 5% per line and in total
        params = ResonanceParams(f_r=1.315e9, q_loaded=1700.0, q_coupling=3400.0)
        shift = ShiftModel()
        f0, slope = max_slope_probe(params)
        harmonics = tuple((n, 4e-10 / n, 0.5 * n) for n in range(1, 6))
        scn = FluctuationScenario(pt_fundamental=1.4, pt_harmonics=harmonics,
                                  line_noise=(60.0, 3e-10), seed=2)
        h = synth_displacement(scn, FS, 40.0)
        db = displacement_to_s11_trace(h, params, shift, f0)
        s_f = calibrate_frequency_noise(welch_asd(db, SEG, 0.5, "hann"), slope)
        sens = shift.sensitivity_magnitude()

        for n, amp, _ in harmonics:
            j = int(round(n * 1.4 / s_f.df))
            line_rms = np.sqrt(np.sum(s_f.asd[j - 3:j + 4] ** 2) * s_f.df) / sens
            assert line_rms * np.sqrt(2) == pytest.approx(amp, rel=0.05)

        total = rms_displacement(s_f, sens, 1.0, 200.0)
        expected = np.sqrt(sum(a**2 / 2 for _, a, _ in harmonics)
                           + (3e-10) ** 2 / 2)
        assert total == pytest.approx(expected, rel=0.05)

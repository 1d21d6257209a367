import numpy as np
import pytest

from helisurf import (CondensationScenario, HeliumConstants, HeliumState,
                      InvalidScenarioError, OutOfDomainError, Region,
                      ResonatorGeometry, ShiftModel, channel_depth,
                      condensation_state, condensation_trajectory,
                      film_thickness, frequency_shift)

CONST = HeliumConstants()
GEOM = ResonatorGeometry(length=45.54e-3, center_strip_width=10e-6,
                         gap_width=5e-6, film_thickness=230e-9,
                         substrate_eps_r=11.7)
D_R = GEOM.film_thickness


class TestFilmThickness:
    def test_quarter_power_scaling(self):
        for H in (1e-3, 1e-2, 0.1, 0.37):
            assert film_thickness(CONST, 16 * H) == pytest.approx(
                film_thickness(CONST, H) / 2.0, rel=1e-12)

    def test_default_gamma_anchor(self):
        # documented literature default: ~30 nm film at 1 cm depth
        assert film_thickness(CONST, 0.01) == pytest.approx(30e-9, rel=5e-3)

    def test_monotone_decreasing(self):
        depths = np.logspace(-4, 0, 60)
        d = np.array([film_thickness(CONST, H) for H in depths])
        assert np.all(np.diff(d) < 0)

    @pytest.mark.parametrize("H", [0.0, -1e-3])
    def test_invalid_depth(self, H):
        with pytest.raises(OutOfDomainError):
            film_thickness(CONST, H)


class TestChannelDepth:
    def test_full_at_zero_depth(self):
        assert channel_depth(CONST, GEOM, 0.0) == D_R == 230e-9

    def test_10mm_value(self):
        # independent arithmetic: rho*g*H*w^2/(16 sigma) at H = 10 mm
        head = 146.0 * 9.81 * 0.010 * (5e-6) ** 2 / (16 * 3.58e-4)
        assert head == pytest.approx(62.5e-9, rel=2e-3)
        assert channel_depth(CONST, GEOM, 0.010) == pytest.approx(
            230e-9 - head, rel=1e-12)

    def test_zero_crossing_against_arithmetic_oracle(self):
        # depth at which surface tension can no longer hold liquid in the
        # channel: d_r = rho*g*H*w^2/(16 sigma)  =>  H = 16*sigma*d_r/(rho*g*w^2)
        h_zero = 16 * CONST.sigma_t * D_R / (CONST.rho * CONST.g * GEOM.gap_width**2)
        assert h_zero == pytest.approx(36.8e-3, abs=0.1e-3)
        assert channel_depth(CONST, GEOM, h_zero * (1 + 1e-9)) == 0.0
        assert channel_depth(CONST, GEOM, h_zero * (1 - 1e-6)) > 0.0

    def test_clamped_and_monotone(self):
        depths = np.linspace(0.0, 0.2, 500)
        h = np.array([channel_depth(CONST, GEOM, H) for H in depths])
        assert np.all((h >= 0.0) & (h <= D_R))
        assert np.all(np.diff(h) <= 0)


class TestShiftModel:
    model = ShiftModel()

    def test_channel_full_anchor(self):
        state = HeliumState(0.01, D_R, 30e-9, Region.III)
        assert frequency_shift(self.model, state,
                               channel_depth_full=D_R) == pytest.approx(-0.31e6)

    def test_bulk_anchor(self):
        state = HeliumState(0.0, D_R, 0.0, Region.IV)
        assert frequency_shift(self.model, state) == -3.33e6

    def test_empty_channel_near_zero(self):
        state = HeliumState(0.04, 0.0, 30e-9, Region.III)
        shift = frequency_shift(self.model, state, channel_depth_full=D_R)
        expected = self.model.channel_full_shift - self.model.dfr_dh * D_R
        assert shift == pytest.approx(expected, rel=1e-12)
        # with a perfectly consistent pair this would be exactly zero
        consistent = ShiftModel(dfr_dh=self.model.channel_full_shift / D_R)
        assert frequency_shift(consistent, state,
                               channel_depth_full=D_R) == pytest.approx(0.0, abs=1e-3)

    def test_film_regions_use_configured_constant(self):
        model = ShiftModel(film_region_shift=-2e3)
        for region in (Region.I, Region.II):
            state = HeliumState(0.05, 0.0, 10e-9 if region is Region.II else 0.0,
                                region)
            assert frequency_shift(model, state) == -2e3

    def test_linear_in_channel_depth(self):
        h_vals = np.linspace(0.0, D_R, 20)
        shifts = [frequency_shift(self.model,
                                  HeliumState(0.01, h, 30e-9, Region.III),
                                  channel_depth_full=D_R) for h in h_vals]
        assert np.allclose(np.diff(shifts, 2), 0.0, atol=1e-6)
        assert np.all(np.diff(shifts) < 0)

    def test_sensitivity_consistency_with_anchors(self):
        implied, configured = self.model.linear_consistency(D_R)
        assert implied == pytest.approx(1.35e3 / 1e-9, rel=5e-3)
        assert abs(implied - configured) / configured < 0.05

    def test_invariants_enforced(self):
        with pytest.raises(OutOfDomainError):
            ShiftModel(channel_full_shift=+0.3e6)
        with pytest.raises(OutOfDomainError):
            ShiftModel(bulk_shift=-0.2e6)  # smaller than channel-full
        with pytest.raises(OutOfDomainError):
            HeliumState(0.01, D_R, 0.0, Region.IV)  # region IV requires H = 0


def make_scenario(**overrides):
    defaults = dict(geometry=GEOM, constants=CONST, shift_model=ShiftModel(),
                    schedule=((0.0, 0.0), (3600.0, 12.0)),
                    dead_volume=1.0, film_volume=2.0, bulk_volume=10.0,
                    cell_depth=0.05, base_frequency=1.3166e9,
                    transient_amplitude=-2.0e6, transient_tau=240.0)
    defaults.update(overrides)
    return CondensationScenario(**defaults)


class TestCondensation:
    def test_initial_state(self):
        state, f_r = condensation_state(make_scenario(), 0.0)
        assert state.region is Region.I
        assert f_r == 1.3166e9

    def test_final_bulk_state(self):
        scn = make_scenario()
        state, f_r = condensation_state(scn, 3600.0)
        assert state.region is Region.IV
        assert state.bulk_depth == 0.0
        assert state.channel_depth == D_R
        assert f_r - scn.base_frequency == -3.33e6

    def test_all_regions_visited(self):
        scn = make_scenario()
        rows = condensation_trajectory(scn, np.arange(0.0, 3601.0, 5.0))
        regions = {state.region for _, state, _ in rows}
        assert regions == {Region.I, Region.II, Region.III, Region.IV}

    def test_region_three_monotone_after_transient(self):
        scn = make_scenario()
        rows = condensation_trajectory(scn, np.arange(0.0, 3601.0, 2.0))
        fr3 = [f_r for _, state, f_r in rows if state.region is Region.III]
        assert len(fr3) > 10
        assert np.all(np.diff(fr3) <= 1e-9)

    def test_region_two_transient_relaxes(self):
        scn = make_scenario()
        t_enter = scn.crossing_time(scn.dead_volume)
        state, f_early = condensation_state(scn, t_enter + 1.0)
        assert state.region is Region.II
        assert f_early - scn.base_frequency == pytest.approx(-2.0e6, rel=1e-2)
        _, f_late = condensation_state(scn, t_enter + 290.0)
        assert f_late > f_early  # recovers toward the original value

    def test_empty_schedule_stays_region_one(self):
        scn = make_scenario(schedule=())
        for t in (0.0, 100.0, 1e5):
            state, f_r = condensation_state(scn, t)
            assert state.region is Region.I
            assert f_r == scn.base_frequency

    def test_non_monotone_schedule_rejected(self):
        with pytest.raises(InvalidScenarioError, match="entry 2"):
            make_scenario(schedule=((0.0, 0.0), (10.0, 5.0), (20.0, 3.0)))

    def test_film_thins_as_level_rises(self):
        scn = make_scenario()
        rows = condensation_trajectory(scn, np.arange(0.0, 3601.0, 2.0))
        in_three = [(state.bulk_depth, state.film_thickness)
                    for _, state, _ in rows if state.region is Region.III]
        depths = np.array([d for d, _ in in_three])
        films = np.array([f for _, f in in_three])
        assert np.all(np.diff(depths) < 0)
        assert np.all(np.diff(films) > 0)

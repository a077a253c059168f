from dataclasses import replace

import numpy as np
import pytest

from fluxlight import (
    DriveParams,
    LambdaParams,
    PowerCalibration,
    TransmissionPoint,
    build_liouvillian,
    eit_spectrum,
    eit_threshold,
    group_delay,
    power_map,
    steady_state,
    transmission_from_state,
)
from fluxlight.scattering import probe_coherence, spectrum_arrays

from conftest import TWO_PI, no_ground_decoherence, two_level_params

WEAK = DriveParams(omega_p_mhz=1e-4)


def t_at(params, drive):
    rho = steady_state(build_liouvillian(params, drive))
    return transmission_from_state(probe_coherence(rho), drive.omega_p_mhz, params)


class TestTransmissionFormula:
    def test_zero_coherence_full_transmission(self, table1):
        assert transmission_from_state(0.0, 0.5, table1) == 1.0

    def test_zero_probe_rejected(self, table1):
        with pytest.raises(ValueError):
            transmission_from_state(0.1j, 0.0, table1)

    def test_radiative_two_level_extinction(self):
        params = two_level_params(g02=13.78)
        assert abs(t_at(params, WEAK)) < 1e-9

    def test_dephased_two_level_value(self):
        # arithmetic oracle: |1 - (G02/2)/gamma_02| = |1 - 6.89/7.05|
        params = two_level_params(g02=13.78, gphi22=0.16)
        expected = abs(1.0 - 6.89 / 7.05)
        assert expected == pytest.approx(0.02269503546, abs=1e-9)
        assert abs(t_at(params, WEAK)) == pytest.approx(expected, abs=1e-4)

    def test_mismatch_conjugate_mirror(self):
        # t(phi, dp) - 1 = conj(t(-phi, -dp) - 1) for real coherence dynamics
        params = two_level_params(g02=13.78, gphi22=0.16, mismatch=0.3)
        flipped = replace(params, mismatch_rad=-0.3)
        for dp in (0.0, 0.7, -1.3, 4.0):
            t_plus = t_at(params, replace(WEAK, delta_p_mhz=dp))
            t_minus = t_at(flipped, replace(WEAK, delta_p_mhz=-dp))
            assert t_plus - 1.0 == pytest.approx(np.conj(t_minus - 1.0), abs=1e-10)


class TestSpectrum:
    def test_transparency_window_opens(self, table1):
        on = abs(t_at(table1, replace(WEAK, omega_c_mhz=2.6)))
        off = abs(t_at(table1, WEAK))
        assert on > off

    def test_dark_state_transparency(self, table1):
        params = no_ground_decoherence(table1)
        for oc in (0.5, 2.6, 10.0):
            drive = DriveParams(delta_p_mhz=0.0, delta_c_mhz=0.0,
                                omega_p_mhz=0.1, omega_c_mhz=oc)
            assert abs(t_at(params, drive) - 1.0) < 1e-6

    def test_far_detuned_recovery(self, table1):
        for dp in (-200.0, 200.0):
            t = t_at(table1, replace(WEAK, delta_p_mhz=dp))
            assert abs(t - 1.0) < 0.02

    def test_even_in_detuning_for_symmetric_rates(self, table1):
        params = replace(no_ground_decoherence(table1), mismatch_rad=0.0)
        drive = DriveParams(omega_p_mhz=0.1, omega_c_mhz=2.6)
        grid = np.linspace(-2.0, 2.0, 41)
        _, t = spectrum_arrays(eit_spectrum(params, drive, grid))
        assert np.max(np.abs(np.abs(t) - np.abs(t[::-1]))) < 1e-6

    def test_probe_power_linearity(self, table1):
        # the linear-response window is set by the narrow dark-state scale
        # (gamma_01), far below the coarse omega_p < 0.1 gamma_02 advisory
        grid = np.linspace(-2.0, 2.0, 21)
        base = DriveParams(omega_p_mhz=0.02, omega_c_mhz=2.6)
        _, t1 = spectrum_arrays(eit_spectrum(table1, base, grid))
        _, t2 = spectrum_arrays(eit_spectrum(
            table1, replace(base, omega_p_mhz=0.01), grid))
        assert np.max(np.abs(t1 - t2) / np.abs(t2)) < 1e-3

    def test_weak_probe_advisory_warns(self, table1):
        with pytest.warns(UserWarning):
            eit_spectrum(table1, DriveParams(omega_p_mhz=2.0, omega_c_mhz=2.6), [0.0])


class TestPowerMap:
    def test_minus_inf_row_equals_control_off(self, table1):
        grid = np.linspace(-2.0, 2.0, 11)
        cal = PowerCalibration()
        rows = power_map(table1, grid, [-np.inf], cal, WEAK)
        _, t_off = spectrum_arrays(eit_spectrum(table1, WEAK, grid))
        assert np.max(np.abs(rows[0] - t_off)) < 1e-12

    def test_six_db_doubles_rabi(self):
        cal = PowerCalibration(k0_mhz=100.0)
        db_for_2x = 20.0 * np.log10(2.0)
        assert cal.omega_c_mhz(-150.0 + db_for_2x) == pytest.approx(
            2.0 * cal.omega_c_mhz(-150.0), rel=1e-12)

    def test_default_calibration_regimes(self, table1):
        # -157 dBm lands inside the EIT regime; +/- 15 dB reach weak and ATS
        cal = PowerCalibration()
        oc = {p: cal.omega_c_mhz(p) for p in (-172.0, -157.0, -142.0)}
        threshold = eit_threshold(table1)
        assert oc[-157.0] == pytest.approx(2.6, rel=1e-9)
        assert oc[-172.0] < 0.5
        assert oc[-142.0] > threshold

    def test_line_shape_ordering_weak_eit_ats(self, table1):
        grid = np.linspace(-15.0, 15.0, 301)
        rows = np.abs(power_map(table1, grid, [-172.0, -157.0, -142.0],
                                PowerCalibration(), WEAK))
        weak, eit, ats = rows
        center = 150
        # central transparency deepens with control power
        assert weak[center] < eit[center] < ats[center]
        assert ats[center] > 0.9
        # absorption dips split further out with power
        splits = [abs(grid[np.argmin(row)]) for row in rows]
        assert splits[0] < splits[1] < splits[2]
        assert splits[2] > 5.0
        # transparency contrast (center above the deepest dip) grows
        contrasts = [row[center] - row.min() for row in rows]
        assert contrasts[0] < contrasts[1] < contrasts[2]


class TestGroupDelay:
    def test_linear_phase_synthetic(self):
        delay_us = 0.1  # 100 ns
        dp = np.linspace(-2.0, 2.0, 81)
        pts = [TransmissionPoint(d, np.exp(-1j * delay_us * TWO_PI * d)) for d in dp]
        curve = group_delay(pts)
        assert np.max(np.abs(curve.tau_d_ns[1:-1] - 100.0)) < 0.1

    def test_requires_three_points_and_uniform_grid(self):
        pts = [TransmissionPoint(0.0, 1.0), TransmissionPoint(1.0, 1.0)]
        with pytest.raises(ValueError):
            group_delay(pts)
        bad = [TransmissionPoint(d, 1.0 + 0j) for d in (0.0, 1.0, 2.5)]
        with pytest.raises(ValueError):
            group_delay(bad)

    def test_vanishing_transmission_marked_invalid(self):
        dp = np.linspace(-1.0, 1.0, 21)
        t = np.ones_like(dp, dtype=complex)
        t[10] = 1e-9
        curve = group_delay([TransmissionPoint(d, tv) for d, tv in zip(dp, t)])
        assert np.isnan(curve.tau_d_ns[9:12]).all()
        assert np.isfinite(curve.tau_d_ns[:8]).all()

    def test_slow_light_peak_delay(self, table1):
        drive = DriveParams(omega_p_mhz=0.5, omega_c_mhz=2.6)
        grid = np.arange(-3.0, 3.0 + 0.025, 0.05)
        curve = group_delay(eit_spectrum(table1, drive, grid))
        peak = np.nanmax(curve.tau_d_ns)
        assert 217.0 * 0.8 <= peak <= 217.0 * 1.2

    def test_fast_light_near_plus_1p2_mhz(self, table1):
        drive = DriveParams(omega_p_mhz=0.5, omega_c_mhz=2.6)
        grid = np.arange(-3.0, 3.0 + 0.025, 0.05)
        curve = group_delay(eit_spectrum(table1, drive, grid))
        window = (curve.delta_p_mhz >= 0.7) & (curve.delta_p_mhz <= 1.7)
        assert np.nanmin(curve.tau_d_ns[window]) < 0.0

    def test_delay_integral_recovers_phase(self, table1):
        drive = DriveParams(omega_p_mhz=0.5, omega_c_mhz=2.6)
        grid = np.arange(-3.0, 3.0 + 0.005, 0.01)
        pts = eit_spectrum(table1, drive, grid)
        curve = group_delay(pts)
        _, t = spectrum_arrays(pts)
        phase = np.unwrap(np.angle(t))
        integral = -np.trapezoid(curve.tau_d_ns / 1e3, TWO_PI * curve.delta_p_mhz)
        assert integral == pytest.approx(phase[-1] - phase[0], rel=0.01)

    def test_peak_delay_inside_transparency_lobe(self, table1):
        drive = DriveParams(omega_p_mhz=0.5, omega_c_mhz=2.6)
        grid = np.arange(-3.0, 3.0 + 0.025, 0.05)
        pts = eit_spectrum(table1, drive, grid)
        curve = group_delay(pts)
        _, t = spectrum_arrays(pts)
        dp_tau = curve.delta_p_mhz[np.nanargmax(curve.tau_d_ns)]
        dp_t = grid[np.argmax(np.abs(t))]
        assert abs(dp_tau - dp_t) < 0.3


class TestThreshold:
    def test_device_value_exact_arithmetic(self, table1):
        value = eit_threshold(table1)
        assert value == pytest.approx(6.899, abs=1e-12)
        assert abs(value - 6.85) / 6.85 < 0.01

    def test_zero_rates(self):
        params = LambdaParams(g02_mhz=0, g12_mhz=0, g01_mhz=0, g10_mhz=0,
                              gphi11_mhz=0, gphi22_mhz=0)
        assert eit_threshold(params) == 0.0

    def test_negative_threshold_warns(self):
        params = LambdaParams(g02_mhz=0.1, gphi22_mhz=0.0,
                              g01_mhz=1.0, gphi11_mhz=2.0)
        with pytest.warns(UserWarning):
            assert eit_threshold(params) < 0

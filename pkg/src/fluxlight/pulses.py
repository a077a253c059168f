"""Time-domain pulse propagation, delay extraction and photon storage.

The output envelope generalizes the steady-state input-output relation to
slowly varying drives:

    V_out(t) = Omega_p(t) + i e^{i phi} Gamma_02 rho_20(t)

so that V_out / Omega_p reproduces the steady-state transmission for a
quasi-static probe.  Envelopes are complex, in linear-MHz Rabi units.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .lindblad import (
    DriveSchedule,
    LambdaParams,
    StepSizeError,
    evolve,
    ground_state,
)

REFERENCE_DETUNING_MHZ = 500.0


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian probe pulse Omega_p(t) = amp * exp(-(t - center)^2 / 2 sigma^2)."""

    sigma_us: float = 1.0
    amp_mhz: float = 0.5
    center_us: float = 0.0
    carrier_detuning_mhz: float = 0.0

    def __post_init__(self):
        if self.sigma_us <= 0:
            raise ValueError("sigma_us must be positive")
        if self.amp_mhz < 0:
            raise ValueError("amp_mhz must be >= 0")

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        return self.amp_mhz * np.exp(-((t - self.center_us) ** 2) / (2.0 * self.sigma_us**2))


@dataclass(frozen=True)
class StorageSchedule:
    """Control toggling for store/retrieve: high -> 0 at t_off, back after tau_s."""

    oc_high_mhz: float = 5.7
    t_off_us: float = 0.05
    tau_s_us: float = 0.5
    ramp_us: float = 0.02

    def __post_init__(self):
        if self.tau_s_us < 0:
            raise ValueError("tau_s_us must be >= 0")
        if self.ramp_us <= 0:
            raise ValueError("ramp_us must be positive")
        if self.oc_high_mhz < 0:
            raise ValueError("oc_high_mhz must be >= 0")

    def control_envelope(self, t):
        """Smooth-step down/up profile clipped to [0, oc_high]."""
        t = np.asarray(t, dtype=float)
        val = self.oc_high_mhz * (
            smooth_step((self.t_off_us - t) / self.ramp_us)
            + smooth_step((t - self.t_off_us - self.tau_s_us) / self.ramp_us)
        )
        return np.clip(val, 0.0, self.oc_high_mhz)


@dataclass(frozen=True)
class PulseRecord:
    """Input/output envelopes on a common time grid (complex, MHz Rabi units)."""

    t_us: np.ndarray
    v_in: np.ndarray
    v_out: np.ndarray
    rho: np.ndarray | None = field(default=None, compare=False)  # (nt, 3, 3) diagnostic

    def __post_init__(self):
        if not (self.t_us.shape == self.v_in.shape == self.v_out.shape):
            raise ValueError("time grid and envelopes must share one shape")
        if not (
            np.all(np.isfinite(self.t_us))
            and np.all(np.isfinite(self.v_in))
            and np.all(np.isfinite(self.v_out))
        ):
            raise ValueError("pulse record contains non-finite samples")

    def output_energy(self, mask=None) -> float:
        w = np.abs(self.v_out) ** 2
        if mask is not None:
            w = np.where(mask, w, 0.0)
        return float(np.trapezoid(w, self.t_us))


def smooth_step(x):
    """Unit step smoothed over |x| ~ 1: s(x) = (1 + tanh(2x)) / 2."""
    return 0.5 * (1.0 + np.tanh(2.0 * np.asarray(x, dtype=float)))


def propagate_pulse(
    params: LambdaParams,
    probe: PulseSpec,
    control_env: Callable[[np.ndarray], np.ndarray],
    grid: np.ndarray,
    rho0: np.ndarray | None = None,
) -> PulseRecord:
    """Drive the atom from the ground state and record the transmitted envelope.

    The grid must cover at least +-4 sigma around the pulse center; the
    control detuning is held at zero (the storage experiments toggle only
    the control amplitude).
    """
    grid = np.asarray(grid, dtype=float)
    if grid[0] > probe.center_us - 4 * probe.sigma_us or grid[-1] < probe.center_us + 4 * probe.sigma_us:
        raise ValueError("grid must cover at least +-4 sigma around the pulse center")
    if probe.amp_mhz >= 0.1 * params.gamma_02_mhz:
        warnings.warn(
            f"pulse amplitude {probe.amp_mhz} MHz is not well below "
            f"0.1 * gamma_02 = {0.1 * params.gamma_02_mhz:.3f} MHz",
            stacklevel=2,
        )
    schedule = DriveSchedule(
        omega_p_env=probe.envelope,
        omega_c_env=control_env,
        delta_p_mhz=probe.carrier_detuning_mhz,
        delta_c_mhz=0.0,
    )
    if rho0 is None:
        rho0 = ground_state()
    traj = evolve(rho0, params, schedule, grid)
    v_in = probe.envelope(grid).astype(complex)
    v_out = v_in + 1j * np.exp(1j * params.mismatch_rad) * params.g02_mhz * traj[:, 2, 0]
    return PulseRecord(t_us=grid, v_in=v_in, v_out=v_out, rho=traj)


def reference_pulse(
    params: LambdaParams,
    probe: PulseSpec,
    control_env: Callable[[np.ndarray], np.ndarray],
    grid: np.ndarray,
    detuning_mhz: float = REFERENCE_DETUNING_MHZ,
) -> PulseRecord:
    """Same pulse propagated far off resonance; the delay/efficiency baseline."""
    far = PulseSpec(probe.sigma_us, probe.amp_mhz, probe.center_us, detuning_mhz)
    return propagate_pulse(params, far, control_env, grid)


def _check_same_grid(a: PulseRecord, b: PulseRecord):
    if a.t_us.shape != b.t_us.shape or np.max(np.abs(a.t_us - b.t_us)) > 1e-12:
        raise ValueError("records must share the same time grid")


def extract_delay(reference: PulseRecord, test: PulseRecord) -> float:
    """Energy-centroid delay (test - reference) of |V_out|^2, in ns."""
    _check_same_grid(reference, test)
    out = []
    for rec in (reference, test):
        w = np.abs(rec.v_out) ** 2
        norm = np.trapezoid(w, rec.t_us)
        if norm <= 0:
            raise ValueError("record has zero output energy; delay undefined")
        out.append(np.trapezoid(rec.t_us * w, rec.t_us) / norm)
    return float((out[1] - out[0]) * 1e3)


def peak_fit_delay(reference: PulseRecord, test: PulseRecord) -> float:
    """Secondary estimator: parabola fit to log |V_out|^2 around each peak, ns."""
    _check_same_grid(reference, test)
    peaks = []
    for rec in (reference, test):
        w = np.abs(rec.v_out) ** 2
        i = int(np.argmax(w))
        if w[i] <= 0:
            raise ValueError("record has zero output energy; delay undefined")
        half = max(3, int(0.5 * rec.t_us.size * 0.02))
        lo, hi = max(0, i - half), min(rec.t_us.size, i + half + 1)
        coef = np.polyfit(rec.t_us[lo:hi], np.log(np.maximum(w[lo:hi], 1e-300)), 2)
        if coef[0] >= 0:
            peaks.append(rec.t_us[i])
        else:
            peaks.append(-coef[1] / (2.0 * coef[0]))
    return float((peaks[1] - peaks[0]) * 1e3)


def run_storage(
    params: LambdaParams,
    probe: PulseSpec,
    schedule: StorageSchedule,
    grid: np.ndarray,
) -> tuple[PulseRecord, tuple[float, float]]:
    """Store-and-retrieve protocol; returns the record and the retrieval window.

    The window opens at control turn-on (t_off + tau_s) and spans six ramp
    times plus four probe widths, enough to capture the retrieved packet
    while excluding the leaked slow-light tail.
    """
    grid = np.asarray(grid, dtype=float)
    if schedule.t_off_us < probe.center_us:
        warnings.warn(
            "control switches off before the pulse center; most of the pulse "
            "will not have entered",
            stacklevel=2,
        )
    w0 = schedule.t_off_us + schedule.tau_s_us
    w1 = w0 + 6.0 * schedule.ramp_us + 4.0 * probe.sigma_us
    if w1 > grid[-1]:
        raise ValueError(
            f"retrieval window end {w1:.3f} us exceeds grid end {grid[-1]:.3f} us"
        )
    record = propagate_pulse(params, probe, schedule.control_envelope, grid)
    return record, (float(w0), float(w1))


def storage_efficiency(
    reference: PulseRecord, stored_run: PulseRecord, window: tuple[float, float]
) -> float:
    """Energy ratio eta = retrieved-in-window / full reference output."""
    _check_same_grid(reference, stored_run)
    ref_energy = reference.output_energy()
    if ref_energy <= 0:
        raise ValueError("reference record has zero output energy")
    mask = (stored_run.t_us >= window[0]) & (stored_run.t_us <= window[1])
    return stored_run.output_energy(mask) / ref_energy


def mean_photon_number(t_us, omega_p_mhz, gamma_r_02_mhz: float) -> float:
    """Input photon number <N> = integral(Omega_p^2 dt) / (2 Gamma_02), angular units.

    With linear-MHz inputs this reduces to pi * integral(Omega_p^2 dt) / Gamma_02.
    """
    t_us = np.asarray(t_us, dtype=float)
    omega_p_mhz = np.asarray(omega_p_mhz, dtype=float)
    if not np.all(np.isfinite(omega_p_mhz)):
        raise ValueError("probe envelope has non-finite samples")
    return float(np.pi * np.trapezoid(omega_p_mhz**2, t_us) / gamma_r_02_mhz)


def gaussian_photon_number(probe: PulseSpec, gamma_r_02_mhz: float) -> float:
    """Closed form of :func:`mean_photon_number` for a Gaussian pulse."""
    return float(
        np.pi * probe.amp_mhz**2 * probe.sigma_us * np.sqrt(np.pi) / gamma_r_02_mhz
    )


def amplitude_for_photon_number(
    n_photons: float, sigma_us: float, gamma_r_02_mhz: float
) -> float:
    """Gaussian amplitude (MHz) giving the requested input photon number."""
    return float(
        np.sqrt(n_photons * gamma_r_02_mhz / (np.pi * sigma_us * np.sqrt(np.pi)))
    )

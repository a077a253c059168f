"""Transmission spectra, group delay and the EIT/ATS threshold.

The complex transmission follows the input-output relation

    t = 1 + i e^{i phi} (Gamma_02 / Omega_p) rho_coh

where rho_coh is the (2, 0) element of the steady-state density matrix (the
probe coherence in the sign convention of :mod:`fluxlight.lindblad`, which
makes the radiatively-limited two-level resonant transmission exactly zero)
and phi is the empirical impedance-mismatch phase applied to the scattered
part only, so t -> 1 far off resonance regardless of phi.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .lindblad import TWO_PI, DriveParams, LambdaParams, build_liouvillian, steady_state

# Default power-to-Rabi calibration: -157 dBm maps to Omega_c/2pi = 2.6 MHz,
# placing that row inside the EIT regime for the default rate set.
K0_DEFAULT_MHZ = 2.6 * 10.0 ** (157.0 / 20.0)


@dataclass(frozen=True)
class TransmissionPoint:
    delta_p_mhz: float
    t: complex


@dataclass(frozen=True)
class DelayCurve:
    delta_p_mhz: np.ndarray
    tau_d_ns: np.ndarray


@dataclass(frozen=True)
class PowerCalibration:
    """Rabi amplitude (MHz) extrapolated to 0 dBm: Omega_c = k0 * 10^(P/20)."""

    k0_mhz: float = K0_DEFAULT_MHZ

    def __post_init__(self):
        if self.k0_mhz <= 0:
            raise ValueError("k0_mhz must be positive")

    def omega_c_mhz(self, pc_dbm: float) -> float:
        if pc_dbm == -np.inf:
            return 0.0
        return self.k0_mhz * 10.0 ** (pc_dbm / 20.0)


def probe_coherence(rho: np.ndarray) -> complex:
    """Coherence entering the transmission formula: rho_20."""
    return complex(rho[2, 0])


def transmission_from_state(
    rho_coh: complex, omega_p_mhz: float, params: LambdaParams
) -> complex:
    """Complex transmission from the probe coherence at probe amplitude omega_p."""
    if omega_p_mhz <= 0:
        raise ValueError("omega_p must be positive: transmission undefined at zero probe")
    phase = np.exp(1j * params.mismatch_rad)
    return 1.0 + 1j * phase * (params.g02_mhz / omega_p_mhz) * rho_coh


def eit_spectrum(
    params: LambdaParams, drive_base: DriveParams, delta_p_grid
) -> list[TransmissionPoint]:
    """Steady-state transmission at each probe detuning (MHz)."""
    if not drive_base.weak_probe_ok(params):
        warnings.warn(
            f"probe amplitude {drive_base.omega_p_mhz} MHz is not well below "
            f"0.1 * gamma_02 = {0.1 * params.gamma_02_mhz:.3f} MHz",
            stacklevel=2,
        )
    points = []
    for dp in np.asarray(delta_p_grid, dtype=float):
        drive = replace(drive_base, delta_p_mhz=float(dp))
        try:
            rho = steady_state(build_liouvillian(params, drive))
        except Exception as exc:
            raise type(exc)(f"at delta_p = {dp} MHz: {exc}") from exc
        t = transmission_from_state(probe_coherence(rho), drive.omega_p_mhz, params)
        points.append(TransmissionPoint(float(dp), t))
    return points


def spectrum_arrays(points: list[TransmissionPoint]) -> tuple[np.ndarray, np.ndarray]:
    dp = np.array([p.delta_p_mhz for p in points])
    t = np.array([p.t for p in points])
    return dp, t


def power_map(
    params: LambdaParams,
    delta_p_grid,
    pc_grid_dbm,
    cal: PowerCalibration,
    drive_base: DriveParams | None = None,
) -> np.ndarray:
    """Complex transmission map, one row per control power (take abs for |t|)."""
    delta_p_grid = np.asarray(delta_p_grid, dtype=float)
    pc_grid_dbm = np.asarray(pc_grid_dbm, dtype=float)
    if delta_p_grid.size == 0 or pc_grid_dbm.size == 0:
        raise ValueError("grids must be non-empty")
    if drive_base is None:
        drive_base = DriveParams()
    rows = []
    for pc in pc_grid_dbm:
        drive = replace(drive_base, omega_c_mhz=cal.omega_c_mhz(float(pc)))
        _, t = spectrum_arrays(eit_spectrum(params, drive, delta_p_grid))
        rows.append(t)
    return np.array(rows)


def group_delay(spectrum: list[TransmissionPoint]) -> DelayCurve:
    """tau_d(Delta_p) = -d Arg(t) / d omega_p by central differences, in ns.

    Phase samples are unwrapped (2 pi jumps accumulated when successive
    samples differ by more than pi); endpoints use one-sided differences.
    Points where |t| < 1e-6 have no defined phase and are marked NaN along
    with any neighbour whose difference stencil touches them.
    """
    if len(spectrum) < 3:
        raise ValueError("need at least 3 spectrum points for a delay curve")
    dp, t = spectrum_arrays(spectrum)
    steps = np.diff(dp)
    if steps.size == 0 or np.any(steps <= 0):
        raise ValueError("delta_p grid must be strictly ascending")
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(steps[0], 1.0):
        raise ValueError("delta_p grid must be uniform")

    phase = np.unwrap(np.angle(t))
    if np.any(np.abs(np.diff(phase)) > 0.5 * np.pi):
        warnings.warn(
            "phase advances by more than pi/2 between samples; "
            "the spectral feature is undersampled (aim for >= 20 points across it)",
            stacklevel=2,
        )
    # d omega_p = 2 pi * d(delta_p in MHz) in rad/us; tau in us -> ns
    tau_ns = -np.gradient(phase, TWO_PI * steps[0]) * 1e3

    invalid = np.abs(t) < 1e-6
    if np.any(invalid):
        bad = invalid.copy()
        bad[:-1] |= invalid[1:]
        bad[1:] |= invalid[:-1]
        tau_ns = np.where(bad, np.nan, tau_ns)
    return DelayCurve(delta_p_mhz=dp, tau_d_ns=tau_ns)


def eit_threshold(params: LambdaParams) -> float:
    """EIT/ATS boundary Omega_EIT = gamma_02 - gamma_01 in MHz.

    Below the returned control amplitude the system is in the EIT regime,
    above it in the ATS regime.  May be negative for pathological rate sets
    (returned as-is with a warning).
    """
    value = params.gamma_02_mhz - params.gamma_01_mhz
    if value < 0:
        warnings.warn("gamma_02 < gamma_01: EIT threshold is negative", stacklevel=2)
    return value

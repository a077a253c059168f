"""Shared helpers: reduced-channel parameter sets and solver cross-checks."""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from fluxlight import DriveParams, DriveSchedule, LambdaParams, evolve, ground_state

TWO_PI = 2.0 * np.pi


@pytest.fixture
def table1() -> LambdaParams:
    return LambdaParams()


def two_level_params(g02=13.78, gphi22=0.0, mismatch=0.0) -> LambdaParams:
    """Probe transition only: every channel touching |1> switched off."""
    return LambdaParams(
        g02_mhz=g02, g12_mhz=0.0, g01_mhz=0.0, g10_mhz=0.0,
        gphi11_mhz=0.0, gphi22_mhz=gphi22, mismatch_rad=mismatch,
    )


def no_ground_decoherence(base: LambdaParams) -> LambdaParams:
    """Dark-state-preserving set: Gamma_01 = Gamma_10 = gamma_11 = 0."""
    return replace(base, g01_mhz=0.0, g10_mhz=0.0, gphi11_mhz=0.0)


def fit_decay_rate(t, amplitude) -> float:
    """Exponential rate (rad/us) from a log-linear fit of |amplitude|(t)."""
    y = np.log(np.abs(amplitude))
    return -np.polyfit(np.asarray(t, dtype=float), y, 1)[0]


def decay_grid(params: LambdaParams, drive: DriveParams, t_end: float, n=400):
    fmax = TWO_PI * max(
        params.g02_mhz, params.g12_mhz, params.g01_mhz, params.g10_mhz,
        2 * params.gphi11_mhz, 2 * params.gphi22_mhz,
        drive.omega_p_mhz, drive.omega_c_mhz,
        abs(drive.delta_p_mhz), abs(drive.delta_c_mhz), 1.0,
    )
    dt = min(0.08 / fmax, t_end / n)
    steps = int(np.ceil(t_end / dt))
    return np.linspace(0.0, t_end, steps + 1)


def evolve_to_steady(params: LambdaParams, drive: DriveParams, horizon_us: float,
                     chunk_us: float = 25.0, tol: float = 1e-9):
    """Long-time evolve in chunks from |0><0|, stopping once converged."""
    schedule = DriveSchedule.constant(drive)
    rho = ground_state()
    elapsed = 0.0
    while elapsed < horizon_us:
        span = min(chunk_us, horizon_us - elapsed)
        grid = decay_grid(params, drive, span, n=64)
        traj = evolve(rho, params, schedule, elapsed + grid)
        prev, rho = rho, traj[-1]
        elapsed += span
        if np.max(np.abs(rho - prev)) < tol:
            break
    return rho


def random_lambda_and_drive(rng: np.random.Generator):
    """Parameter draw within a 10x (log-uniform) band around the device values."""
    base = LambdaParams()
    scale = lambda: rng.uniform(-0.5, 0.5)  # exponent of 10
    params = LambdaParams(
        g02_mhz=base.g02_mhz * 10 ** scale(),
        g12_mhz=base.g12_mhz * 10 ** scale(),
        g01_mhz=base.g01_mhz * 10 ** scale(),
        g10_mhz=base.g10_mhz * 10 ** scale(),
        gphi11_mhz=base.gphi11_mhz * 10 ** scale(),
        gphi22_mhz=base.gphi22_mhz * 10 ** scale(),
        mismatch_rad=base.mismatch_rad,
    )
    drive = DriveParams(
        delta_p_mhz=rng.uniform(-3.0, 3.0),
        delta_c_mhz=rng.uniform(-1.0, 1.0),
        omega_p_mhz=0.5 * 10 ** scale(),
        omega_c_mhz=2.6 * 10 ** scale(),
    )
    return params, drive


def min_rate_mhz(params: LambdaParams) -> float:
    return min(
        params.g02_mhz, params.g12_mhz, params.g01_mhz, params.g10_mhz,
        params.gphi11_mhz, params.gphi22_mhz,
    )

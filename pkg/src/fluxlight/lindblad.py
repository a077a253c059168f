"""Driven three-level Lambda system: rotating-frame Hamiltonian, Liouvillian,
steady state and time evolution.

Level ordering is {|0>, |1>, |2>} with the probe on 0<->2 and the control on
1<->2.  All public inputs are linear frequencies (MHz, GHz as nu = omega/2pi);
everything internal is angular (rad/us).  Density matrices are plain 3x3
complex arrays; superoperators act on column-stacked vec(rho), so component
(i, j) lives at index 3*j + i.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

TWO_PI = 2.0 * np.pi

# vec index permutation implementing rho -> rho^dagger
_HERM_PERM = np.array([0, 3, 6, 1, 4, 7, 2, 5, 8])
_TRACE_IDX = np.array([0, 4, 8])

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but stay runnable
    _HAVE_NUMBA = False


class SteadyStateError(Exception):
    """Liouvillian too degenerate to define a steady state (e.g. no dissipation)."""


class StepSizeError(Exception):
    """Time grid too coarse for the fastest angular scale in the problem."""


@dataclass(frozen=True)
class LambdaParams:
    """Transition frequencies, rates and mismatch phase of the Lambda system.

    Defaults are the device working point: nu02/nu12 in GHz, nu01 and all
    rates in MHz (linear frequencies), mismatch phase in radians.
    """

    nu02_ghz: float = 7.329
    nu12_ghz: float = 6.681
    nu01_mhz: float = 648.0
    g02_mhz: float = 13.78
    g12_mhz: float = 2.08
    g01_mhz: float = 0.022
    g10_mhz: float = 0.0218
    gphi11_mhz: float = 0.14
    gphi22_mhz: float = 0.16
    mismatch_rad: float = -0.299

    def __post_init__(self):
        for name in ("g02_mhz", "g12_mhz", "g01_mhz", "g10_mhz", "gphi11_mhz", "gphi22_mhz"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if abs(self.nu02_ghz - self.nu12_ghz - self.nu01_mhz / 1e3) > 1e-6:
            raise ValueError(
                f"nu02 = nu01 + nu12 violated: {self.nu02_ghz} != "
                f"{self.nu12_ghz} + {self.nu01_mhz / 1e3}"
            )

    @property
    def gamma_02_mhz(self) -> float:
        """Probe-coherence decoherence rate Gamma_02/2 + gamma_22, MHz."""
        return 0.5 * self.g02_mhz + self.gphi22_mhz

    @property
    def gamma_01_mhz(self) -> float:
        """Ground-coherence decoherence rate Gamma_01/2 + gamma_11, MHz."""
        return 0.5 * self.g01_mhz + self.gphi11_mhz


@dataclass(frozen=True)
class DriveParams:
    """Constant probe/control detunings and Rabi amplitudes, all MHz (nu = omega/2pi).

    delta_p = (omega_p - omega_02)/2pi, delta_c = (omega_c - omega_12)/2pi.
    """

    delta_p_mhz: float = 0.0
    delta_c_mhz: float = 0.0
    omega_p_mhz: float = 0.5
    omega_c_mhz: float = 0.0

    def __post_init__(self):
        if self.omega_p_mhz < 0 or self.omega_c_mhz < 0:
            raise ValueError("Rabi amplitudes must be >= 0")

    def weak_probe_ok(self, params: LambdaParams) -> bool:
        """Advisory: probe well below the probe-transition decoherence rate."""
        return self.omega_p_mhz < 0.1 * params.gamma_02_mhz


@dataclass(frozen=True)
class DriveSchedule:
    """Time-dependent Rabi envelopes (t in us -> MHz) at fixed detunings."""

    omega_p_env: Callable[[np.ndarray], np.ndarray]
    omega_c_env: Callable[[np.ndarray], np.ndarray]
    delta_p_mhz: float = 0.0
    delta_c_mhz: float = 0.0

    @classmethod
    def constant(cls, drive: DriveParams) -> "DriveSchedule":
        op, oc = drive.omega_p_mhz, drive.omega_c_mhz
        return cls(
            omega_p_env=lambda t: np.full_like(np.asarray(t, dtype=float), op),
            omega_c_env=lambda t: np.full_like(np.asarray(t, dtype=float), oc),
            delta_p_mhz=drive.delta_p_mhz,
            delta_c_mhz=drive.delta_c_mhz,
        )


def sigma(i: int, j: int) -> np.ndarray:
    """Projector-style operator |i><j| on the three-level space."""
    m = np.zeros((3, 3), dtype=complex)
    m[i, j] = 1.0
    return m


def ground_state() -> np.ndarray:
    rho = np.zeros((3, 3), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def validate_density_matrix(rho: np.ndarray, herm_tol=1e-10, trace_tol=1e-10, psd_tol=-1e-8):
    """Raise if rho is not Hermitian / unit-trace / PSD within tolerance."""
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError("density matrix not Hermitian within tolerance")
    if abs(np.trace(rho).real - 1.0) > trace_tol or abs(np.trace(rho).imag) > trace_tol:
        raise ValueError("density matrix trace differs from 1")
    if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < psd_tol:
        raise ValueError("density matrix has a negative eigenvalue beyond tolerance")


def lambda_hamiltonian(drive: DriveParams) -> np.ndarray:
    """Rotating-frame Hamiltonian in angular units (rad/us), exactly Hermitian.

    H = -Omega_p/2 (s02 + s20) - Omega_c/2 (s12 + s21)
        + (Delta_p - Delta_c) s11 + Delta_p s22
    """
    op = TWO_PI * drive.omega_p_mhz
    oc = TWO_PI * drive.omega_c_mhz
    dp = TWO_PI * drive.delta_p_mhz
    dc = TWO_PI * drive.delta_c_mhz
    h = np.zeros((3, 3), dtype=complex)
    h[0, 2] = h[2, 0] = -0.5 * op
    h[1, 2] = h[2, 1] = -0.5 * oc
    h[1, 1] = dp - dc
    h[2, 2] = dp
    return h


def dissipation_channels(params: LambdaParams) -> list[tuple[float, np.ndarray]]:
    """Jump channels (rate in rad/us, operator): relaxation, thermal excitation,
    and dephasing with the explicit factor 2 on the dephasing rates."""
    return [
        (TWO_PI * params.g02_mhz, sigma(0, 2)),
        (TWO_PI * params.g12_mhz, sigma(1, 2)),
        (TWO_PI * params.g01_mhz, sigma(0, 1)),
        (TWO_PI * params.g10_mhz, sigma(1, 0)),
        (TWO_PI * 2.0 * params.gphi22_mhz, sigma(2, 2)),
        (TWO_PI * 2.0 * params.gphi11_mhz, sigma(1, 1)),
    ]


def _commutator_superop(h: np.ndarray) -> np.ndarray:
    i3 = np.eye(3)
    return -1j * (np.kron(i3, h) - np.kron(h.T, i3))


def _dissipator_superop(rate: float, a: np.ndarray) -> np.ndarray:
    i3 = np.eye(3)
    ada = a.conj().T @ a
    return rate * (
        np.kron(a.conj(), a) - 0.5 * (np.kron(i3, ada) + np.kron(ada.T, i3))
    )


def build_liouvillian(params: LambdaParams, drive: DriveParams) -> np.ndarray:
    """9x9 generator acting on column-stacked rho: vec(drho/dt) = L vec(rho)."""
    L = _commutator_superop(lambda_hamiltonian(drive))
    for rate, a in dissipation_channels(params):
        L += _dissipator_superop(rate, a)
    return L


def liouvillian_parts(params: LambdaParams, delta_p_mhz: float, delta_c_mhz: float):
    """Affine decomposition L(t) = L0 + Omega_p(t) Lp + Omega_c(t) Lc.

    Lp and Lc are per unit *angular* Rabi amplitude; L0 carries detunings
    and all dissipation.
    """
    base_drive = DriveParams(delta_p_mhz, delta_c_mhz, 0.0, 0.0)
    l0 = build_liouvillian(params, base_drive)
    lp = _commutator_superop(-0.5 * (sigma(0, 2) + sigma(2, 0)))
    lc = _commutator_superop(-0.5 * (sigma(1, 2) + sigma(2, 1)))
    return l0, lp, lc


def _vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(9, order="F")


def _unvec(x: np.ndarray) -> np.ndarray:
    return x.reshape(3, 3, order="F")


def _hermitize_vec(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + np.conj(x[_HERM_PERM]))


def steady_state(L: np.ndarray) -> np.ndarray:
    """Solve L vec(rho) = 0 with trace(rho) = 1.

    The first row is replaced by the trace functional and the linear system
    solved directly.  If the system is singular (a dark sector decoupled from
    the rest), the steady state is resolved deterministically as the long-time
    limit starting from |0><0|, i.e. the projection of vec(|0><0|) onto the
    stationary eigenspace.  A generator with no decaying modes at all (no
    dissipation anywhere) has no meaningful limit and raises.
    """
    m = L.copy()
    m[0, :] = 0.0
    m[0, _TRACE_IDX] = 1.0
    b = np.zeros(9, dtype=complex)
    b[0] = 1.0

    x = None
    try:
        cand = np.linalg.solve(m, b)
        if np.all(np.isfinite(cand)) and np.linalg.norm(L @ cand) < 1e-9:
            x = cand
    except np.linalg.LinAlgError:
        pass

    if x is None:
        lam, vecs = np.linalg.eig(L)
        scale = max(1.0, np.max(np.abs(L)))
        if np.max(-lam.real) < 1e-12 * scale:
            raise SteadyStateError(
                "generator has no decaying modes (all rates zero?); "
                "steady state undefined"
            )
        null = np.abs(lam) < 1e-10 * scale
        if not np.any(null):
            raise SteadyStateError("no stationary mode found within tolerance")
        coeffs = np.linalg.solve(vecs, _vec(ground_state()))
        x = vecs[:, null] @ coeffs[null]
        tr = np.sum(x[_TRACE_IDX])
        if abs(tr) < 1e-12:
            raise SteadyStateError("stationary projection has zero trace")
        x = x / tr

    x = _hermitize_vec(x)
    x = x / np.sum(x[_TRACE_IDX]).real
    rho = _unvec(x)
    residual = np.linalg.norm(L @ _vec(rho))
    if residual > 1e-9:
        raise SteadyStateError(f"steady-state residual {residual:.2e} exceeds 1e-9")
    validate_density_matrix(rho)
    return rho


if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _rk4_loop(l0, lp, lc, op_edge, oc_edge, op_mid, oc_mid, h, x0, n_sub, out):
        """Fixed-step RK4 over all substeps; writes every n_sub-th state to out."""
        x = x0.copy()
        y = np.empty(9, dtype=np.complex128)
        k1 = np.empty(9, dtype=np.complex128)
        k2 = np.empty(9, dtype=np.complex128)
        k3 = np.empty(9, dtype=np.complex128)
        k4 = np.empty(9, dtype=np.complex128)
        tmp = np.empty(9, dtype=np.complex128)
        herm = np.array([0, 3, 6, 1, 4, 7, 2, 5, 8])
        out[0, :] = x
        n_total = op_mid.shape[0]
        row = 1
        for step in range(n_total):
            a0, c0 = op_edge[step], oc_edge[step]
            am, cm = op_mid[step], oc_mid[step]
            a1, c1 = op_edge[step + 1], oc_edge[step + 1]
            for i in range(9):
                acc = 0.0 + 0.0j
                for j in range(9):
                    acc += (l0[i, j] + a0 * lp[i, j] + c0 * lc[i, j]) * x[j]
                k1[i] = acc
            for i in range(9):
                y[i] = x[i] + 0.5 * h * k1[i]
            for i in range(9):
                acc = 0.0 + 0.0j
                for j in range(9):
                    acc += (l0[i, j] + am * lp[i, j] + cm * lc[i, j]) * y[j]
                k2[i] = acc
            for i in range(9):
                y[i] = x[i] + 0.5 * h * k2[i]
            for i in range(9):
                acc = 0.0 + 0.0j
                for j in range(9):
                    acc += (l0[i, j] + am * lp[i, j] + cm * lc[i, j]) * y[j]
                k3[i] = acc
            for i in range(9):
                y[i] = x[i] + h * k3[i]
            for i in range(9):
                acc = 0.0 + 0.0j
                for j in range(9):
                    acc += (l0[i, j] + a1 * lp[i, j] + c1 * lc[i, j]) * y[j]
                k4[i] = acc
            for i in range(9):
                x[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            for i in range(9):
                tmp[i] = 0.5 * (x[i] + np.conj(x[herm[i]]))
            for i in range(9):
                x[i] = tmp[i]
            if (step + 1) % n_sub == 0:
                tr = (x[0] + x[4] + x[8]).real
                for i in range(9):
                    x[i] = x[i] / tr
                out[row, :] = x
                row += 1

else:  # pragma: no cover - exercised only without numba

    def _rk4_loop(l0, lp, lc, op_edge, oc_edge, op_mid, oc_mid, h, x0, n_sub, out):
        x = x0.copy()
        out[0, :] = x
        row = 1
        n_total = op_mid.shape[0]
        for step in range(n_total):
            la = l0 + op_edge[step] * lp + oc_edge[step] * lc
            lm = l0 + op_mid[step] * lp + oc_mid[step] * lc
            lb = l0 + op_edge[step + 1] * lp + oc_edge[step + 1] * lc
            k1 = la @ x
            k2 = lm @ (x + 0.5 * h * k1)
            k3 = lm @ (x + 0.5 * h * k2)
            k4 = lb @ (x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            x = _hermitize_vec(x)
            if (step + 1) % n_sub == 0:
                x = x / (x[0] + x[4] + x[8]).real
                out[row, :] = x
                row += 1


def _max_angular_scale(params: LambdaParams, schedule: DriveSchedule, grid: np.ndarray) -> float:
    rates = [params.g02_mhz, params.g12_mhz, params.g01_mhz, params.g10_mhz,
             2.0 * params.gphi11_mhz, 2.0 * params.gphi22_mhz]
    op = np.asarray(schedule.omega_p_env(grid), dtype=float)
    oc = np.asarray(schedule.omega_c_env(grid), dtype=float)
    if not (np.all(np.isfinite(op)) and np.all(np.isfinite(oc))):
        raise ValueError("drive envelope returned a non-finite sample")
    fmax_mhz = max(
        max(rates),
        abs(schedule.delta_p_mhz),
        abs(schedule.delta_c_mhz),
        abs(schedule.delta_p_mhz - schedule.delta_c_mhz),
        float(np.max(np.abs(op))),
        float(np.max(np.abs(oc))),
    )
    return max(TWO_PI * fmax_mhz, 1.0)


def evolve(
    rho0: np.ndarray,
    params: LambdaParams,
    schedule: DriveSchedule,
    grid: np.ndarray,
) -> np.ndarray:
    """Integrate drho/dt = L(t) rho on a uniform grid; returns (len(grid), 3, 3).

    Classical fixed-step RK4 with internal substeps of h <= 1/(50 f_max),
    where f_max is the largest angular rate / Rabi / detuning in the problem;
    envelopes are sampled at substep edges and midpoints.  The grid step
    itself must satisfy step * f_max < 0.1.  Hermiticity is enforced by
    symmetrization at every substep and the trace renormalized at every
    output sample, so populations sum to 1 exactly on output.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid must be 1-D with at least two points")
    dt = grid[1] - grid[0]
    if dt <= 0 or np.max(np.abs(np.diff(grid) - dt)) > 1e-9 * max(dt, 1.0):
        raise ValueError("grid must be uniform and increasing")

    validate_density_matrix(rho0, herm_tol=1e-9, trace_tol=1e-9)
    fmax = _max_angular_scale(params, schedule, grid)
    if dt * fmax >= 0.1:
        raise StepSizeError(
            f"grid step {dt:.3e} us too coarse: step * f_max = {dt * fmax:.3f} >= 0.1"
        )

    n_sub = max(1, int(np.ceil(dt * fmax * 50.0)))
    h = dt / n_sub
    n_out = grid.size - 1
    n_total = n_out * n_sub

    edges = grid[0] + h * np.arange(n_total + 1)
    mids = edges[:-1] + 0.5 * h
    op_edge = TWO_PI * np.asarray(schedule.omega_p_env(edges), dtype=float)
    oc_edge = TWO_PI * np.asarray(schedule.omega_c_env(edges), dtype=float)
    op_mid = TWO_PI * np.asarray(schedule.omega_p_env(mids), dtype=float)
    oc_mid = TWO_PI * np.asarray(schedule.omega_c_env(mids), dtype=float)
    for arr in (op_edge, oc_edge, op_mid, oc_mid):
        if not np.all(np.isfinite(arr)):
            raise ValueError("drive envelope returned a non-finite sample")

    l0, lp, lc = liouvillian_parts(params, schedule.delta_p_mhz, schedule.delta_c_mhz)
    out = np.empty((grid.size, 9), dtype=complex)
    _rk4_loop(
        np.ascontiguousarray(l0), np.ascontiguousarray(lp), np.ascontiguousarray(lc),
        op_edge, oc_edge, op_mid, oc_mid, h, _vec(rho0), n_sub, out,
    )
    return out.reshape(grid.size, 3, 3).transpose(0, 2, 1)

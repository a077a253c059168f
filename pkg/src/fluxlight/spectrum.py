"""Fluxonium energy spectrum in a truncated harmonic-oscillator basis.

The circuit Hamiltonian is

    H = 4 E_C n^2 + (1/2) E_L phi^2 - E_J cos(phi + 2*pi*flux)

with all energies in GHz and ``flux`` the external flux in units of the
flux quantum, so the sweet spot sits at flux = 0.5.  The operators are
built from ladder operators of the LC part; the cosine is evaluated
exactly (within truncation) by diagonalizing the phase operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


class TruncationError(Exception):
    """Basis too small for the requested levels, or levels not converged."""


class EigensolverError(Exception):
    """Dense symmetric eigensolver failed to converge."""


@dataclass(frozen=True)
class FluxoniumParams:
    """Circuit energies (GHz), reduced external flux and basis truncation."""

    e_j: float
    e_c: float
    e_l: float
    flux: float = 0.5
    basis_size: int = 60

    def __post_init__(self):
        if self.e_c <= 0 or self.e_l <= 0:
            raise ValueError("e_c and e_l must be positive")
        if self.e_j < 0:
            raise ValueError("e_j must be non-negative")
        if self.basis_size < 10:
            raise ValueError(f"basis_size must be >= 10, got {self.basis_size}")

    @property
    def plasma_freq(self) -> float:
        """LC oscillator frequency sqrt(8 E_C E_L) in GHz."""
        return np.sqrt(8.0 * self.e_c * self.e_l)

    @property
    def phi_zpf(self) -> float:
        """Zero-point spread of the phase operator, (8 E_C / E_L)^(1/4) / sqrt(2)."""
        return (8.0 * self.e_c / self.e_l) ** 0.25 / np.sqrt(2.0)


@dataclass(frozen=True)
class SpectrumResult:
    """Lowest eigenenergies plus transition frequencies and charge matrix elements."""

    levels: np.ndarray  # GHz, ascending
    transition_freqs: dict = field(default_factory=dict)  # (i, j) -> GHz, i < j
    charge_elements: dict = field(default_factory=dict)  # (i, j) -> |<i|n|j>|

    def nu(self, i: int, j: int) -> float:
        return self.transition_freqs[(min(i, j), max(i, j))]

    def n_elem(self, i: int, j: int) -> float:
        return self.charge_elements[(min(i, j), max(i, j))]


def phase_operator(params: FluxoniumParams) -> np.ndarray:
    """Phase operator phi = phi_zpf (a + a^dag), real symmetric."""
    n = params.basis_size
    sq = np.sqrt(np.arange(1, n, dtype=float))
    phi = np.zeros((n, n))
    phi[np.arange(n - 1), np.arange(1, n)] = params.phi_zpf * sq
    return phi + phi.T


def charge_operator(params: FluxoniumParams) -> np.ndarray:
    """Charge operator n = i n_zpf (a^dag - a), with n_zpf = 1/(2 phi_zpf).

    Purely imaginary in this basis; [phi, n] = i in the untruncated limit.
    """
    n = params.basis_size
    n_zpf = 1.0 / (2.0 * params.phi_zpf)
    sq = np.sqrt(np.arange(1, n, dtype=float))
    low = np.zeros((n, n))
    low[np.arange(1, n), np.arange(n - 1)] = n_zpf * sq  # a^dag part
    return 1j * (low - low.T)


def build_fluxonium_hamiltonian(params: FluxoniumParams) -> np.ndarray:
    """Hamiltonian matrix in the LC oscillator basis, GHz units, exactly symmetric.

    cos(phi + 2*pi*flux) is computed by diagonalizing phi and applying the
    scalar cosine to its eigenvalues, which is exact within the truncated
    basis and avoids any series expansion.
    """
    phi = phase_operator(params)
    n_op = charge_operator(params)
    n_sq = np.real(n_op @ n_op)  # imaginary antisymmetric squared -> real

    w, v = np.linalg.eigh(phi)
    cos_phi = (v * np.cos(w + 2.0 * np.pi * params.flux)) @ v.T

    h = 4.0 * params.e_c * n_sq + 0.5 * params.e_l * (phi @ phi) - params.e_j * cos_phi
    return 0.5 * (h + h.T)


def _fix_eigenvector_signs(vecs: np.ndarray) -> np.ndarray:
    """Make the first non-negligible component of each eigenvector positive."""
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        idx = nz[0] if nz.size else 0
        if col[idx] < 0:
            out[:, k] = -col
    return out


def eigensolve(h: np.ndarray, n_levels: int, params: FluxoniumParams | None = None) -> SpectrumResult:
    """Lowest ``n_levels`` eigenpairs of a real symmetric Hamiltonian.

    Guards against truncation-contaminated levels by requiring
    n_levels <= basis_size / 2.  Charge matrix elements are computed from
    the eigenvectors and the charge operator when ``params`` is given.
    """
    dim = h.shape[0]
    if n_levels > dim // 2:
        raise TruncationError(
            f"n_levels={n_levels} exceeds basis_size/2={dim // 2}; "
            "increase basis_size to avoid truncation error"
        )
    try:
        w, v = scipy.linalg.eigh(h, subset_by_index=(0, n_levels - 1))
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails here
        raise EigensolverError(f"symmetric eigensolver did not converge: {exc}") from exc

    order = np.argsort(w, kind="stable")
    w = w[order]
    v = _fix_eigenvector_signs(v[:, order])

    gram = v.T @ v
    if np.max(np.abs(gram - np.eye(n_levels))) > 1e-10:
        raise EigensolverError("eigenvectors lost orthonormality beyond 1e-10")

    transitions = {}
    for i in range(n_levels):
        for j in range(i + 1, n_levels):
            transitions[(i, j)] = float(w[j] - w[i])

    charge = {}
    if params is not None:
        n_op = charge_operator(params)
        n_in_eig = v.conj().T @ n_op @ v
        for i in range(n_levels):
            for j in range(i + 1, n_levels):
                charge[(i, j)] = float(np.abs(n_in_eig[i, j]))

    return SpectrumResult(levels=w, transition_freqs=transitions, charge_elements=charge)


def compute_spectrum(
    params: FluxoniumParams, n_levels: int = 3, check_convergence: bool = True
) -> SpectrumResult:
    """Build, diagonalize and (optionally) verify truncation convergence.

    The convergence check re-runs at 1.5x the basis size and requires the
    lowest levels to agree to 1e-6 GHz.
    """
    result = eigensolve(build_fluxonium_hamiltonian(params), n_levels, params)
    if check_convergence:
        bigger = FluxoniumParams(
            params.e_j, params.e_c, params.e_l, params.flux,
            int(np.ceil(params.basis_size * 1.5)),
        )
        ref = eigensolve(build_fluxonium_hamiltonian(bigger), n_levels, bigger)
        drift = np.max(np.abs(result.levels - ref.levels))
        if drift > 1e-6:
            raise TruncationError(
                f"levels moved by {drift:.2e} GHz when basis grew from "
                f"{params.basis_size} to {bigger.basis_size}; increase basis_size"
            )
    return result


def flux_sweep(
    params_base: FluxoniumParams, flux_grid, n_levels: int = 3
) -> list[tuple[float, SpectrumResult]]:
    """Spectrum at each flux point; deterministic, one row per point."""
    flux_grid = list(flux_grid)
    if not flux_grid:
        raise ValueError("flux_grid must be non-empty")
    rows = []
    for flux in flux_grid:
        p = FluxoniumParams(
            params_base.e_j, params_base.e_c, params_base.e_l, flux, params_base.basis_size
        )
        try:
            rows.append((float(flux), compute_spectrum(p, n_levels, check_convergence=False)))
        except (TruncationError, EigensolverError) as exc:
            raise type(exc)(f"at flux={flux}: {exc}") from exc
    return rows

"""EIT vs ATS line-shape fitting and Akaike-weight model discrimination.

Phenomenological models for the real part of the transmission versus probe
detuning omega (MHz):

    T_EIT(w) = 1 - C1 / (w^2 + G1^2) + C2 / (w^2 + G2^2)      (4 parameters)
    T_ATS(w) = 1 - C / ((w-d)^2 + G^2) - C / ((w+d)^2 + G^2)  (3 parameters)

Fits are damped least squares (trust-region LM) over a deterministic
multi-start grid; widths stay positive through a squared reparameterization.
Model scores use the Gaussian-MLE AIC, I = n ln(rss/n) + 2k, whose additive
constants cancel in the per-point weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares

from .lindblad import DriveParams, LambdaParams
from .scattering import eit_spectrum, spectrum_arrays

K_EIT = 4
K_ATS = 3


class NoCrossingError(Exception):
    """Weight curve never crosses 0.5 from above; carries the curve for inspection."""

    def __init__(self, message: str, curve=None):
        super().__init__(message)
        self.curve = curve


@dataclass(frozen=True)
class LineShapeData:
    """Real transmission samples on an ascending detuning grid (MHz)."""

    omega_mhz: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.omega_mhz.ndim != 1 or self.values.shape != self.omega_mhz.shape:
            raise ValueError("omega grid and values must be matching 1-D arrays")
        if self.n < 8:
            raise ValueError(f"need at least 8 points, got {self.n}")
        if np.any(np.diff(self.omega_mhz) <= 0):
            raise ValueError("omega grid must be strictly ascending")

    @property
    def n(self) -> int:
        return self.omega_mhz.size


@dataclass
class FitOutcome:
    model: str  # "EIT" | "ATS"
    params: tuple  # EIT: (C1, G1, C2, G2); ATS: (C, d, G)
    rss: float
    k: int
    aic: float
    per_point_weight: float | None = None
    converged: bool = True
    degenerate: bool = False


def t_eit(omega, c1, g1, c2, g2):
    omega = np.asarray(omega, dtype=float)
    return 1.0 - c1 / (omega**2 + g1**2) + c2 / (omega**2 + g2**2)


def t_ats(omega, c, d, g):
    omega = np.asarray(omega, dtype=float)
    return 1.0 - c / ((omega - d) ** 2 + g**2) - c / ((omega + d) ** 2 + g**2)


def _fit_multistart(residual, jacobian, starts):
    """Lowest-RSS solution over a deterministic start list; never raises."""
    best_q, best_rss, converged = None, np.inf, False
    for q0 in starts:
        try:
            sol = least_squares(
                residual, q0, jac=jacobian, method="lm",
                ftol=1e-15, xtol=1e-15, gtol=1e-15, max_nfev=4000,
            )
        except Exception:
            continue
        rss = float(np.dot(sol.fun, sol.fun))
        if rss < best_rss:
            best_q, best_rss, converged = sol.x, rss, bool(sol.success)
    return best_q, best_rss, converged


_WIDTH_STARTS = (0.1, 1.0, 5.0, 20.0)


def fit_eit_model(data: LineShapeData, starts: int | None = None) -> FitOutcome:
    """Least-squares fit of the EIT model; C2 is unconstrained in sign."""
    w, y = data.omega_mhz, data.values
    if np.ptp(y) == 0.0 and abs(y[0] - 1.0) < 1e-15:
        return FitOutcome("EIT", (0.0, 1.0, 0.0, 1.0), 0.0, K_EIT,
                          aic=-math.inf, degenerate=True)

    depth = max(float(1.0 - np.min(y)), 1e-3)

    def residual(q):
        return t_eit(w, q[0], q[1] ** 2, q[2], q[3] ** 2) - y

    def jacobian(q):
        c1, u1, c2, u2 = q
        g1, g2 = u1**2, u2**2
        d1 = w**2 + g1**2
        d2 = w**2 + g2**2
        jac = np.empty((w.size, 4))
        jac[:, 0] = -1.0 / d1
        jac[:, 1] = (2.0 * c1 * g1 / d1**2) * 2.0 * u1
        jac[:, 2] = 1.0 / d2
        jac[:, 3] = (-2.0 * c2 * g2 / d2**2) * 2.0 * u2
        return jac

    start_list = [
        np.array([depth * g1**2, np.sqrt(g1), 0.25 * depth * g2**2, np.sqrt(g2)])
        for g1 in _WIDTH_STARTS
        for g2 in _WIDTH_STARTS
    ]
    if starts is not None:
        start_list = start_list[: max(1, starts)]
    q, rss, ok = _fit_multistart(residual, jacobian, start_list)
    if q is None:
        return FitOutcome("EIT", (depth, 1.0, 0.0, 1.0), float(np.sum((1.0 - y) ** 2)),
                          K_EIT, aic=math.inf, converged=False)
    params = (float(q[0]), float(q[1] ** 2), float(q[2]), float(q[3] ** 2))
    # (C1, G1, C2, G2) and (-C2, G2, -C1, G1) are the same curve; canonicalize
    # so the C1 Lorentzian is the broad one
    if params[1] < params[3]:
        params = (-params[2], params[3], -params[0], params[1])
    return FitOutcome("EIT", params, rss, K_EIT, aic=aic_score(rss, data.n, K_EIT),
                      converged=ok)


def fit_ats_model(data: LineShapeData, starts: int | None = None) -> FitOutcome:
    """Least-squares fit of the ATS model; the splitting d is kept >= 0."""
    w, y = data.omega_mhz, data.values
    if np.ptp(y) == 0.0 and abs(y[0] - 1.0) < 1e-15:
        return FitOutcome("ATS", (0.0, 0.0, 1.0), 0.0, K_ATS,
                          aic=-math.inf, degenerate=True)

    depth = max(float(1.0 - np.min(y)), 1e-3)
    dip = abs(float(w[np.argmin(y)]))
    span = float(w[-1] - w[0])
    d_starts = sorted({0.0, dip, span / 6.0})

    def residual(q):
        return t_ats(w, q[0], q[1] ** 2, q[2] ** 2) - y

    def jacobian(q):
        c, v, u = q
        d, g = v**2, u**2
        dm = (w - d) ** 2 + g**2
        dp = (w + d) ** 2 + g**2
        jac = np.empty((w.size, 3))
        jac[:, 0] = -1.0 / dm - 1.0 / dp
        dd = -2.0 * c * (w - d) / dm**2 + 2.0 * c * (w + d) / dp**2
        jac[:, 1] = dd * 2.0 * v
        dg = 2.0 * c * g / dm**2 + 2.0 * c * g / dp**2
        jac[:, 2] = dg * 2.0 * u
        return jac

    start_list = [
        np.array([depth * (g**2 + d**2 / 4.0), np.sqrt(d), np.sqrt(g)])
        for d in d_starts
        for g in _WIDTH_STARTS
    ]
    if starts is not None:
        start_list = start_list[: max(1, starts)]
    q, rss, ok = _fit_multistart(residual, jacobian, start_list)
    if q is None:
        return FitOutcome("ATS", (depth, 0.0, 1.0), float(np.sum((1.0 - y) ** 2)),
                          K_ATS, aic=math.inf, converged=False)
    params = (float(q[0]), float(q[1] ** 2), float(q[2] ** 2))
    return FitOutcome("ATS", params, rss, K_ATS, aic=aic_score(rss, data.n, K_ATS),
                      converged=ok)


def aic_score(rss: float, n: int, k: int) -> float:
    """Gaussian-MLE AIC with additive constants dropped: n ln(rss/n) + 2k.

    A numerically perfect fit (rss = 0) returns -inf as a sentinel.
    """
    if rss < 0:
        raise ValueError("rss must be non-negative")
    if n <= k:
        raise ValueError(f"need more points than parameters: n={n}, k={k}")
    if rss == 0.0:
        return -math.inf
    return n * math.log(rss / n) + 2.0 * k


def aic_weights(i_eit: float, i_ats: float, n: int) -> tuple[float, float]:
    """Per-point (mean) AIC weights; always sums to exactly 1."""
    if n <= 0:
        raise ValueError("n must be positive")
    ibar_eit = i_eit / n
    ibar_ats = i_ats / n
    if math.isinf(ibar_eit) and math.isinf(ibar_ats):
        return 0.5, 0.5
    d = 0.5 * (ibar_eit - ibar_ats)  # exp(-x) shifted form of the weight ratio
    if d > 700.0 or math.isinf(d):
        w_eit = 0.0 if d > 0 else 1.0
    elif d < -700.0:
        w_eit = 1.0
    else:
        w_eit = 1.0 / (1.0 + math.exp(d))
    return w_eit, 1.0 - w_eit


def compare_models(data: LineShapeData, starts: int | None = None) -> tuple[FitOutcome, FitOutcome]:
    """Fit both models and attach the paired per-point weights."""
    eit = fit_eit_model(data, starts)
    ats = fit_ats_model(data, starts)
    w_eit, w_ats = aic_weights(eit.aic, ats.aic, data.n)
    eit.per_point_weight = w_eit
    ats.per_point_weight = w_ats
    return eit, ats


def synth_dataset(
    params: LambdaParams,
    omega_c_mhz: float,
    grid,
    noise_sigma: float,
    seed,
    omega_p_mhz: float = 0.5,
    include_mismatch: bool = True,
) -> LineShapeData:
    """Forward-model Re(t) on the grid plus seeded i.i.d. Gaussian noise.

    By default the mismatch phase stays in the data, matching what a
    measurement would hand the fitter; pass include_mismatch=False to
    rotate it out first.
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    p = params if include_mismatch else replace(params, mismatch_rad=0.0)
    drive = DriveParams(omega_p_mhz=omega_p_mhz, omega_c_mhz=omega_c_mhz)
    _, t = spectrum_arrays(eit_spectrum(p, drive, grid))
    rng = np.random.default_rng(seed)
    values = t.real + rng.normal(0.0, noise_sigma, t.size)
    return LineShapeData(omega_mhz=np.asarray(grid, dtype=float), values=values)


def replica_seed(root_seed: int, oc_index: int, replica: int) -> np.random.SeedSequence:
    """Deterministic per-task seed; parallel execution cannot change results."""
    return np.random.SeedSequence((int(root_seed), int(oc_index), int(replica)))


def mean_weights_at(
    params: LambdaParams,
    omega_c_mhz: float,
    oc_index: int,
    grid,
    noise_sigma: float,
    seed: int,
    replicas: int,
    omega_p_mhz: float = 0.5,
) -> tuple[float, float, float, float]:
    """Replica-averaged (w_eit, w_ats, rss_eit, rss_ats) at one control amplitude."""
    w_e = w_a = r_e = r_a = 0.0
    for rep in range(replicas):
        data = synth_dataset(
            params, omega_c_mhz, grid, noise_sigma,
            replica_seed(seed, oc_index, rep), omega_p_mhz,
        )
        eit, ats = compare_models(data)
        w_e += eit.per_point_weight
        w_a += ats.per_point_weight
        r_e += eit.rss
        r_a += ats.rss
    return w_e / replicas, w_a / replicas, r_e / replicas, r_a / replicas


def aic_crossover(
    params: LambdaParams,
    omega_c_grid,
    noise_sigma: float = 0.01,
    seed: int = 0,
    replicas: int = 16,
    grid=None,
    omega_p_mhz: float = 0.5,
    jobs: int = 1,
) -> tuple[float, list[tuple[float, float, float, float, float]]]:
    """Control amplitude where the averaged EIT weight crosses 0.5 from above.

    Returns (crossover_mhz, rows) with one row per control amplitude:
    (oc_mhz, rss_eit, rss_ats, w_eit, w_ats).  Raises NoCrossingError with
    the weight curve attached when no downward crossing exists.
    """
    omega_c_grid = np.asarray(omega_c_grid, dtype=float)
    if grid is None:
        grid = np.linspace(-25.0, 25.0, 201)

    tasks = list(enumerate(omega_c_grid))
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(
                pool.map(
                    _crossover_task,
                    [
                        (params, float(oc), i, np.asarray(grid), noise_sigma, seed,
                         replicas, omega_p_mhz)
                        for i, oc in tasks
                    ],
                )
            )
    else:
        results = [
            mean_weights_at(params, float(oc), i, grid, noise_sigma, seed,
                            replicas, omega_p_mhz)
            for i, oc in tasks
        ]

    rows = [
        (float(oc), r_e, r_a, w_e, w_a)
        for (_, oc), (w_e, w_a, r_e, r_a) in zip(tasks, results)
    ]
    w = np.array([r[3] for r in rows])

    start = int(np.argmax(w))
    for i in range(start, w.size - 1):
        if w[i] > 0.5 >= w[i + 1]:
            x0, x1 = omega_c_grid[i], omega_c_grid[i + 1]
            y0, y1 = w[i], w[i + 1]
            return float(x0 + (0.5 - y0) * (x1 - x0) / (y1 - y0)), rows
    raise NoCrossingError(
        "averaged EIT weight never crosses 0.5 from above on the given grid",
        curve=rows,
    )


def _crossover_task(args):
    params, oc, i, grid, noise_sigma, seed, replicas, omega_p = args
    return mean_weights_at(params, oc, i, grid, noise_sigma, seed, replicas, omega_p)

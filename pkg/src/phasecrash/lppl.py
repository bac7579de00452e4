"""Log-periodic power-law bubble model: evaluation and calibration.

The log-price model is

    ln p(t) = A + B*(tc - t)**m
            + C1*(tc - t)**m * cos(omega * ln(tc - t))
            + C2*(tc - t)**m * sin(omega * ln(tc - t)),

valid for t < tc only. The companion hazard rate is
``alpha * (tc - t)**(m - 1) * (1 + beta * cos(omega * ln(tc - t) - phi))``,
nonnegative whenever ``|beta| <= 1``.

Calibration profiles out the linear parameters: for fixed (tc, m, omega)
the best (A, B, C1, C2) solve an ordinary least-squares problem on the
four basis functions above, so the search runs over a coarse
(tc, m, omega) grid followed by Nelder-Mead refinement of the best grid
nodes. Ties in the residual are broken by lexicographic (tc, m, omega)
so parallel and serial sweeps return the same fit. The linear solve is
rank-revealing; design matrices with condition number above 1e12 raise
:class:`~phasecrash.errors.DegenerateDesignError` instead of returning
noise-amplified coefficients.

Fitting arbitrary data always yields *some* finite-residual parameters;
when a series has no log-periodic structure the improvement over a pure
power-law baseline (:func:`power_law_ssr`) is small. That ratio is the
practical guard against reading bubbles into noise: the model's seven
parameters fit almost anything.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import DegenerateDesignError, FitFailureError

__all__ = [
    "LpplParams",
    "HazardParams",
    "LpplFit",
    "SearchConfig",
    "lppl_log_price",
    "hazard_rate",
    "solve_linear_params",
    "fit_lppl",
    "power_law_ssr",
]

_MAX_CONDITION = 1e12


@dataclass(frozen=True)
class LpplParams:
    """Price-model parameters; C and phi are derived, never stored."""

    A: float
    B: float
    C1: float
    C2: float
    m: float
    omega: float
    tc: float

    def __post_init__(self):
        if not 0.0 < self.m < 1.0:
            raise ValueError(f"m must lie in (0, 1), got {self.m}")
        if self.omega <= 0.0:
            raise ValueError(f"omega must be positive, got {self.omega}")

    @property
    def C(self):
        return math.hypot(self.C1, self.C2)

    @property
    def phi(self):
        # The phase putting the oscillation in the form C*cos(omega*ln(tc-t) - phi):
        # cos expands with C1 on cos and C2 on sin exactly when phi = atan2(C2, C1).
        return math.atan2(self.C2, self.C1)


@dataclass(frozen=True)
class HazardParams:
    alpha_h: float
    beta_h: float
    m: float
    omega: float
    phi: float
    tc: float

    def __post_init__(self):
        if self.alpha_h <= 0.0:
            raise ValueError("alpha_h must be positive")
        if abs(self.beta_h) > 1.0:
            raise ValueError("|beta_h| must be <= 1 to keep the hazard nonnegative")
        if not 0.0 < self.m < 1.0:
            raise ValueError(f"m must lie in (0, 1), got {self.m}")
        if self.omega <= 0.0:
            raise ValueError("omega must be positive")


@dataclass
class LpplFit:
    params: LpplParams
    ssr: float
    n_obs: int
    grid_evals: int
    converged: bool

    def to_dict(self):
        p = self.params
        return {
            "A": p.A,
            "B": p.B,
            "C1": p.C1,
            "C2": p.C2,
            "C": p.C,
            "phi": p.phi,
            "m": p.m,
            "omega": p.omega,
            "tc": p.tc,
            "ssr": self.ssr,
            "n_obs": self.n_obs,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class SearchConfig:
    """Search bounds and grid density for :func:`fit_lppl`.

    ``tc_bounds`` defaults to (last time + spacing, last time +
    0.5 * n * spacing). Explicit ``*_grid`` tuples override the linspace
    grids, which is how supersets of a previous search are expressed.
    ``refine_top_k = 0`` disables Nelder-Mead refinement (grid only).
    """

    m_bounds: tuple = (0.1, 0.9)
    omega_bounds: tuple = (2.0, 25.0)
    tc_bounds: tuple = None
    n_tc: int = 20
    n_m: int = 9
    n_omega: int = 12
    refine_top_k: int = 5
    nm_max_iter: int = 400
    tc_grid: tuple = None
    m_grid: tuple = None
    omega_grid: tuple = None

    def __post_init__(self):
        for lo, hi in (self.m_bounds, self.omega_bounds):
            if not lo < hi:
                raise ValueError("bounds must satisfy lo < hi")
        if self.tc_bounds is not None and not self.tc_bounds[0] < self.tc_bounds[1]:
            raise ValueError("tc_bounds must satisfy lo < hi")


def _tail(params, t):
    t = np.asarray(t, dtype=float)
    if np.any(t >= params.tc):
        raise ValueError(
            f"the model is defined only before tc = {params.tc}; got t >= tc"
        )
    return params.tc - t


def lppl_log_price(params, t):
    """Model log-price at time(s) ``t``; requires ``t < tc``."""
    tail = _tail(params, t)
    f = tail**params.m
    phase = params.omega * np.log(tail)
    out = (
        params.A
        + params.B * f
        + params.C1 * f * np.cos(phase)
        + params.C2 * f * np.sin(phase)
    )
    return float(out) if np.isscalar(t) else out


def hazard_rate(params, t):
    """Crash hazard at time(s) ``t``; requires ``t < tc``."""
    tail = _tail(params, t)
    h = (
        params.alpha_h
        * tail ** (params.m - 1.0)
        * (1.0 + params.beta_h * np.cos(params.omega * np.log(tail) - params.phi))
    )
    h = np.maximum(h, 0.0)  # |beta| <= 1 keeps this exact up to roundoff
    return float(h) if np.isscalar(t) else h


def _design_matrix(times, tc, m, omega):
    tail = tc - times
    f = tail**m
    phase = omega * np.log(tail)
    return np.column_stack([np.ones_like(f), f, f * np.cos(phase), f * np.sin(phase)])


def _solve_linear(times, y, tc, m, omega):
    x = _design_matrix(times, tc, m, omega)
    beta, _, rank, sv = np.linalg.lstsq(x, y, rcond=None)
    if rank < 4 or sv[-1] == 0.0 or sv[0] / sv[-1] > _MAX_CONDITION:
        raise DegenerateDesignError(
            f"design matrix at (tc={tc}, m={m}, omega={omega}) is degenerate "
            f"(condition {np.inf if sv[-1] == 0 else sv[0] / sv[-1]:.3g})"
        )
    resid = y - x @ beta
    return beta, float(resid @ resid)


def solve_linear_params(tc, m, omega, series):
    """Exact least-squares (A, B, C1, C2, ssr) at fixed (tc, m, omega)."""
    times, y = series.times, series.log_prices
    if len(series) < 8:
        raise ValueError("need at least 8 observations for the linear subproblem")
    if tc <= times[-1]:
        raise ValueError(f"tc = {tc} must exceed every observation time")
    beta, ssr = _solve_linear(times, y, tc, m, omega)
    return beta[0], beta[1], beta[2], beta[3], ssr


def power_law_ssr(series, tc, m):
    """Residual of the oscillation-free baseline A + B*(tc - t)**m.

    Comparing this with a full fit's ``ssr`` measures how much of the fit
    quality the log-periodic terms actually contribute.
    """
    tail = tc - series.times
    if np.any(tail <= 0):
        raise ValueError(f"tc = {tc} must exceed every observation time")
    x = np.column_stack([np.ones_like(tail), tail**m])
    beta, _, _, _ = np.linalg.lstsq(x, series.log_prices, rcond=None)
    resid = series.log_prices - x @ beta
    return float(resid @ resid)


def _default_tc_bounds(times):
    spacing = float(np.median(np.diff(times)))
    last = float(times[-1])
    return last + spacing, last + 0.5 * times.size * spacing


def _grid(explicit, bounds, count):
    if explicit is not None:
        return np.asarray(explicit, dtype=float)
    return np.linspace(bounds[0], bounds[1], count)


def fit_lppl(series, search=None):
    """Calibrate the model by profiled least squares.

    Coarse grid over (tc, m, omega) with the linear subproblem solved at
    each node, then Nelder-Mead refinement of the ``refine_top_k`` best
    nodes. The returned residual never exceeds the best coarse-grid
    residual.
    """
    if search is None:
        search = SearchConfig()
    if len(series) < 30:
        raise ValueError("need at least 30 observations to fit")
    times, y = series.times, series.log_prices
    tc_bounds = search.tc_bounds or _default_tc_bounds(times)
    tc_floor = float(times[-1]) + 1e-9 * max(1.0, abs(times[-1]))

    tcs = _grid(search.tc_grid, tc_bounds, search.n_tc)
    ms = _grid(search.m_grid, search.m_bounds, search.n_m)
    omegas = _grid(search.omega_grid, search.omega_bounds, search.n_omega)

    evals = 0
    candidates = []  # (ssr, tc, m, omega, beta)
    for tc in tcs:
        if tc <= tc_floor:
            continue
        for m in ms:
            for omega in omegas:
                evals += 1
                try:
                    beta, ssr = _solve_linear(times, y, tc, m, omega)
                except DegenerateDesignError:
                    continue
                candidates.append((ssr, tc, m, omega, beta))
    if not candidates:
        raise FitFailureError("every grid node had a degenerate design matrix")
    candidates.sort(key=lambda c: c[:4])

    def objective(theta):
        tc, m, omega = theta
        if tc <= tc_floor or not 0.0 < m < 1.0 or omega <= 0.0:
            return np.inf
        try:
            return _solve_linear(times, y, tc, m, omega)[1]
        except DegenerateDesignError:
            return np.inf

    best = candidates[0]
    converged = False
    nm_bounds = [
        (tc_floor, max(tc_bounds[1], tcs.max())),
        search.m_bounds,
        search.omega_bounds,
    ]
    for ssr0, tc0, m0, omega0, _ in candidates[: search.refine_top_k]:
        res = minimize(
            objective,
            np.array([tc0, m0, omega0]),
            method="Nelder-Mead",
            bounds=nm_bounds,
            options={"maxiter": search.nm_max_iter, "xatol": 1e-6, "fatol": 1e-12},
        )
        evals += res.nfev
        if not np.isfinite(res.fun):
            continue
        converged = converged or bool(res.success)
        tc, m, omega = res.x
        try:
            beta, ssr = _solve_linear(times, y, tc, m, omega)
        except DegenerateDesignError:
            continue
        if (ssr, tc, m, omega) < (best[0], best[1], best[2], best[3]):
            best = (ssr, tc, m, omega, beta)

    ssr, tc, m, omega, beta = best
    params = LpplParams(
        A=float(beta[0]),
        B=float(beta[1]),
        C1=float(beta[2]),
        C2=float(beta[3]),
        m=float(m),
        omega=float(omega),
        tc=float(tc),
    )
    return LpplFit(
        params=params,
        ssr=float(ssr),
        n_obs=len(series),
        grid_evals=evals,
        converged=converged,
    )

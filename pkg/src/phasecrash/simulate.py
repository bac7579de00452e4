"""Euler-Maruyama simulation of the three crash routes.

Three univariate mechanisms share the scheme
``p[k+1] = p[k] + drift(p[k], t_k) * dt + diffusion(t_k) * dW[k]``:

* critical route: cubic drift ``-mu(t) + r*p - p**3`` with a ramped
  ``mu(t)`` that destroys the upper equilibrium at the fold
  ``mu* = (2r/3) * sqrt(r/3)``;
* stochastic route: fixed double-well drift ``r*p - lam*p**3`` with
  linearly growing volatility ``sigma(t) = alpha_vol * t``;
* dynamic route: zero drift, the path is a rescaled cumulative sum of a
  scheduled noise process (ramped Hurst exponent or stability index).

The multivariate system couples per-asset cubic drifts through
correlated Wiener increments with ``cov(dW_i, dW_j) = D_ij * dt``.

All simulators are pure functions of (params, n, dt, seed). The state is
checked for finiteness each step; blow-ups raise
:class:`~phasecrash.errors.SimulationOverflowError` with the step index.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SimulationOverflowError
from .noise import (
    HurstSchedule,
    StableSchedule,
    _check_seed,
    sample_alpha_stable,
    sample_gaussian_increments,
    synth_fbm,
)

__all__ = [
    "MuSchedule",
    "CptParams",
    "SptParams",
    "DptParams",
    "MultiParams",
    "SimPath",
    "simulate_cpt",
    "simulate_spt",
    "simulate_dpt",
    "simulate_multivariate",
]


@dataclass(frozen=True)
class MuSchedule:
    """Drift offset mu(t): constant, or a linear ramp over the whole run."""

    mu_start: float
    mu_end: float | None = None
    ramp: str = "linear"

    def __post_init__(self):
        if self.ramp not in ("constant", "linear"):
            raise ValueError(f"unknown ramp kind {self.ramp!r}")

    def values(self, n):
        end = self.mu_start if self.mu_end is None else self.mu_end
        if self.ramp == "constant":
            return np.full(n, self.mu_start)
        return np.linspace(self.mu_start, end, n)


@dataclass(frozen=True)
class CptParams:
    r: float
    mu_schedule: MuSchedule
    sigma: float
    p0: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


@dataclass(frozen=True)
class SptParams:
    r: float
    lam: float
    alpha_vol: float
    p0: float

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive (confining potential)")
        if self.alpha_vol < 0:
            raise ValueError("alpha_vol must be nonnegative")


@dataclass(frozen=True)
class DptParams:
    noise_spec: HurstSchedule | StableSchedule
    scale: float
    p0: float = 0.0

    def __post_init__(self):
        if not isinstance(self.noise_spec, (HurstSchedule, StableSchedule)):
            raise ValueError("noise_spec must be a HurstSchedule or StableSchedule")
        if self.scale < 0:
            raise ValueError("scale must be nonnegative")


@dataclass(frozen=True)
class MultiParams:
    """Coupled system: k assets, shared mu(t), per-asset r, lam, sigma,
    and a symmetric PSD coupling matrix with unit diagonal."""

    r: tuple
    lam: tuple
    mu_schedule: MuSchedule
    sigma: tuple
    coupling: tuple  # row tuples of the k x k matrix
    p0: tuple = None

    def __post_init__(self):
        k = len(self.r)
        if k < 2:
            raise ValueError("multivariate system needs k >= 2 assets")
        if not (len(self.lam) == len(self.sigma) == k):
            raise ValueError("r, lam, sigma must have equal length")
        d = np.asarray(self.coupling, dtype=float)
        if d.shape != (k, k):
            raise ValueError(f"coupling must be {k}x{k}")
        if not np.allclose(d, d.T):
            raise ValueError("coupling matrix must be symmetric")
        if not np.allclose(np.diag(d), 1.0):
            raise ValueError("coupling matrix must have unit diagonal")
        if any(s <= 0 for s in self.sigma):
            raise ValueError("sigma entries must be positive")
        if self.p0 is not None and len(self.p0) != k:
            raise ValueError("p0 must have one entry per asset")

    @property
    def k(self):
        return len(self.r)

    def coupling_matrix(self):
        return np.asarray(self.coupling, dtype=float)


@dataclass
class SimPath:
    """A simulated state path including the initial point."""

    values: np.ndarray
    dt: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    @property
    def times(self):
        return np.arange(self.values.size) * self.dt

    def __len__(self):
        return self.values.size

    def to_price_series(self, asset_id="sim", sample_every=1):
        """View the state path as a log-price series on its time grid.

        ``sample_every`` keeps every k-th point: integrate at a fine step
        for accuracy, observe at a coarser one. Increment statistics of
        the observed series then follow the continuous process rather
        than the per-step discretisation.
        """
        from .ews import PriceSeries

        if sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        return PriceSeries(
            self.times[::sample_every], self.values[::sample_every], asset_id
        )


def _finish(values, step, kind, params, dt, seed, n):
    if step is not None:
        raise SimulationOverflowError(
            f"{kind} simulation diverged at step {step}", step=step
        )
    record = {"kind": kind, "params": params, "n": n, "dt": dt, "seed": seed}
    return SimPath(values, dt, record)


def simulate_cpt(params, n, dt, seed):
    """Critical route: ``dp = (-mu(t) + r p - p^3) dt + sigma dW``."""
    if not isinstance(params, CptParams):
        raise ValueError("params must be CptParams")
    seed = _check_seed(seed)
    dw = sample_gaussian_increments(n, dt, seed).increments.tolist()
    mu = params.mu_schedule.values(n).tolist()
    r, sig = params.r, params.sigma
    out = np.empty(n + 1)
    out[0] = x = params.p0
    for k in range(n):
        x = x + (-mu[k] + r * x - x * x * x) * dt + sig * dw[k]
        if not math.isfinite(x):
            return _finish(None, k + 1, "cpt", params, dt, seed, n)
        out[k + 1] = x
    return _finish(out, None, "cpt", params, dt, seed, n)


def simulate_spt(params, n, dt, seed):
    """Stochastic route: double-well drift, volatility ``alpha_vol * t``."""
    if not isinstance(params, SptParams):
        raise ValueError("params must be SptParams")
    seed = _check_seed(seed)
    dw = sample_gaussian_increments(n, dt, seed).increments.tolist()
    r, lam, a = params.r, params.lam, params.alpha_vol
    out = np.empty(n + 1)
    out[0] = x = params.p0
    for k in range(n):
        x = x + (r * x - lam * x * x * x) * dt + (a * k * dt) * dw[k]
        if not math.isfinite(x):
            return _finish(None, k + 1, "spt", params, dt, seed, n)
        out[k + 1] = x
    return _finish(out, None, "spt", params, dt, seed, n)


def simulate_dpt(params, n, dt, seed):
    """Dynamic route: ``p(t) = p0 + scale * X(t)`` for scheduled noise X."""
    if not isinstance(params, DptParams):
        raise ValueError("params must be DptParams")
    seed = _check_seed(seed)
    if isinstance(params.noise_spec, HurstSchedule):
        noise = synth_fbm(n, params.noise_spec, dt, seed)
    else:
        noise = sample_alpha_stable(n, params.noise_spec, dt, seed)
    values = params.p0 + params.scale * noise.path()
    if not np.all(np.isfinite(values)):
        step = int(np.argmax(~np.isfinite(values)))
        return _finish(None, step, "dpt", params, dt, seed, n)
    return _finish(values, None, "dpt", params, dt, seed, n)


def simulate_multivariate(params, n, dt, seed):
    """Coupled cubic-drift system with correlated Wiener noise.

    Gaussian increments are mixed by the Cholesky factor of the coupling
    matrix, so ``cov(dW_i, dW_j) = D_ij * dt`` exactly.
    """
    if not isinstance(params, MultiParams):
        raise ValueError("params must be MultiParams")
    seed = _check_seed(seed)
    d = params.coupling_matrix()
    try:
        chol = np.linalg.cholesky(d)
    except np.linalg.LinAlgError as exc:
        raise ValueError("coupling matrix is not positive semi-definite") from exc
    k = params.k
    rng = np.random.default_rng(seed)
    dw = (rng.standard_normal((n, k)) @ chol.T) * np.sqrt(dt)
    mu = params.mu_schedule.values(n)
    r = np.asarray(params.r, dtype=float)
    lam = np.asarray(params.lam, dtype=float)
    sig = np.asarray(params.sigma, dtype=float)
    p0 = np.zeros(k) if params.p0 is None else np.asarray(params.p0, dtype=float)

    out = np.empty((n + 1, k))
    out[0] = x = p0
    for step in range(n):
        x = x + (-mu[step] + r * x - lam * x**3) * dt + sig * dw[step]
        if not np.all(np.isfinite(x)):
            return _finish(None, step + 1, "multi", params, dt, seed, n)
        out[step + 1] = x

    record = {"kind": "multi", "params": params, "n": n, "dt": dt, "seed": seed}
    return [
        SimPath(out[:, i].copy(), dt, dict(record, asset=i)) for i in range(k)
    ]

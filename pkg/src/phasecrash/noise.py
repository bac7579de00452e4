"""Seeded generators for the driving-noise processes.

Three families are provided:

* Wiener increments: iid Gaussian, variance ``dt`` per step.
* Symmetric alpha-stable increments via the Chambers-Mallows-Stuck
  transform, with a fixed or linearly ramped stability index. The
  per-step scale is ``scale * dt ** (1 / alpha)``.
* Fractional Brownian motion. Constant-Hurst paths are exact Gaussian
  draws: Cholesky factorisation of the increment covariance up to 4096
  steps, circulant embedding (Davies-Harte) beyond that, falling back to
  Cholesky when the embedding is not nonnegative. Ramped-Hurst paths are
  drawn by Cholesky factorisation of the kernel
  ``R(s, t) = (s**(H(s)+H(t)) + t**(H(s)+H(t)) - |t-s|**(H(s)+H(t))) / 2``.

Every generator is a pure function of its parameters and a 64-bit seed:
same inputs, bit-identical output. For batches, derive one stream per
path with :func:`rng_for_path`, which keys stream ``i`` of master seed
``s`` by ``numpy.random.SeedSequence([s, i])``; results are then
independent of scheduling order.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import GenerationError

__all__ = [
    "NoisePath",
    "HurstSchedule",
    "StableSchedule",
    "rng_for_path",
    "sample_gaussian_increments",
    "sample_alpha_stable",
    "synth_fbm",
]

MAX_SEED = 2**64 - 1

# Exact Cholesky below this size; circulant embedding above.
_CHOLESKY_LIMIT = 4096

_COV_JITTER = 1e-10


def _check_seed(seed):
    if not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def rng_for_path(seed, index):
    """Independent generator for path ``index`` under master ``seed``."""
    seed = _check_seed(seed)
    if index < 0:
        raise ValueError("path index must be nonnegative")
    return np.random.default_rng(np.random.SeedSequence([seed, int(index)]))


@dataclass(frozen=True)
class HurstSchedule:
    """Hurst exponent over the path: constant, or a linear ramp between
    step indices ``t_start`` and ``t_end`` (flat outside the ramp)."""

    h_start: float
    h_end: float | None = None
    ramp: str = "constant"
    t_start: int = 0
    t_end: int | None = None

    def __post_init__(self):
        if self.ramp not in ("constant", "linear"):
            raise ValueError(f"unknown ramp kind {self.ramp!r}")
        end = self.h_start if self.h_end is None else self.h_end
        for h in (self.h_start, end):
            if not 0.0 < h < 1.0:
                raise ValueError(f"Hurst exponent must lie in (0, 1), got {h}")
        if self.ramp == "linear":
            if self.t_end is not None and self.t_start >= self.t_end:
                raise ValueError("t_start must be < t_end for a linear ramp")

    def values(self, n):
        """Per-step Hurst exponents for a path of ``n`` increments."""
        end = self.h_start if self.h_end is None else self.h_end
        if self.ramp == "constant":
            return np.full(n, self.h_start)
        t_end = n if self.t_end is None else min(self.t_end, n)
        t_start = min(self.t_start, t_end - 1)
        h = np.full(n, self.h_start)
        span = t_end - t_start
        ramp = self.h_start + (end - self.h_start) * (
            np.arange(span) + 1.0
        ) / span
        h[t_start:t_end] = ramp
        h[t_end:] = end
        return h

    def is_constant(self):
        return self.ramp == "constant" or self.h_end in (None, self.h_start)


@dataclass(frozen=True)
class StableSchedule:
    """Stability index over the path: constant, or a linear ramp from
    ``alpha_start`` to ``alpha_end`` across the whole path."""

    alpha_start: float
    alpha_end: float | None = None
    scale: float = 1.0
    ramp: str = "constant"

    def __post_init__(self):
        if self.ramp not in ("constant", "linear"):
            raise ValueError(f"unknown ramp kind {self.ramp!r}")
        end = self.alpha_start if self.alpha_end is None else self.alpha_end
        for a in (self.alpha_start, end):
            if not 0.0 < a <= 2.0:
                raise ValueError(f"stability index must lie in (0, 2], got {a}")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def values(self, n):
        """Per-step stability indices for a path of ``n`` increments."""
        end = self.alpha_start if self.alpha_end is None else self.alpha_end
        if self.ramp == "constant":
            return np.full(n, self.alpha_start)
        return np.linspace(self.alpha_start, end, n)


@dataclass
class NoisePath:
    """A seeded realisation of a driving process, stored as increments."""

    increments: np.ndarray
    dt: float
    kind: str  # "wiener" | "fbm" | "alpha_stable"
    schedule: object = None

    def __post_init__(self):
        self.increments = np.asarray(self.increments, dtype=float)
        if self.increments.size < 1:
            raise ValueError("a noise path needs at least one increment")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    def path(self):
        """Cumulative path X with X(0) = 0, length ``len(increments) + 1``."""
        out = np.empty(self.increments.size + 1)
        out[0] = 0.0
        np.cumsum(self.increments, out=out[1:])
        return out

    def __len__(self):
        return self.increments.size


def _check_n_dt(n, dt):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    return int(n), float(dt)


def sample_gaussian_increments(n, dt, seed):
    """``n`` iid Gaussian increments with mean zero and variance ``dt``."""
    n, dt = _check_n_dt(n, dt)
    rng = np.random.default_rng(_check_seed(seed))
    z = rng.standard_normal(n)
    return NoisePath(z * np.sqrt(dt), dt, "wiener")


def sample_alpha_stable(n, schedule, dt, seed):
    """Symmetric alpha-stable increments with per-step index from ``schedule``.

    Uses the Chambers-Mallows-Stuck transform
    ``X = sin(aU) / cos(U)**(1/a) * (cos((1-a)U) / E)**((1-a)/a)``
    with U uniform on (-pi/2, pi/2) and E unit exponential, which is the
    standard symmetric stable law for every a in (0, 2] (Cauchy at a = 1,
    Gaussian with variance 2 at a = 2). Increment ``i`` is scaled by
    ``schedule.scale * dt**(1/alpha_i)``.
    """
    if not isinstance(schedule, StableSchedule):
        raise ValueError("schedule must be a StableSchedule")
    n, dt = _check_n_dt(n, dt)
    rng = np.random.default_rng(_check_seed(seed))
    alpha = schedule.values(n)
    u = (rng.random(n) - 0.5) * np.pi
    e = rng.standard_exponential(n)
    x = (np.sin(alpha * u) / np.cos(u) ** (1.0 / alpha)) * (
        np.cos((1.0 - alpha) * u) / e
    ) ** ((1.0 - alpha) / alpha)
    inc = schedule.scale * dt ** (1.0 / alpha) * x
    return NoisePath(inc, dt, "alpha_stable", schedule)


def _fgn_autocov(n_lags, h):
    """Autocovariance of unit-step fractional Gaussian noise, lags 0..n_lags."""
    k = np.arange(n_lags + 1, dtype=float)
    return 0.5 * (
        np.abs(k + 1) ** (2 * h) - 2 * k ** (2 * h) + np.abs(k - 1) ** (2 * h)
    )


@lru_cache(maxsize=4)
def _fgn_cholesky_factor(h, n):
    gamma = _fgn_autocov(n - 1, h)
    idx = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    return np.linalg.cholesky(gamma[idx])


@lru_cache(maxsize=4)
def _fgn_embedding_weights(h, n):
    """sqrt(eigenvalues / M) of the circulant embedding, or None if the
    embedding is not nonnegative."""
    gamma = _fgn_autocov(n, h)
    row = np.concatenate([gamma[:n], [gamma[n]], gamma[1:n][::-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -1e-8 * lam.max():
        return None
    return np.sqrt(np.clip(lam, 0.0, None) / row.size)


def _fgn_constant(h, n, rng):
    """Unit-step fractional Gaussian noise, exact in distribution."""
    if n <= _CHOLESKY_LIMIT:
        return _fgn_cholesky_factor(h, n) @ rng.standard_normal(n)
    w = _fgn_embedding_weights(h, n)
    if w is None:
        return _fgn_cholesky_factor(h, n) @ rng.standard_normal(n)
    m = w.size
    z = rng.standard_normal(2 * m)
    spec = w * (z[:m] + 1j * z[m:])
    return np.fft.fft(spec).real[:n]


@lru_cache(maxsize=4)
def _mbm_cholesky_factor(schedule, n, dt):
    h = schedule.values(n)
    t = np.arange(1, n + 1) * dt
    hs = h[:, None] + h[None, :]
    s, tt = t[:, None], t[None, :]
    cov = 0.5 * (s**hs + tt**hs - np.abs(tt - s) ** hs)
    for jitter in (0.0, _COV_JITTER, _COV_JITTER * max(1.0, cov[-1, -1])):
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(n))
        except np.linalg.LinAlgError:
            continue
    raise GenerationError(
        f"covariance for {schedule} not positive definite after jitter",
        schedule=schedule,
    )


def synth_fbm(n, schedule, dt, seed):
    """Fractional Brownian motion increments under a Hurst schedule.

    Constant schedules yield exact fBM with
    ``Cov[X(s), X(t)] = (|s|**2H + |t|**2H - |t-s|**2H) / 2`` in units
    where dt = 1, scaling as ``dt**2H``. Ramped schedules draw the path
    from the local-exponent kernel documented in the module docstring.
    """
    if not isinstance(schedule, HurstSchedule):
        raise ValueError("schedule must be a HurstSchedule")
    n, dt = _check_n_dt(n, dt)
    rng = np.random.default_rng(_check_seed(seed))
    if schedule.is_constant():
        inc = _fgn_constant(schedule.h_start, n, rng) * dt**schedule.h_start
    else:
        path = _mbm_cholesky_factor(schedule, n, dt) @ rng.standard_normal(n)
        inc = np.diff(path, prepend=0.0)
    return NoisePath(inc, dt, "fbm", schedule)

"""Rolling early-warning-signal estimators on log-price series.

Moment statistics (volatility, skewness, lag-1 autocorrelation,
cross-covariance) run on log-returns: a window of size ``w`` covers ``w``
consecutive returns and is stamped with the time of the price that closes
the window. Scaling statistics (the anomalous-dimension estimator, the
generalized Hurst exponents, the conformality index) run on the log-price
path itself: a window covers ``w`` consecutive prices and is stamped with
the last one. Both families advance by ``stride`` observations, so stride
``s`` output is exactly the stride-1 output subsampled every ``s`` windows.

The scaling exponent of a window is estimated from structure functions:
``S_q(tau) = mean_t |x(t+tau) - x(t)|**q`` over the lags in ``tau_grid``,
with ``log S_q`` regressed on ``log tau``; the reported exponent is
``slope / q``. Second order (``q = 2``) is the anomalous-dimension
estimate, where self-similar scaling with exponent ``D`` gives slope
``2 D``; additive constants are absorbed into the regression intercept.
The conformality index is the standard deviation across ``tau_grid`` of
the per-lag exponents implied by that same fit: zero for an exact power
law, large when scaling is broken inside the window.

Windows without enough signal (zero variance, overflowing moments) yield
NaN, which downstream trend statistics skip.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError

__all__ = [
    "PriceSeries",
    "WindowConfig",
    "EwsSeries",
    "SIGNALS",
    "rolling_volatility",
    "rolling_skewness",
    "rolling_lag1_autocorr",
    "anomalous_dimension",
    "generalized_hurst",
    "conformality_index",
    "cross_covariance",
]

VOLATILITY = "volatility"
SKEWNESS = "skewness"
LAG1_AUTOCORR = "lag1_autocorr"
ANOMALOUS_DIM = "anomalous_dim"
CONFORMALITY = "conformality"
CROSS_COV = "cross_cov"

#: Valid signal names; generalized Hurst exponents appear as "ghe<n>".
SIGNALS = frozenset(
    [VOLATILITY, SKEWNESS, LAG1_AUTOCORR, ANOMALOUS_DIM, CONFORMALITY, CROSS_COV]
)


def ghe_signal(order):
    return f"ghe{int(order)}"


@dataclass
class PriceSeries:
    """Timestamped log-price path for one asset."""

    times: np.ndarray
    log_prices: np.ndarray
    id: str = ""
    dates: tuple = None  # original ISO dates when loaded from CSV

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.log_prices = np.asarray(self.log_prices, dtype=float)
        if self.times.shape != self.log_prices.shape or self.times.ndim != 1:
            raise ValueError("times and log_prices must be 1-d and equal length")
        if self.times.size >= 2 and not np.all(np.diff(self.times) > 0):
            raise ValueError(f"timestamps of {self.id!r} must be strictly increasing")
        if not np.all(np.isfinite(self.log_prices)):
            raise ValueError(f"log-prices of {self.id!r} must be finite")

    def __len__(self):
        return self.times.size

    def returns(self):
        return np.diff(self.log_prices)

    def slice(self, start, stop):
        """Sub-series over observation indices [start, stop)."""
        dates = None if self.dates is None else tuple(self.dates[start:stop])
        return PriceSeries(
            self.times[start:stop], self.log_prices[start:stop], self.id, dates
        )


@dataclass(frozen=True)
class WindowConfig:
    """Rolling-window layout shared by the estimators.

    ``window`` counts returns for moment statistics and prices for
    scaling statistics; ``tau_grid`` holds the structure-function lags
    and ``orders`` the generalized-Hurst orders. ``detrend`` switches the
    scaling windows from demeaning to linear detrending (drifts bias
    structure functions at large lags).
    """

    window: int = 252
    stride: int = 5
    tau_grid: tuple = (2, 4, 8, 16, 32)
    orders: tuple = (1, 2)
    detrend: bool = False

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        taus = tuple(int(t) for t in self.tau_grid)
        if len(taus) == 0:
            raise ValueError("tau_grid must be nonempty")
        if any(t < 2 for t in taus) or any(
            b <= a for a, b in zip(taus, taus[1:])
        ):
            raise ValueError("tau_grid must be strictly increasing with entries >= 2")
        if any(int(q) < 1 for q in self.orders):
            raise ValueError("orders must be positive integers")
        object.__setattr__(self, "tau_grid", taus)
        object.__setattr__(self, "orders", tuple(int(q) for q in self.orders))

    def check_scaling(self):
        """Lag-vs-window constraint, binding only where tau_grid is used.

        Moment statistics never touch tau_grid, so a small window paired
        with the default lags stays legal for them.
        """
        if self.window <= 4 * max(self.tau_grid):
            raise ValueError(
                f"window {self.window} must exceed 4 * max(tau_grid) = "
                f"{4 * max(self.tau_grid)} for scaling estimators"
            )

    @classmethod
    def scaling_default(cls):
        """Default layout for the scaling estimators: window 512,
        lags 2..32, stride 5."""
        return cls(window=512, stride=5, tau_grid=(2, 4, 8, 16, 32))


@dataclass
class EwsSeries:
    """Time-indexed rolling estimate of one early-warning signal."""

    times: np.ndarray
    values: np.ndarray
    signal: str
    id: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have equal length")

    def __len__(self):
        return self.times.size

    @property
    def missing(self):
        return ~np.isfinite(self.values)


def _return_windows(series, cfg, min_window):
    if cfg.window < min_window:
        raise ValueError(f"window must be >= {min_window}, got {cfg.window}")
    if len(series) < cfg.window + 1:
        raise ValueError(
            f"series {series.id!r} has {len(series)} observations, "
            f"needs at least window + 1 = {cfg.window + 1}"
        )
    r = series.returns()
    starts = np.arange(0, r.size - cfg.window + 1, cfg.stride)
    times = series.times[starts + cfg.window]
    return r, starts, times


def _price_windows(series, cfg):
    cfg.check_scaling()
    if len(series) < cfg.window:
        raise ValueError(
            f"series {series.id!r} has {len(series)} observations, "
            f"needs at least window = {cfg.window}"
        )
    x = series.log_prices
    starts = np.arange(0, x.size - cfg.window + 1, cfg.stride)
    times = series.times[starts + cfg.window - 1]
    return x, starts, times


def rolling_volatility(series, cfg):
    """Sample standard deviation (ddof=1) of log-returns per window."""
    r, starts, times = _return_windows(series, cfg, min_window=2)
    vals = np.array([r[s : s + cfg.window].std(ddof=1) for s in starts])
    return EwsSeries(times, vals, VOLATILITY, series.id)


def _adjusted_skew(x):
    n = x.size
    c = x - x.mean()
    m2 = np.mean(c * c)
    if m2 == 0.0:
        return np.nan
    g1 = np.mean(c * c * c) / m2**1.5
    return g1 * np.sqrt(n * (n - 1.0)) / (n - 2.0)


def rolling_skewness(series, cfg):
    """Adjusted Fisher-Pearson skewness of log-returns per window."""
    r, starts, times = _return_windows(series, cfg, min_window=3)
    vals = np.array([_adjusted_skew(r[s : s + cfg.window]) for s in starts])
    return EwsSeries(times, vals, SKEWNESS, series.id)


def _lag1_pearson(x):
    a, b = x[:-1], x[1:]
    da, db = a - a.mean(), b - b.mean()
    va, vb = np.dot(da, da), np.dot(db, db)
    if va == 0.0 or vb == 0.0:
        return np.nan
    return np.dot(da, db) / np.sqrt(va * vb)


def rolling_lag1_autocorr(series, cfg):
    """Pearson correlation of consecutive log-return pairs per window."""
    r, starts, times = _return_windows(series, cfg, min_window=4)
    vals = np.array([_lag1_pearson(r[s : s + cfg.window]) for s in starts])
    return EwsSeries(times, vals, LAG1_AUTOCORR, series.id)


def _prepare_window(x, detrend):
    if detrend:
        t = np.arange(x.size, dtype=float)
        slope, intercept = np.polyfit(t, x, 1)
        return x - (slope * t + intercept)
    return x - x.mean()


def _structure_fit(x, taus, order):
    """(slope, intercept) of log S_order(tau) on log tau, or None."""
    svals = np.empty(len(taus))
    with np.errstate(over="ignore"):  # overflowing moments become missing
        for i, tau in enumerate(taus):
            d = x[tau:] - x[:-tau]
            svals[i] = np.mean(np.abs(d) ** order)
    if not np.all(np.isfinite(svals)) or np.any(svals <= 0.0):
        return None, svals
    fit = np.polyfit(np.log(taus), np.log(svals), 1)
    return fit, svals


def _rolling_exponent(series, cfg, order):
    x, starts, times = _price_windows(series, cfg)
    vals = np.full(starts.size, np.nan)
    for j, s in enumerate(starts):
        w = _prepare_window(x[s : s + cfg.window], cfg.detrend)
        fit, _ = _structure_fit(w, cfg.tau_grid, order)
        if fit is not None:
            vals[j] = fit[0] / order
    return times, vals


def anomalous_dimension(series, cfg):
    """Second-order structure-function scaling exponent per window."""
    times, vals = _rolling_exponent(series, cfg, order=2)
    return EwsSeries(times, vals, ANOMALOUS_DIM, series.id)


def generalized_hurst(series, cfg):
    """Per-order scaling exponents; order 2 matches anomalous_dimension."""
    if not cfg.orders:
        raise ValueError("cfg.orders must be nonempty")
    out = []
    for order in cfg.orders:
        times, vals = _rolling_exponent(series, cfg, order)
        out.append(EwsSeries(times, vals, ghe_signal(order), series.id))
    return out


def conformality_index(series, cfg):
    """Dispersion of per-lag exponents around the second-order fit.

    For each window the second-order fit supplies an intercept; the
    per-lag exponent ``(log S_2(tau) - intercept) / (2 log tau)`` would be
    constant under exact power-law scaling, and the reported index is the
    sample standard deviation of those values across ``tau_grid``.
    """
    if len(cfg.tau_grid) < 3:
        raise ValueError("conformality index needs at least 3 lags in tau_grid")
    x, starts, times = _price_windows(series, cfg)
    log_tau = np.log(np.asarray(cfg.tau_grid, dtype=float))
    vals = np.full(starts.size, np.nan)
    for j, s in enumerate(starts):
        w = _prepare_window(x[s : s + cfg.window], cfg.detrend)
        fit, svals = _structure_fit(w, cfg.tau_grid, order=2)
        if fit is None:
            continue
        per_tau = (np.log(svals) - fit[1]) / (2.0 * log_tau)
        vals[j] = per_tau.std(ddof=1)
    return EwsSeries(times, vals, CONFORMALITY, series.id)


def cross_covariance(series_list, cfg):
    """Mean pairwise covariance of log-returns across an aligned panel."""
    if len(series_list) < 2:
        raise ValueError("cross_covariance needs at least 2 series")
    ref = series_list[0]
    bad = [
        s.id
        for s in series_list[1:]
        if len(s) != len(ref) or not np.array_equal(s.times, ref.times)
    ]
    if bad:
        raise AlignmentError(
            f"series not aligned with {ref.id!r}: {bad}", ids=bad
        )
    _, starts, times = _return_windows(ref, cfg, min_window=2)
    rets = np.stack([s.returns() for s in series_list])
    k = rets.shape[0]
    iu = np.triu_indices(k, 1)
    vals = np.empty(starts.size)
    for j, s in enumerate(starts):
        cov = np.cov(rets[:, s : s + cfg.window], ddof=1)
        vals[j] = cov[iu].mean()
    label = "|".join(s.id for s in series_list) if k <= 4 else f"panel[{k}]"
    return EwsSeries(times, vals, CROSS_COV, label)

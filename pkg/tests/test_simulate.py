import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.stats import ks_2samp, kurtosis, wilcoxon

import phasecrash as pc
from phasecrash.errors import SimulationOverflowError
from phasecrash.io import derive_seed


def _const_mu(value=0.0):
    return pc.MuSchedule(value, value, ramp="constant")


def _rk4_autonomous(f, x0, n, dt):
    x = x0
    for _ in range(n):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6
    return x


# ------------------------------------------------------------------- CPT


def test_cpt_zero_noise_fixed_point():
    params = pc.CptParams(r=1.0, mu_schedule=_const_mu(0.0), sigma=0.0, p0=1.0)
    path = pc.simulate_cpt(params, 2000, 0.01, 1)  # n*dt = 20
    assert abs(path.values[-1] - 1.0) < 1e-6
    params = pc.CptParams(r=1.0, mu_schedule=_const_mu(0.0), sigma=0.0, p0=1.5)
    path = pc.simulate_cpt(params, 2000, 0.01, 1)
    assert abs(path.values[-1] - 1.0) < 1e-6


def test_cpt_zero_noise_matches_rk4():
    params = pc.CptParams(r=1.0, mu_schedule=_const_mu(0.2), sigma=0.0, p0=1.5)
    path = pc.simulate_cpt(params, 5000, 1e-4, 1)
    ref = _rk4_autonomous(lambda x: -0.2 + x - x**3, 1.5, 500, 1e-3)
    assert abs(path.values[-1] - ref) < 1e-4


def test_cpt_fold_exit_to_lower_branch():
    # ramp past the fold: upper equilibrium vanishes, path settles on the
    # lower branch found by an independent root-finding oracle
    params = pc.CptParams(
        r=1.0, mu_schedule=pc.MuSchedule(0.0, 0.5), sigma=0.0, p0=1.0
    )
    path = pc.simulate_cpt(params, 20_000, 0.01, 1)
    lower = brentq(lambda p: -0.5 + p - p**3, -2.0, -1.0)
    assert abs(path.values[-1] - lower) < 1e-2
    assert path.values[0] == 1.0


def test_cpt_fold_location():
    # mu at loss of stability vs the oracle from r - 3p^2 = 0, mu = rp - p^3
    p_fold = brentq(lambda p: 1.0 - 3 * p**2, 0.0, 1.0)
    mu_star = p_fold - p_fold**3
    n = 70_000
    params = pc.CptParams(
        r=1.0, mu_schedule=pc.MuSchedule(0.35, 0.42), sigma=0.0, p0=1.0
    )
    path = pc.simulate_cpt(params, n, 0.01, 1)
    mu = params.mu_schedule.values(n)
    cross = int(np.argmax(path.values[1:] < 0.0))
    assert path.values[1:][cross] < 0.0
    assert abs(mu[cross] - mu_star) / mu_star < 0.02


def test_cpt_determinism():
    params = pc.CptParams(r=1.0, mu_schedule=pc.MuSchedule(0.0, 0.3), sigma=0.2, p0=1.0)
    a = pc.simulate_cpt(params, 500, 0.01, 77)
    b = pc.simulate_cpt(params, 500, 0.01, 77)
    assert np.array_equal(a.values, b.values)


def test_cpt_overflow_reports_step():
    params = pc.CptParams(r=1.0, mu_schedule=_const_mu(0.0), sigma=0.0, p0=3.0)
    with pytest.raises(SimulationOverflowError) as exc:
        pc.simulate_cpt(params, 100, 1.0, 1)
    assert exc.value.step >= 1


def test_cpt_odd_symmetry():
    # drift is odd under (p, mu) -> (-p, -mu): zero-noise paths negate exactly
    up = pc.CptParams(r=1.0, mu_schedule=pc.MuSchedule(0.1, 0.3), sigma=0.0, p0=1.2)
    dn = pc.CptParams(r=1.0, mu_schedule=pc.MuSchedule(-0.1, -0.3), sigma=0.0, p0=-1.2)
    a = pc.simulate_cpt(up, 1000, 0.01, 1)
    b = pc.simulate_cpt(dn, 1000, 0.01, 1)
    assert np.array_equal(a.values, -b.values)


def test_cpt_weak_convergence_in_dt():
    params = pc.CptParams(r=1.0, mu_schedule=_const_mu(0.1), sigma=0.1, p0=1.0)
    t_final, reps = 2.0, 1000
    coarse = np.array(
        [
            pc.simulate_cpt(params, 200, t_final / 200, derive_seed(7, i)).values[-1]
            for i in range(reps)
        ]
    )
    fine = np.array(
        [
            pc.simulate_cpt(params, 400, t_final / 400, derive_seed(8, i)).values[-1]
            for i in range(reps)
        ]
    )
    se = np.sqrt(coarse.var(ddof=1) / reps + fine.var(ddof=1) / reps)
    assert abs(coarse.mean() - fine.mean()) < 3 * se


# ------------------------------------------------------------------- SPT


def test_spt_zero_noise_stays_in_basin():
    params = pc.SptParams(r=1.0, lam=1.0, alpha_vol=0.0, p0=1.0)
    path = pc.simulate_spt(params, 5000, 0.01, 3)
    assert np.all(path.values > 0.5)
    assert abs(path.values[-1] - 1.0) < 1e-6  # well bottom at sqrt(r/lam)


def test_spt_zero_noise_matches_rk4():
    params = pc.SptParams(r=1.0, lam=2.0, alpha_vol=0.0, p0=0.4)
    path = pc.simulate_spt(params, 5000, 1e-4, 1)
    ref = _rk4_autonomous(lambda x: x - 2.0 * x**3, 0.4, 500, 1e-3)
    assert abs(path.values[-1] - ref) < 1e-4


def test_spt_crossing_probability_monotone_in_ramp_slope():
    # growing volatility tunnels between wells; horizon short enough that
    # the crossing fractions stay well below saturation
    fractions = []
    for a in (0.01, 0.05, 0.1):
        params = pc.SptParams(r=1.0, lam=1.0, alpha_vol=a, p0=1.0)
        crossed = 0
        for i in range(500):
            path = pc.simulate_spt(params, 2000, 0.01, derive_seed(77, i))
            crossed += bool(np.any(path.values < 0.0))
        fractions.append(crossed / 500)
    assert fractions[0] < fractions[1] < fractions[2]


def test_spt_volatility_trend():
    params = pc.SptParams(r=1.0, lam=1.0, alpha_vol=0.008, p0=1.0)
    cfg = pc.WindowConfig(window=200, stride=40, tau_grid=(2, 4, 8, 16))
    taus = []
    for i in range(100):
        series = pc.simulate_spt(params, 10_000, 0.01, derive_seed(202, i)).to_price_series("spt")
        taus.append(pc.kendall_tau_trend(pc.rolling_volatility(series, cfg))[0])
    assert wilcoxon(taus, alternative="greater").pvalue < 0.01


def test_spt_validation():
    with pytest.raises(ValueError):
        pc.SptParams(r=1.0, lam=0.0, alpha_vol=0.1, p0=1.0)


# ------------------------------------------------------------------- DPT


def test_dpt_h05_reduces_to_brownian():
    sigma = 0.02
    dpt = pc.DptParams(pc.HurstSchedule(0.5), scale=sigma)
    cpt = pc.CptParams(r=0.0, mu_schedule=_const_mu(0.0), sigma=sigma, p0=0.0)
    a = np.diff(pc.simulate_dpt(dpt, 20_000, 0.01, 5).values)
    b = np.diff(pc.simulate_cpt(cpt, 20_000, 0.01, 6).values)
    assert ks_2samp(a, b).pvalue > 0.01


def test_dpt_hurst_ramp_scaling_trend(dpt_hurst_trend_taus):
    assert wilcoxon(dpt_hurst_trend_taus, alternative="greater").pvalue < 0.01


def test_dpt_stable_ramp_fattens_tails():
    spec = pc.DptParams(pc.StableSchedule(2.0, 1.2, ramp="linear", scale=1.0), scale=1.0)
    wins = 0
    for i in range(100):
        path = pc.simulate_dpt(spec, 4000, 1.0, derive_seed(88, i))
        r = np.diff(path.values)
        wins += kurtosis(r[-400:]) > kurtosis(r[:400])
    assert wins >= 95


def test_dpt_determinism_and_p0():
    spec = pc.DptParams(pc.HurstSchedule(0.6), scale=0.5, p0=3.0)
    a = pc.simulate_dpt(spec, 100, 1.0, 9)
    b = pc.simulate_dpt(spec, 100, 1.0, 9)
    assert np.array_equal(a.values, b.values)
    assert a.values[0] == 3.0


# ----------------------------------------------------------- multivariate


def _coupling(k, rho):
    return tuple(tuple(1.0 if i == j else rho for j in range(k)) for i in range(k))


def test_multi_identity_coupling_uncorrelated():
    params = pc.MultiParams(
        r=(0.0, 0.0),
        lam=(0.0, 0.0),
        mu_schedule=_const_mu(0.0),
        sigma=(0.1, 0.1),
        coupling=_coupling(2, 0.0),
    )
    paths = pc.simulate_multivariate(params, 10_000, 0.01, 42)
    r0, r1 = (np.diff(p.values) for p in paths)
    assert abs(np.corrcoef(r0, r1)[0, 1]) < 0.03


def test_multi_coupled_increment_correlation():
    # flat potential region: increments are Cholesky-mixed Gaussians
    params = pc.MultiParams(
        r=(0.0, 0.0),
        lam=(0.0, 0.0),
        mu_schedule=_const_mu(0.0),
        sigma=(0.05, 0.05),
        coupling=_coupling(2, 0.8),
    )
    paths = pc.simulate_multivariate(params, 10_000, 0.01, 43)
    r0, r1 = (np.diff(p.values) for p in paths)
    assert abs(np.corrcoef(r0, r1)[0, 1] - 0.8) < 0.05


def test_multi_not_psd_rejected():
    with pytest.raises(ValueError):
        params = pc.MultiParams(
            r=(1.0, 1.0),
            lam=(1.0, 1.0),
            mu_schedule=_const_mu(0.0),
            sigma=(0.1, 0.1),
            coupling=_coupling(2, 1.5),
        )
        pc.simulate_multivariate(params, 10, 0.01, 1)


def test_multi_coupling_validation():
    with pytest.raises(ValueError):
        pc.MultiParams(
            r=(1.0,),
            lam=(1.0,),
            mu_schedule=_const_mu(0.0),
            sigma=(0.1,),
            coupling=((1.0,),),
        )
    with pytest.raises(ValueError):
        pc.MultiParams(
            r=(1.0, 1.0),
            lam=(1.0, 1.0),
            mu_schedule=_const_mu(0.0),
            sigma=(0.1, 0.1),
            coupling=((1.0, 0.2), (0.3, 1.0)),
        )


def test_multi_cross_covariance_trend_toward_fold():
    # lighter version of the acceptance run (30 seeds)
    params = pc.MultiParams(
        r=(1.0,) * 4,
        lam=(1.0,) * 4,
        mu_schedule=pc.MuSchedule(0.0, 0.36),
        sigma=(0.03,) * 4,
        coupling=_coupling(4, 0.5),
        p0=(1.0,) * 4,
    )
    cfg = pc.WindowConfig(window=150, stride=15, tau_grid=(2, 4, 8, 16))
    taus = []
    for i in range(30):
        paths = pc.simulate_multivariate(params, 20_000, 0.02, derive_seed(22, i))
        panel = [p.to_price_series(f"a{j}", sample_every=10) for j, p in enumerate(paths)]
        taus.append(pc.kendall_tau_trend(pc.cross_covariance(panel, cfg))[0])
    assert wilcoxon(taus, alternative="greater").pvalue < 0.01


def test_multi_determinism():
    params = pc.MultiParams(
        r=(1.0, 1.0),
        lam=(1.0, 1.0),
        mu_schedule=_const_mu(0.1),
        sigma=(0.1, 0.1),
        coupling=_coupling(2, 0.5),
        p0=(1.0, 1.0),
    )
    a = pc.simulate_multivariate(params, 200, 0.01, 11)
    b = pc.simulate_multivariate(params, 200, 0.01, 11)
    for pa, pb in zip(a, b):
        assert np.array_equal(pa.values, pb.values)


def test_sample_every_observation_grid():
    params = pc.CptParams(r=1.0, mu_schedule=_const_mu(0.0), sigma=0.1, p0=1.0)
    path = pc.simulate_cpt(params, 100, 0.01, 3)
    series = path.to_price_series("s", sample_every=10)
    assert len(series) == 11
    assert np.array_equal(series.log_prices, path.values[::10])
    assert np.allclose(np.diff(series.times), 0.1)

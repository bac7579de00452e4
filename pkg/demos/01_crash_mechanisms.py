"""Three routes to a crash, one rolling-statistics fingerprint each.

Simulates the critical route (drift ramped toward the fold), the
stochastic route (volatility ramped in a fixed double well), and the
dynamic route (noise law itself evolving), then prints the Kendall trend
of each early-warning signal so the discriminating pattern is visible:

* critical:   lag-1 autocorrelation and volatility both rise
* stochastic: volatility rises, autocorrelation stays flat
* dynamic:    scaling exponent rises, autocorrelation stays flat
"""

import numpy as np

import phasecrash as pc
from phasecrash.io import derive_seed

MOMENT_CFG = pc.WindowConfig(window=150, stride=15, tau_grid=(2, 4, 8, 16))
SCALING_CFG = pc.WindowConfig(window=512, stride=128, tau_grid=(2, 4, 8, 16, 32), orders=(1,))


def trend(series, estimator, cfg):
    tau, p = pc.kendall_tau_trend(estimator(series, cfg))
    return f"tau {tau:+.2f} (p {p:.1e})"


def main():
    seed = derive_seed(1, 0)

    # Critical: mu ramps toward the fold at (2r/3)sqrt(r/3) ~ 0.385.
    # Integrate finely, observe every 20th state: the observed returns
    # then behave like daily closes of the continuous process.
    cpt = pc.CptParams(r=1.0, mu_schedule=pc.MuSchedule(0.0, 0.36), sigma=0.03, p0=1.0)
    s = pc.simulate_cpt(cpt, 40_000, 0.02, seed).to_price_series("cpt", sample_every=20)
    print("critical route (fold approach)")
    print("  volatility    ", trend(s, pc.rolling_volatility, MOMENT_CFG))
    print("  lag-1 autocorr", trend(s, pc.rolling_lag1_autocorr, MOMENT_CFG))

    # Stochastic: sigma(t) = alpha_vol * t in a fixed double well.
    spt = pc.SptParams(r=1.0, lam=1.0, alpha_vol=0.008, p0=1.0)
    s = pc.simulate_spt(spt, 10_000, 0.01, seed).to_price_series("spt")
    print("stochastic route (volatility ramp)")
    print("  volatility    ", trend(s, pc.rolling_volatility, MOMENT_CFG))
    print("  lag-1 autocorr", trend(s, pc.rolling_lag1_autocorr, MOMENT_CFG))

    # Dynamic, fat-tail family: stability index 2 -> 1.2, increments stay
    # independent, so only tail statistics move.
    dpt = pc.DptParams(pc.StableSchedule(2.0, 1.2, ramp="linear", scale=0.01), scale=1.0)
    s = pc.simulate_dpt(dpt, 4096, 1.0, seed).to_price_series("dpt-stable")
    ghe1 = lambda series, cfg: pc.generalized_hurst(series, cfg)[0]
    print("dynamic route (stability index 2 -> 1.2)")
    print("  order-1 exponent", trend(s, ghe1, SCALING_CFG))
    print("  lag-1 autocorr  ", trend(s, pc.rolling_lag1_autocorr, MOMENT_CFG))

    # Dynamic, Hurst family: H 0.5 -> 0.9, the second-order exponent rises.
    dpt_h = pc.DptParams(pc.HurstSchedule(0.5, 0.9, ramp="linear"), scale=0.01)
    s = pc.simulate_dpt(dpt_h, 2048, 1.0, seed).to_price_series("dpt-hurst")
    print("dynamic route (Hurst 0.5 -> 0.9)")
    print("  scaling exponent", trend(s, pc.anomalous_dimension, SCALING_CFG))

    print(
        "\nnote: these are single paths; overlapping windows make per-path"
        "\np-values anticonservative. The acceptance suite aggregates the"
        "\nper-seed taus over 100 seeds instead."
    )


if __name__ == "__main__":
    main()

"""
Monte Carlo check
=================

Simulate blocks under each solved policy and compare with the analytic
outage. Results depend only on (seed, trials, workers).
"""

import math

from distortion_outage import (
    SCHEMES,
    SCOPA,
    FadingChannel,
    SystemParams,
    build_experimental_source,
    probabilistic_policy_check,
    run_sim,
    solve,
)

channel = FadingChannel.rayleigh()
src = build_experimental_source("G2")
sys = SystemParams.from_db(1, 8, 5)

for scheme in SCHEMES:
    sol = solve(scheme, src, channel, sys)
    rep = run_sim(sol.policy, src, channel, sys, trials=1_000_000, seed=1, workers=4)
    sd = math.sqrt(sol.p_dout * (1 - sol.p_dout) / rep.trials)
    print(
        f"{scheme:10s} analytic {sol.p_dout:.5f}  sim {rep.p_dout_hat:.5f}  z={(rep.p_dout_hat - sol.p_dout) / sd:+.2f}"
        f"  power {rep.power_mean:.3f} +/- {rep.power_ci_halfwidth:.3f}"
    )

# transmitting SCOPA blocks land exactly on D_m
rep = probabilistic_policy_check(solve(SCOPA, src, channel, sys).policy, src, channel, sys, 200_000, seed=2)
print(rep)

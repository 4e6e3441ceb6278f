"""
Four transmission schemes at one power limit
=============================================

SCOPA-MDO adapts power and rate to both source state and fading; COPA-MDO
fixes the rate and inverts the channel above a cutoff; CORACP and CRCP
keep the power constant.
"""

from distortion_outage import (
    SCHEMES,
    FadingChannel,
    SystemParams,
    build_experimental_source,
    rate_candidates,
    solve,
)

channel = FadingChannel.rayleigh()
src = build_experimental_source("G2")

for p_db in (0, 10, 20):
    sys = SystemParams.from_db(1, 8, p_db)
    print(f"P = {p_db} dB")
    for scheme in SCHEMES:
        sol = solve(scheme, src, channel, sys)
        print(f"  {scheme:10s} p_dout={sol.p_dout:.4e}  ln={sol.log_p_dout:9.3f}  R*={sol.r_star}  ln q*={sol.log_threshold}")

# the optimal fixed rate is always one of these
sys = SystemParams.from_db(1, 8, 10)
print("candidates:", rate_candidates(src, sys)[:4], "...")

# stationary source: adaptation across states buys nothing
s = build_experimental_source("S")
for scheme in SCHEMES:
    print(scheme, solve(scheme, s, channel, SystemParams.from_db(1, 8, 0)).p_dout)

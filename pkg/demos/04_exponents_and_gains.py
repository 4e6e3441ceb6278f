"""
High-power behaviour
====================

Exponents of the adaptive schemes grow like P/ln P, so they are reported at
a finite power. Gains are the dB power savings at equal outage.
"""

from distortion_outage import (
    COPA,
    CORACP,
    CRCP,
    SCOPA,
    SystemParams,
    build_experimental_source,
    db_to_linear,
    empirical_gain_at_power,
    exponent_copa,
    exponent_scopa,
    gain_copa_vs_coracp,
    gain_coracp_vs_crcp,
    gain_scopa_vs_copa,
)

g2 = build_experimental_source("G2")
s = build_experimental_source("S")

for b in (1, 5):
    for d_db, p_db in ((8, 16), (8, 20), (5, 20)):
        sys = SystemParams.from_db(b, d_db, p_db)
        print(f"b={b} D_m={d_db} dB P={p_db} dB  SCOPA {exponent_scopa(g2, sys).value:8.2f}  COPA {exponent_copa(g2, sys).value:7.2f}")

sys = SystemParams.from_db(1, 8, 20)
print("SCOPA vs COPA  ", gain_scopa_vs_copa(g2, sys).value_db)
print("CORACP vs CRCP ", gain_coracp_vs_crcp(g2, sys).value_db)
for p2 in (20, 25):
    print(f"COPA vs CORACP at {p2} dB", gain_copa_vs_coracp(g2, sys, db_to_linear(p2)).value_db)

# stationary source: 16.33 dB and an exponent near 51
print("S:", gain_copa_vs_coracp(s, sys, 100.0).value_db, exponent_scopa(s, sys).value)

# the same gains read off the outage curves at the 20 dB reference
for s1, s2 in ((SCOPA, COPA), (COPA, CORACP), (CORACP, CRCP)):
    print(s1, s2, empirical_gain_at_power(s1, s2, g2, sys, sys.p_avg))

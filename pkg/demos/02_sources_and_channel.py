"""
Sources, fading and the per-block link
======================================
"""

import numpy as np

from distortion_outage import (
    FadingChannel,
    build_experimental_source,
    capacity,
    db_to_linear,
    instantaneous_distortion,
    sample_states,
)

# the 25-state family: sigma_s = 1 + s/6, different spreads around 3
for label in ("S", "G1", "G2", "G3", "U"):
    src = build_experimental_source(label)
    sig = np.sqrt(src.variances)
    mean = np.sum(src.pmf * sig)
    print(f"{label:3s} states={src.n_states:2d} mean sigma={mean:.3f} var={np.sum(src.pmf * (sig - mean) ** 2):.3f}")

d_max = db_to_linear(8.0)
print("D_m =", d_max)

# one block: alpha = 0.5, gamma = 6 gives 1 bit per channel use
cap = capacity(0.5, 6.0)
print("C =", cap)
print("D at R = C:", instantaneous_distortion(9.0, cap, cap, 1))
print("D at R > C:", instantaneous_distortion(9.0, 1.5, cap, 1))

# draw a few blocks
src = build_experimental_source("G2")
rng = np.random.default_rng(0)
s, sigma2, alpha = sample_states(src, FadingChannel.rayleigh(), rng, 5)
print(np.column_stack([s, sigma2, alpha]))

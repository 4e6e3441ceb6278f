"""
Exponential integral and the cutoff equation
============================================

The Rayleigh tail moment int_a^inf e^{-t}/t dt is E1(a). Every cutoff in the
package comes from inverting it.
"""

import math

import numpy as np

from distortion_outage import exp_integral_e1, find_root_monotone, integrate_tail
from distortion_outage.numerics import EULER_GAMMA

# series below 1, continued fraction above
for x in (1e-8, 0.05, 1.0, 5.0):
    print(f"E1({x:g}) = {exp_integral_e1(x):.15g}")

# near zero E1 behaves like -gamma - ln x
x = 1e-8
print("small-x law:", -EULER_GAMMA - math.log(x))

# the same numbers from the generic tail quadrature
grid = np.geomspace(1e-4, 20, 6)
for x in grid:
    q = integrate_tail(lambda a: math.exp(-a) / a, x)
    print(f"x={x:9.4g}  quad={q:.12g}  closed={exp_integral_e1(x):.12g}")

# cutoff q with E1(1/q) = 10: grows like exp(10)
q = find_root_monotone(lambda q: exp_integral_e1(1.0 / q), 1.0, True, 10.0)
print("q =", q, " exp(10 + gamma) =", math.exp(10 + EULER_GAMMA))

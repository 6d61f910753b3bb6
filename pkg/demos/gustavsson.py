"""Fluctuations of a bulk eigenvalue, and why log n is a slow clock.

The exact variance of the count below the classical location is compared
with log n / (2 pi^2) for growing n; the ratio drifts toward 1 only slowly.
Run: python3 demos/gustavsson.py
"""

import math

from singlegap.counting import counting_law
from singlegap.operators import rescaled_gue_projection

for n in (50, 100, 200, 400, 800):
    P = rescaled_gue_projection(n, 0.0)
    law = counting_law(P, (-math.inf, 0.0))
    target = math.log(n) / (2 * math.pi**2)
    print(f"n={n:4d}  E N = {law.mu:8.3f}  Var N = {law.sigma2:.4f}  "
          f"log n/2pi^2 = {target:.4f}  ratio = {law.sigma2 / target:.3f}")

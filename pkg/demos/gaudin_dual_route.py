"""Gaudin gap law by two independent routes, printed side by side.

Run: python3 demos/gaudin_dual_route.py
"""

import numpy as np

from singlegap.gaudin import gap_function_fredholm, gap_function_painleve, wigner_surmise

fred = gap_function_fredholm()
pain = gap_function_painleve()

print(f"{'s':>5} {'E fredholm':>14} {'E painleve':>14} {'|diff|':>9} {'p(s)':>9} {'surmise':>9}")
for s in (0.25, 0.5, 1.0, 1.5, 2.0, 3.0):
    k = int(round(s / fred.step))
    print(f"{s:5.2f} {fred.E[k]:14.10f} {pain.E[k]:14.10f} {abs(fred.E[k] - pain.E[k]):9.1e} "
          f"{fred.p[k]:9.5f} {wigner_surmise(np.array([s]))[0]:9.5f}")

print(f"\nint p = {fred.normalization():.8f}, int s p = {fred.mean():.8f}")

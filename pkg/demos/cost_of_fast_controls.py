"""Truncated control cost C_D(T, 1) as the horizon shrinks.

Each value is a lower bound on the true constant; the printed increments
show how far each truncation is from a plateau.
"""

import mpmath as mp

from nullcost.cost import convergence_sweep

N = 30
print(f"{'T':>8} {'C_D (N=%d)' % N:>14} {'T ln C_D':>10} {'last increment':>15}")
for T in (0.2, 0.1, 0.05, 0.03, 0.02):
    est = convergence_sweep("cd", T, 1, N)
    p = est.convergence
    inc = (p[-1] - p[-2]) / p[-2]
    print(f"{T:8.3f} {mp.nstr(est.value, 8):>14} {float(T * mp.log(est.value)):10.4f} "
          f"{float(inc):15.3e}")

# At T = 1 the profile follows an exact product, so the limit is known.
est = convergence_sweep("cd", 1, 1, 12)
limit = mp.exp(-mp.pi**2) * mp.sinh(mp.pi) / mp.pi
print(f"\nT=1: C_D(N=12) = {mp.nstr(est.value, 10)}, N -> infinity limit {mp.nstr(limit, 10)}")

"""Transport-diffusion cost as the viscosity goes to zero, on both sides of L/M."""

from nullcost.asymptotics import critical_times, eps_sweep, feasible_ab
from nullcost.cost import observability_cost

EPS = [0.1, 0.08, 0.06, 0.05, 0.04]
print(f"critical horizons for L=1: M>0 {float(critical_times(1, 1)):.4f}, "
      f"M<0 {float(critical_times(1, -1)):.4f}")

fit, ests = eps_sweep(0.5, 1, 1, EPS, N=30)
print("T=0.5 (short):", ", ".join(f"{float(e.value):.4g}" for e in ests))
print(f"  fitted eps ln C_TD -> {fit.rate:.4f} (positive: blow-up)")

vals = [float(observability_cost("ctd", 5, 1, 30, M=1, eps=e).value) for e in EPS]
print("T=5 (long):  ", ", ".join(f"{v:.4g}" for v in vals))

f = feasible_ab(5, 1, 1)
print(f"  chain bound at T=5: a={f.a:.4f}, b={f.b:.4f}, exponent {f.exponent:.4f}")

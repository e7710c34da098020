"""Synthesise the minimal-norm boundary control and check it by simulation."""

import mpmath as mp

from nullcost.control import hum_control, verify_null
from nullcost.cost import observability_cost
from nullcost.spectral import ModeVector, NormKind, ProblemSpec, norm

heat = ProblemSpec.heat(1)
y0 = ModeVector.single(heat, 1, N=8)
u = hum_control(y0, heat, 0.5)
print(f"|u|_L2 = {mp.nstr(u.norm_L2, 12)}")
for t in (0.0, 0.25, 0.45, 0.5):
    print(f"  u({t:.2f}) = {mp.nstr(u(t), 10)}")

cost = observability_cost("cd", 0.5, 1, 8, pairing="H1").value
print(f"bound C_D |y0|_H-1 = {mp.nstr(cost * norm(y0, NormKind.HMINUS1), 12)}")

for nx in (100, 200, 400):
    chk = verify_null(y0, u, heat, nx=nx)
    print(f"nx={nx:4d}: |y(T)|/|y0| on controlled modes {chk.ratio:.3e}, all modes {chk.ratio_full:.3e}")

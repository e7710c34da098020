"""The transport-diffusion to heat change of variables, mode by mode."""

import mpmath as mp

from nullcost.spectral import AdjointSolution, ProblemSpec, adjoint_mode
from nullcost.transform import TransformParams, boundary_identity_check, map_psi_to_phi

mp.mp.prec = 256
td = ProblemSpec.transport_diffusion(1, -1, 0.1)
heat = ProblemSpec.heat(1)
params = TransformParams.of(td)

for k in (1, 5, 20):
    phi = map_psi_to_phi(lambda t, x, k=k: adjoint_mode(td, k, t, x), params)
    t, x = mp.mpf("0.003"), mp.mpf("0.37")
    print(f"k={k:2d}: |phi - heat mode| = {mp.nstr(abs(phi(t, x) - adjoint_mode(heat, k, t, x)), 3)}")

psi = AdjointSolution(td, [1, 0.5, -0.3])
for e in (8, 9, 10):
    dev = boundary_identity_check(psi, params, [0.002, 0.005], h=mp.mpf(2) ** -e)
    print(f"h=2^-{e}: boundary flux identity deviation {mp.nstr(dev, 4)}")

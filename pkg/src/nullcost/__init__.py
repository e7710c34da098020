"""Cost of boundary null controllability for the 1-D heat and transport-diffusion equations.

Truncated spectral computations in arbitrary precision, with independent
quadrature and finite-difference oracles.
"""

from .spectral import (AdjointSolution, Kind, ModeVector, NormKind, ProblemSpec,
                       adjoint_mode, boundary_flux_coeff, eigenvalue, norm)
from .gramians import (INFINITE, GramianSet, gramian_set, observation_gramian,
                       quad_oracle_entry, terminal_mass, weighted_gramian)
from .pencil import PencilError, nested_pencil, solve_pencil
from .cost import CostEstimate, CostKind, convergence_sweep, observability_cost
from .control import ControlFunction, hum_control, verify_null
from .fdsolve import Grid, Scheme, residual_of, solve_forward
from .transform import (IdentityInapplicable, TransformParams, boundary_identity_check,
                        map_psi_to_phi, theorem_chain_bound)
from .asymptotics import (FitResult, critical_times, eps_sweep, feasible_ab, fit_rate,
                          prop1_verify)

__version__ = "0.1.0"

"""Change of variables from transport-diffusion to heat adjoint solutions.

If ``psi`` solves ``psi_t - eps psi_xx - M psi_x = 0`` with Dirichlet data,
then

    phi(t, x) = exp(M^2 t / (4 eps^2) + M x / (2 eps)) psi(t / eps, x)

solves the heat adjoint on ``(0, eps T)``, and since ``psi(., 0) = 0`` the
boundary fluxes are related by
``d_x phi(t, 0) = exp(M^2 t / (4 eps^2)) d_x psi(t / eps, 0)``.
Chaining this with the weighted estimates gives an explicit bound on the
squared transport-diffusion cost in terms of ``C_int(eps b T, L)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp

from .spectral import AdjointSolution, ProblemSpec

__all__ = [
    "TransformParams",
    "IdentityInapplicable",
    "map_psi_to_phi",
    "boundary_identity_check",
    "chain_exponent",
    "theorem_chain_bound",
]


@dataclass(frozen=True)
class TransformParams:
    M: float
    eps: float
    L: float

    def __post_init__(self):
        if self.M == 0:
            raise ValueError("M must be nonzero")
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @classmethod
    def of(cls, spec: ProblemSpec) -> "TransformParams":
        return cls(spec.M, spec.eps, spec.L)

    def factor(self, t, x):
        M, eps = mp.mpf(self.M), mp.mpf(self.eps)
        return mp.exp(M * M * t / (4 * eps * eps) + M * x / (2 * eps))


class IdentityInapplicable(ValueError):
    """``psi`` does not vanish at ``x = 0``, so the flux identity does not apply."""


def map_psi_to_phi(psi, params: TransformParams):
    """Compose ``psi`` with the change of variables.

    An :class:`AdjointSolution` of the matching transport-diffusion spec maps
    exactly to the heat solution with the same coefficients (mode k goes to
    mode k); any other callable is wrapped pointwise.
    """
    if isinstance(psi, AdjointSolution) and not psi.spec.is_heat:
        if TransformParams.of(psi.spec) != params:
            raise ValueError("psi was built for different (M, eps, L)")
        return AdjointSolution(ProblemSpec.heat(params.L), list(psi.coeffs))
    eps = mp.mpf(params.eps)

    def phi(t, x):
        t = mp.mpf(t)
        return params.factor(t, x) * psi(t / eps, x)

    return phi


def _dx0(f, t, h):
    """Second-order one-sided derivative at x = 0."""
    return (-3 * f(t, 0) + 4 * f(t, h) - f(t, 2 * h)) / (2 * h)


def boundary_identity_check(psi, params: TransformParams, t_samples, h=None, tol=None):
    """Max over samples of ``|d_x phi(t,0) - e^{M^2 t/(4 eps^2)} d_x psi(t/eps, 0)|``.

    Both derivatives use the same second-order one-sided stencil of step h,
    so the deviation is O(h^2).  Raises :class:`IdentityInapplicable` when
    ``|psi(t/eps, 0)|`` exceeds ``tol`` at some sample.
    """
    h = mp.mpf(h if h is not None else mp.mpf(2) ** (-mp.mp.prec // 4))
    tol = mp.mpf(tol if tol is not None else mp.mpf(2) ** (-mp.mp.prec // 2))
    eps = mp.mpf(params.eps)
    M = mp.mpf(params.M)
    phi = map_psi_to_phi(psi, params)
    # always differentiate the composed evaluator, not a fast path
    if isinstance(phi, AdjointSolution):
        phi = lambda t, x, _psi=psi: params.factor(mp.mpf(t), x) * _psi(mp.mpf(t) / eps, x)
    worst = mp.mpf(0)
    for t in t_samples:
        t = mp.mpf(t)
        edge = psi(t / eps, 0)
        if abs(edge) > tol:
            raise IdentityInapplicable(f"psi({mp.nstr(t / eps, 6)}, 0) = {mp.nstr(edge, 6)} != 0")
        lhs = _dx0(phi, t, h)
        rhs = mp.exp(M * M * t / (4 * eps * eps)) * _dx0(psi, t / eps, h)
        worst = max(worst, abs(lhs - rhs))
    return worst


def chain_exponent(L, M, T, a, b):
    """Exponent multiplying ``1/eps`` in the bound on ``C_TD^2``.

    ``L^2/(2aT) - M^2 T/2 + b M^2 T/2``, plus ``|M| L`` when ``M < 0``.
    """
    L, M, T, a, b = map(mp.mpf, (L, M, T, a, b))
    e = L * L / (2 * a * T) - M * M * T / 2 + b * M * M * T / 2
    if M < 0:
        e += abs(M) * L
    return e


def _lookup(samples, horizon, rtol):
    for t, v in samples:
        if abs(mp.mpf(t) - horizon) <= rtol * horizon:
            return mp.mpf(v)
    raise KeyError(f"no C_int sample at horizon {mp.nstr(horizon, 12)}; "
                   "interpolating between samples is refused")


def theorem_chain_bound(cint_samples, params: TransformParams, T, a, b, rtol=1e-12):
    """Upper bound on ``C_TD(T, L, M, eps)^2`` from a ``C_int`` sample.

    ``cint_samples`` is a list of ``(horizon, C_int)`` pairs, where C_int
    multiplies the observation integral (the square of
    :attr:`CostEstimate.value`).  The sample at horizon ``eps b T`` is
    required; the result is

        exp(chain_exponent / eps) / ((1 - a) T) * C_int(eps b T, L).
    """
    if not 0 < a < 1:
        raise ValueError(f"a must lie in (0, 1), got {a}")
    if not 0 < b < 1:
        raise ValueError(f"b must lie in (0, 1), got {b}")
    T, a, b = mp.mpf(T), mp.mpf(a), mp.mpf(b)
    eps = mp.mpf(params.eps)
    cint = _lookup(cint_samples, eps * b * T, rtol)
    e = chain_exponent(params.L, params.M, T, a, b)
    return mp.exp(e / eps) / ((1 - a) * T) * cint

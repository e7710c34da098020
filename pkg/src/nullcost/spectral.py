"""Closed-form spectral representation of the two adjoint systems.

Heat adjoint::

    phi_t - phi_xx = 0,        phi(t, 0) = phi(t, L) = 0

Transport-diffusion adjoint::

    psi_t - eps psi_xx - M psi_x = 0,   psi(t, 0) = psi(t, L) = 0

Both are diagonalised by explicit modes.  Heat modes are
``exp(-lam_k t) sin(k pi x / L)`` with ``lam_k = (k pi / L)**2``;
transport-diffusion modes carry the extra factor ``exp(-M x / (2 eps))`` and
decay at ``mu_k = eps lam_k + M**2 / (4 eps)``.

All scalar results are :class:`mpmath.mpf` values computed at the ambient
mpmath precision; wrap calls in ``mpmath.workprec(bits)`` to choose it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import mpmath as mp

__all__ = [
    "Kind",
    "NormKind",
    "ProblemSpec",
    "ModeVector",
    "AdjointSolution",
    "eigenvalue",
    "adjoint_mode",
    "boundary_flux_coeff",
    "norm",
    "sine_product_integral",
    "mass_matrix",
]


class Kind(enum.Enum):
    HEAT = "heat"
    TRANSPORT_DIFFUSION = "transport-diffusion"


class NormKind(enum.Enum):
    L2 = "L2"
    H10 = "H10"
    HMINUS1 = "Hminus1"


@dataclass(frozen=True)
class ProblemSpec:
    """Which adjoint system, on which interval.

    Use :meth:`heat` or :meth:`transport_diffusion` rather than the raw
    constructor.  ``M`` and ``eps`` are ``None`` for the heat system.
    """

    kind: Kind
    L: float
    M: float | None = None
    eps: float | None = None

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"interval length must be positive, got L={self.L}")
        if self.kind is Kind.HEAT:
            if self.M is not None or self.eps is not None:
                raise ValueError("heat spec takes no M or eps")
        else:
            if self.M is None or self.M == 0:
                raise ValueError("transport-diffusion needs a nonzero speed M")
            if self.eps is None or not 0 < self.eps < 1:
                raise ValueError(f"viscosity must lie in (0, 1), got eps={self.eps}")

    @classmethod
    def heat(cls, L: float) -> "ProblemSpec":
        return cls(Kind.HEAT, L)

    @classmethod
    def transport_diffusion(cls, L: float, M: float, eps: float) -> "ProblemSpec":
        return cls(Kind.TRANSPORT_DIFFUSION, L, M, eps)

    @property
    def is_heat(self) -> bool:
        return self.kind is Kind.HEAT

    @property
    def diffusivity(self):
        return mp.mpf(1) if self.is_heat else mp.mpf(self.eps)

    @property
    def speed(self):
        return mp.mpf(0) if self.is_heat else mp.mpf(self.M)

    @property
    def skew(self):
        """Exponent ``M / (2 eps)`` of the spatial factor ``exp(-skew x)``."""
        if self.is_heat:
            return mp.mpf(0)
        return mp.mpf(self.M) / (2 * mp.mpf(self.eps))

    def wavenumber(self, k: int):
        return k * mp.pi / mp.mpf(self.L)

    def heat_companion(self) -> "ProblemSpec":
        return ProblemSpec.heat(self.L)


def _check_index(k: int) -> None:
    if int(k) != k or k < 1:
        raise ValueError(f"mode index must be an integer >= 1, got {k}")


def eigenvalue(spec: ProblemSpec, k: int):
    """Decay rate of the k-th adjoint mode (``lam_k`` or ``mu_k``)."""
    _check_index(k)
    lam = spec.wavenumber(k) ** 2
    if spec.is_heat:
        return lam
    eps = mp.mpf(spec.eps)
    return eps * lam + mp.mpf(spec.M) ** 2 / (4 * eps)


def adjoint_mode(spec: ProblemSpec, k: int, t, x):
    """Value of the k-th adjoint mode at ``(t, x)``."""
    _check_index(k)
    t = mp.mpf(t)
    x = mp.mpf(x)
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if x < 0 or x > spec.L:
        raise ValueError(f"x={x} outside [0, {spec.L}]")
    val = mp.exp(-eigenvalue(spec, k) * t) * mp.sin(spec.wavenumber(k) * x)
    if not spec.is_heat:
        val *= mp.exp(-spec.skew * x)
    return val


def boundary_flux_coeff(spec: ProblemSpec, k: int, t):
    """``d/dx`` of the k-th mode at ``x = 0``.

    The spatial weight equals 1 at the left end and the sine vanishes there,
    so only the sine derivative survives for either system.
    """
    _check_index(k)
    t = mp.mpf(t)
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return spec.wavenumber(k) * mp.exp(-eigenvalue(spec, k) * t)


def sine_product_integral(L, gamma, j: int, k: int):
    """``int_0^L exp(-gamma x) sin(j pi x / L) sin(k pi x / L) dx`` in closed form.

    Product-to-sum turns the integrand into two damped cosines at integer
    multiples of ``pi / L``, for which
    ``int_0^L e^{-g x} cos(m pi x / L) dx = g (1 - (-1)^m e^{-g L}) / (g^2 + (m pi / L)^2)``.
    """
    L = mp.mpf(L)
    gamma = mp.mpf(gamma)

    def damped_cos(m: int):
        if gamma == 0:
            return L if m == 0 else mp.mpf(0)
        w = m * mp.pi / L
        if m % 2:
            bracket = 1 + mp.exp(-gamma * L)
        else:
            bracket = -mp.expm1(-gamma * L)
        return gamma * bracket / (gamma * gamma + w * w)

    return (damped_cos(j - k) - damped_cos(j + k)) / 2


def mass_matrix(spec: ProblemSpec, N: int) -> mp.matrix:
    """L2 Gram matrix of the first N modes at t = 0."""
    gamma = 2 * spec.skew
    S = mp.matrix(N, N)
    for j in range(1, N + 1):
        for k in range(j, N + 1):
            S[j - 1, k - 1] = S[k - 1, j - 1] = sine_product_integral(spec.L, gamma, j, k)
    return S


@dataclass
class ModeVector:
    """Coefficients over the first N modes of ``spec`` at t = 0.

    For the heat system the basis is ``sin(k pi x / L)``; for
    transport-diffusion it is ``exp(-M x / (2 eps)) sin(k pi x / L)``.
    """

    spec: ProblemSpec
    coeffs: list
    precision_bits: int = 256
    N: int = field(init=False)

    def __post_init__(self):
        with mp.workprec(self.precision_bits):
            self.coeffs = [mp.mpf(c) for c in self.coeffs]
        if not self.coeffs:
            raise ValueError("a ModeVector needs at least one coefficient")
        if not all(mp.isfinite(c) for c in self.coeffs):
            raise ValueError("coefficients must be finite")
        self.N = len(self.coeffs)

    @classmethod
    def single(cls, spec: ProblemSpec, k: int, N: int | None = None, precision_bits: int = 256):
        N = k if N is None else N
        c = [0] * N
        c[k - 1] = 1
        return cls(spec, c, precision_bits)

    def __call__(self, x):
        """Evaluate the represented function at x."""
        with mp.workprec(self.precision_bits):
            return sum(c * adjoint_mode(self.spec, k, 0, x) for k, c in enumerate(self.coeffs, 1))


def norm(v: ModeVector, which: NormKind = NormKind.L2):
    """L2, H^1_0 or H^{-1} norm of a mode vector.

    H^{-1} is the dual of H^1_0 through the Dirichlet Laplacian, i.e.
    ``sum c_k^2 / lam_k * L / 2``.  Only the L2 norm is available for
    transport-diffusion vectors (their basis is not orthogonal).
    """
    which = NormKind(which)
    spec = v.spec
    with mp.workprec(v.precision_bits):
        half_L = mp.mpf(spec.L) / 2
        if spec.is_heat:
            lam = [eigenvalue(spec, k) for k in range(1, v.N + 1)]
            if which is NormKind.L2:
                s = mp.fsum(c * c for c in v.coeffs)
            elif which is NormKind.H10:
                s = mp.fsum(c * c * l for c, l in zip(v.coeffs, lam))
            else:
                s = mp.fsum(c * c / l for c, l in zip(v.coeffs, lam))
            return mp.sqrt(s * half_L)
        if which is not NormKind.L2:
            raise ValueError(f"{which.value} norm is only defined for heat mode vectors")
        S = mass_matrix(spec, v.N)
        c = mp.matrix(v.coeffs)
        return mp.sqrt((c.T * S * c)[0])


@dataclass
class AdjointSolution:
    """Finite modal sum ``sum c_k mode_k(t, x)``, callable as an evaluator."""

    spec: ProblemSpec
    coeffs: Sequence

    def __call__(self, t, x):
        return mp.fsum(c * adjoint_mode(self.spec, k, t, x)
                       for k, c in enumerate(self.coeffs, 1) if c)

    def flux(self, t):
        return mp.fsum(c * boundary_flux_coeff(self.spec, k, t)
                       for k, c in enumerate(self.coeffs, 1) if c)

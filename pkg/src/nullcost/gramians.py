"""Quadratic forms over the first N adjoint modes.

Every matrix here is an :class:`mpmath.matrix` built at the ambient mpmath
precision (or at ``precision_bits`` for :func:`gramian_set`).

* observation Gramian ``G(T)``: ``int_0^T |d_x phi(t, 0)|^2 dt``
* terminal mass ``Mass_T``: ``int_0^L |phi(T, x)|^2 dx``
* weighted Gramians ``W``: ``int_0^H int_0^L exp(-L^2/(2t)) |phi|^2 dx dt``
  for ``H = inf`` (``W_inf``) or ``H = T`` (``W_fin``), heat system only.

:func:`quad_oracle_entry` evaluates the same integrals by adaptive
quadrature and is kept independent of the closed forms it checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import mpmath as mp

from .spectral import ProblemSpec, eigenvalue, sine_product_integral

__all__ = [
    "INFINITE",
    "GramianSet",
    "Kernel",
    "QuadratureError",
    "working_precision",
    "observation_gramian",
    "terminal_mass",
    "weighted_gramian",
    "weighted_entry",
    "gramian_set",
    "quad_oracle_entry",
    "exp_kernel",
    "flux_product_kernel",
    "weight_kernel",
    "sine_product_kernel",
    "dump_matrix",
]

INFINITE = "infinite"


def working_precision(N: int, requested: int = 256) -> int:
    """Mantissa bits for an N-mode pencil.

    ``log2 cond G(T)`` grows like ``3.4 N`` independently of T, so 4 bits per
    mode plus a fixed guard is enough; callers escalate further on failure.
    """
    return max(int(requested), 4 * int(N) + 128)


def _rates(spec: ProblemSpec, N: int) -> list:
    return [eigenvalue(spec, k) for k in range(1, N + 1)]


def observation_gramian(spec: ProblemSpec, T, N: int) -> mp.matrix:
    T = mp.mpf(T)
    if not T > 0:
        raise ValueError(f"horizon must be positive, got T={T}")
    rho = _rates(spec, N)
    wk = [spec.wavenumber(k) for k in range(1, N + 1)]
    G = mp.matrix(N, N)
    for j in range(N):
        for k in range(j, N):
            s = rho[j] + rho[k]
            G[j, k] = G[k, j] = wk[j] * wk[k] * (-mp.expm1(-s * T)) / s
    return G


def terminal_mass(spec: ProblemSpec, T, N: int) -> mp.matrix:
    T = mp.mpf(T)
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    rho = _rates(spec, N)
    decay = [mp.exp(-r * T) for r in rho]
    A = mp.matrix(N, N)
    if spec.is_heat:
        half_L = mp.mpf(spec.L) / 2
        for k in range(N):
            A[k, k] = half_L * decay[k] ** 2
        return A
    gamma = 2 * spec.skew
    for j in range(N):
        for k in range(j, N):
            A[j, k] = A[k, j] = decay[j] * decay[k] * sine_product_integral(spec.L, gamma, j + 1, k + 1)
    return A


def weighted_entry(L, lam, horizon=INFINITE):
    """``(L/2) int_0^H exp(-L^2/(2t) - 2 lam t) dt``.

    Infinite horizon uses ``int_0^inf e^{-a/t - b t} dt = 2 sqrt(a/b) K_1(2 sqrt(a b))``.
    The finite horizon is integrated after ``t = a/s``, which turns the
    flat-then-vanishing weight near t = 0 into a plain exponential tail.
    """
    L = mp.mpf(L)
    a = L * L / 2
    b = 2 * mp.mpf(lam)
    if horizon == INFINITE:
        return L * mp.sqrt(a / b) * mp.besselk(1, 2 * mp.sqrt(a * b))
    T = mp.mpf(horizon)
    if not T > 0:
        raise ValueError(f"horizon must be positive, got T={T}")
    ab = a * b
    s0 = a / T
    peak = mp.sqrt(ab)
    pts = [s0]
    if peak > s0:
        pts += [p for p in (peak / 4, peak / 2) if p > s0] + [peak]
    # beyond the peak the integrand decays on a unit scale
    top = pts[-1]
    w = 1 + mp.sqrt(peak)
    pts += [top + w, top + 4 * w, top + 16 * w, top + 64 * w, mp.inf]
    # mp.quad stops on an absolute error test, so integrate relative to the
    # largest value of the integrand; guard bits tighten its error control
    with mp.extraprec(64):
        q = max(s0, peak)
        log_top = -q - ab / q
        val = mp.quad(lambda s: mp.exp(-s - ab / s - log_top) * a / (s * s), pts)
        val *= mp.exp(log_top)
    return L / 2 * val


def weighted_gramian(spec: ProblemSpec, N: int, horizon=INFINITE) -> mp.matrix:
    """Diagonal weighted Gramian over the first N heat modes."""
    if not spec.is_heat:
        raise ValueError("weighted Gramians are defined for the heat system only")
    W = mp.matrix(N, N)
    for k in range(N):
        W[k, k] = weighted_entry(spec.L, eigenvalue(spec, k + 1), horizon)
    return W


@dataclass
class GramianSet:
    spec: ProblemSpec
    N: int
    T: float
    G: mp.matrix
    Mass_T: mp.matrix
    W_inf: mp.matrix | None
    W_fin: mp.matrix | None
    precision_bits: int


def gramian_set(spec: ProblemSpec, T, N: int, precision_bits: int = 256,
                weighted: bool = True) -> GramianSet:
    with mp.workprec(precision_bits):
        G = observation_gramian(spec, T, N)
        A = terminal_mass(spec, T, N)
        W_inf = W_fin = None
        if spec.is_heat and weighted:
            W_inf = weighted_gramian(spec, N, INFINITE)
            W_fin = weighted_gramian(spec, N, T)
    return GramianSet(spec, N, T, G, A, W_inf, W_fin, precision_bits)


# -- quadrature oracle -------------------------------------------------------


class QuadratureError(ArithmeticError):
    def __init__(self, value, error, tol):
        super().__init__(f"quadrature did not reach tolerance {mp.nstr(tol, 3)}; "
                         f"achieved error estimate {mp.nstr(error, 3)}")
        self.value = value
        self.error = error
        self.tol = tol


@dataclass(frozen=True)
class Kernel:
    """A named integrand with its preferred subdivision points."""

    name: str
    f: Callable
    breakpoints: tuple = ()
    smooth: bool = True


def exp_kernel(rate) -> Kernel:
    rate = mp.mpf(rate)
    return Kernel(f"exp(-{rate} t)", lambda t: mp.exp(-rate * t))


def flux_product_kernel(spec: ProblemSpec, j: int, k: int) -> Kernel:
    """Integrand of ``G_jk``, built from raw exponentials rather than the Gramian code."""
    cj, ck = spec.wavenumber(j), spec.wavenumber(k)
    rj, rk = eigenvalue(spec, j), eigenvalue(spec, k)
    # subdivide on the decay scale so a thin initial layer is resolved
    scale = 1 / (rj + rk)
    return Kernel(f"flux[{j},{k}]", lambda t: cj * mp.exp(-rj * t) * ck * mp.exp(-rk * t),
                  tuple(scale * m for m in (1, 4, 16, 64, 256)))


def weight_kernel(L, rate) -> Kernel:
    """``exp(-L^2/(2t) - rate t)``; vanishes to all orders at t = 0."""
    a = mp.mpf(L) ** 2 / 2
    rate = mp.mpf(rate)
    peak = mp.sqrt(a / rate)

    def f(t):
        if t == 0:
            return mp.mpf(0)
        return mp.exp(-a / t - rate * t)

    return Kernel(f"weight(L={L}, rate={rate})", f, (peak, 10 * peak), smooth=False)


def sine_product_kernel(L, gamma, j: int, k: int) -> Kernel:
    L = mp.mpf(L)
    gamma = mp.mpf(gamma)
    wj, wk = j * mp.pi / L, k * mp.pi / L
    return Kernel(f"sinprod[{j},{k}]",
                  lambda x: mp.exp(-gamma * x) * mp.sin(wj * x) * mp.sin(wk * x),
                  tuple(L * i / 4 for i in range(1, 4)))


def quad_oracle_entry(kernel: Kernel, domain, tol=None):
    """Adaptive quadrature of ``kernel`` over ``domain = (lo, hi)``.

    Returns the value; raises :class:`QuadratureError` if the estimated
    absolute error exceeds ``tol`` (default: 3/4 of the working digits,
    relative to the value).
    """
    lo, hi = mp.mpf(domain[0]), mp.mpf(domain[1])
    pts = [lo] + sorted(p for p in map(mp.mpf, kernel.breakpoints) if lo < p < hi) + [hi]
    method = "gauss-legendre" if kernel.smooth and mp.isfinite(hi) else "tanh-sinh"
    # mp.quad's stopping test is absolute: integrate relative to a sampled size
    probes = [p for p in pts if mp.isfinite(p)]
    probes += [(u + v) / 2 for u, v in zip(pts, pts[1:]) if mp.isfinite(v)]
    scale = max((abs(kernel.f(p)) for p in probes), default=mp.mpf(0)) or mp.mpf(1)
    value, err = mp.quad(lambda x: kernel.f(x) / scale, pts, method=method, error=True)
    value, err = value * scale, err * scale
    if tol is None:
        tol = mp.mpf(10) ** (-(3 * mp.mp.dps) // 4) * max(abs(value), mp.mpf(10) ** (-mp.mp.dps))
    if not err <= tol:
        raise QuadratureError(value, err, tol)
    return value


def dump_matrix(A: mp.matrix, path, digits: int | None = None) -> None:
    """Write ``j k value`` lines (1-based indices) at full precision."""
    digits = digits or mp.mp.dps
    with open(path, "w") as fh:
        for j in range(A.rows):
            for k in range(A.cols):
                fh.write(f"{j + 1} {k + 1} {mp.nstr(A[j, k], digits, strip_zeros=False)}\n")

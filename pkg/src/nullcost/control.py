"""Minimal-norm boundary controls (HUM) for the truncated systems.

For a datum ``y0`` the controlled solution vanishes at time T iff, for every
adjoint mode k,

    eps * int_0^T v(t) f_k(T - t) dt = -exp(-rho_k T) <y0, e^{-M x/(2 eps)} sin_k>

where ``f_k(s) = (k pi / L) exp(-rho_k s)`` is the boundary flux of mode k
(heat: ``eps = 1, M = 0``).  This follows by integrating
``d/dt <y(t), psi(T - t)>`` by parts; only the boundary term at ``x = 0``
survives.  Imposing the first N conditions and minimising ``|v|_{L2}``
puts ``v(T - s) = sum c_k f_k(s)`` with ``G(T) c = b``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .fdsolve import Grid, Scheme, solve_forward
from .gramians import observation_gramian, working_precision
from .pencil import PencilError, solve_spd
from .spectral import ModeVector, ProblemSpec, eigenvalue, sine_product_integral

__all__ = [
    "ControlFunction",
    "NullCheck",
    "moment_rhs",
    "hum_control",
    "moment_residuals",
    "verify_null",
    "write_control_csv",
]


@dataclass
class ControlFunction:
    """``u(t) = sum_k c_k f_k(T - t)`` on (0, T)."""

    spec: ProblemSpec
    T: float
    coeffs: list
    norm_L2: mp.mpf
    precision_bits: int = 256

    @property
    def N(self) -> int:
        return len(self.coeffs)

    def __call__(self, t):
        s = mp.mpf(self.T) - mp.mpf(t)
        return mp.fsum(c * self.spec.wavenumber(k) * mp.exp(-eigenvalue(self.spec, k) * s)
                       for k, c in enumerate(self.coeffs, 1))

    def sample(self, t) -> np.ndarray:
        """Vectorised binary64 evaluation for time stepping."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.arange(1, self.N + 1)
        c = np.array([float(v) for v in self.coeffs])
        w = np.array([float(self.spec.wavenumber(j)) for j in k])
        rho = np.array([float(eigenvalue(self.spec, j)) for j in k])
        s = self.T - t
        return (c * w) @ np.exp(-np.outer(rho, s))


def _datum_pairing(y0: ModeVector, spec: ProblemSpec, N: int) -> list:
    """``<y0, e^{-skew x} sin_k>`` for k = 1..N, in closed form."""
    if y0.spec.L != spec.L:
        raise ValueError("datum and system live on different intervals")
    gamma = spec.skew + y0.spec.skew
    return [mp.fsum(a * sine_product_integral(spec.L, gamma, j, k)
                    for j, a in enumerate(y0.coeffs, 1) if a)
            for k in range(1, N + 1)]


def moment_rhs(y0: ModeVector, spec: ProblemSpec, T, N: int) -> list:
    """Right-hand sides ``b_k`` of the moment conditions ``<u(T - .), f_k> = b_k``."""
    D = spec.diffusivity
    T = mp.mpf(T)
    pair = _datum_pairing(y0, spec, N)
    return [-mp.exp(-eigenvalue(spec, k) * T) * pair[k - 1] / D for k in range(1, N + 1)]


def hum_control(y0: ModeVector, spec: ProblemSpec, T, N: int | None = None,
                precision_bits: int = 256) -> ControlFunction:
    """Minimal-L2-norm control nulling the first N modes of ``y0`` at time T.

    ``y0`` is a :class:`ModeVector` over the modes of its own spec (plain
    sines for a heat spec).  Precision is doubled up to four times if the
    Gramian fails to factor.
    """
    if not T > 0:
        raise ValueError(f"horizon must be positive, got T={T}")
    N = N or y0.N
    bits = working_precision(N, precision_bits)
    for attempt in range(5):
        try:
            with mp.workprec(bits):
                G = observation_gramian(spec, T, N)
                b = moment_rhs(y0, spec, T, N)
                if not any(b):
                    return ControlFunction(spec, T, [mp.mpf(0)] * N, mp.mpf(0), bits)
                c = solve_spd(G, b, bits)
                energy = mp.fsum(ci * bi for ci, bi in zip(c, b))
                return ControlFunction(spec, T, c, mp.sqrt(energy), bits)
        except PencilError:
            if attempt == 4:
                raise
            bits *= 2


def moment_residuals(u: ControlFunction, y0: ModeVector) -> list:
    """``<u(T - .), f_k> - b_k`` by adaptive quadrature, k = 1..N."""
    spec, T = u.spec, mp.mpf(u.T)
    with mp.workprec(u.precision_bits):
        b = moment_rhs(y0, spec, T, u.N)
        out = []
        for k in range(1, u.N + 1):
            wk, rk = spec.wavenumber(k), eigenvalue(spec, k)
            val = mp.quad(lambda s: u(T - s) * wk * mp.exp(-rk * s), [0, T / 8, T])
            out.append(val - b[k - 1])
    return out


@dataclass
class NullCheck:
    ratio: float
    ratio_full: float
    error_estimate: float
    resolved: bool
    grid: Grid


def _modal_samples(v: ModeVector, x: np.ndarray) -> np.ndarray:
    k = np.arange(1, v.N + 1)
    c = np.array([float(a) for a in v.coeffs])
    vals = c @ np.sin(np.outer(k, x) * np.pi / float(v.spec.L))
    if not v.spec.is_heat:
        vals = vals * np.exp(-float(v.spec.skew) * x)
    return vals


def _terminal_ratios(y0, u, spec, grid, N):
    x = grid.x
    h = grid.h
    y0s = _modal_samples(y0, x)
    g = None if u is None else (lambda t: u.sample(t)[0])
    yT = solve_forward(spec, y0s, g, grid)
    norm0 = np.sqrt(h * np.sum(y0s**2))
    skew = float(spec.skew)
    k = np.arange(1, N + 1)
    sines = np.sin(np.outer(k, x) * np.pi / float(spec.L))
    # biorthogonal projection onto the forward eigenfunctions e^{skew x} sin_k
    alpha = (2 / float(spec.L)) * h * (sines * np.exp(-skew * x)) @ yT
    proj = (alpha @ sines) * np.exp(skew * x)
    return (np.sqrt(h * np.sum(proj**2)) / norm0,
            np.sqrt(h * np.sum(yT**2)) / norm0)


def verify_null(y0: ModeVector, u: ControlFunction | None, spec: ProblemSpec, T=None,
                nx: int = 400, nt: int | None = None, target: float = 1e-4,
                scheme: Scheme = Scheme.CRANK_NICOLSON, N: int | None = None) -> NullCheck:
    """Run the finite-difference solver and measure the terminal state.

    ``ratio`` is the L2 norm of the terminal state projected on the N
    controlled modes, divided by ``|y0|``; ``ratio_full`` keeps every grid
    mode.  The two differ by the uncontrolled tail (modes > N) that the
    truncated control excites.  A second run on the half-resolution grid
    gives the Richardson estimate ``error_estimate``; ``resolved`` is False
    when it exceeds ``target``.
    """
    if T is None:
        if u is None:
            raise ValueError("an uncontrolled check needs the horizon T")
        T = u.T
    T = float(T)
    N = N or (u.N if u is not None else y0.N)
    nt = nt or 40 * nx
    grid = Grid(nx, nt, float(spec.L), T, scheme)
    coarse = Grid((nx + 1) // 2 - 1, max(nt // 2, 8), float(spec.L), T, scheme)
    ratio, full = _terminal_ratios(y0, u, spec, grid, N)
    ratio_c, _ = _terminal_ratios(y0, u, spec, coarse, N)
    order = 3.0 if scheme is Scheme.CRANK_NICOLSON else 1.0
    err = abs(ratio_c - ratio) / order
    return NullCheck(float(ratio), float(full), float(err), bool(err <= target), grid)


def write_control_csv(u: ControlFunction, path, n: int = 201, digits: int = 20) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "u"])
        with mp.workprec(u.precision_bits):
            for i in range(n):
                t = mp.mpf(u.T) * i / (n - 1)
                w.writerow([mp.nstr(t, digits), mp.nstr(u(t), digits)])

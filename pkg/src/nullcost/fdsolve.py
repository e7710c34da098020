"""Finite-difference cross-checks for the controlled and adjoint systems.

The forward solver marches

    y_t - D y_xx + M y_x = 0,   y(t, 0) = u(t),   y(t, L) = 0

(``D = 1, M = 0`` for heat, ``D = eps`` otherwise) on a uniform grid with
centred second-order differences in space and Crank-Nicolson or implicit
Euler in time.  It works in binary64 and is meant only as an independent
check of the spectral machinery.
"""

from __future__ import annotations

import csv
import enum
import warnings
from fractions import Fraction
from dataclasses import dataclass
from typing import Callable

import mpmath as mp
import numpy as np
from scipy.sparse import diags, identity
from scipy.sparse.linalg import splu

from .spectral import ProblemSpec

__all__ = ["Scheme", "Grid", "solve_forward", "residual_of", "write_state_csv"]


class Scheme(enum.Enum):
    CRANK_NICOLSON = "cn"
    IMPLICIT_EULER = "ie"


@dataclass(frozen=True)
class Grid:
    """``nx`` interior nodes on (0, L) and ``nt`` steps on (0, T)."""

    nx: int
    nt: int
    L: float
    T: float
    scheme: Scheme = Scheme.CRANK_NICOLSON

    def __post_init__(self):
        if self.nx < 8 or self.nt < 8:
            raise ValueError(f"grid too small: nx={self.nx}, nt={self.nt} (need >= 8)")
        if not (self.L > 0 and self.T > 0):
            raise ValueError("L and T must be positive")

    @property
    def h(self) -> float:
        return self.L / (self.nx + 1)

    @property
    def tau(self) -> float:
        return self.T / self.nt

    @property
    def x(self) -> np.ndarray:
        return self.h * np.arange(1, self.nx + 1)

    @property
    def t(self) -> np.ndarray:
        return self.tau * np.arange(self.nt + 1)

    @property
    def order(self) -> str:
        return "h^2 + tau^2" if self.scheme is Scheme.CRANK_NICOLSON else "h^2 + tau"

    def refined(self, factor: int = 2) -> "Grid":
        return Grid((self.nx + 1) * factor - 1, self.nt * factor, self.L, self.T, self.scheme)


def _coefficients(spec: ProblemSpec, grid: Grid):
    D = 1.0 if spec.is_heat else float(spec.eps)
    M = 0.0 if spec.is_heat else float(spec.M)
    h = grid.h
    if M and abs(M) * h / (2 * D) > 1:
        warnings.warn(f"cell Peclet number {abs(M) * h / (2 * D):.2f} > 1: "
                      "centred convection may oscillate", RuntimeWarning, stacklevel=3)
    lower = D / h**2 + M / (2 * h)
    upper = D / h**2 - M / (2 * h)
    n = grid.nx
    A = diags([np.full(n - 1, lower), np.full(n, -2 * D / h**2), np.full(n - 1, upper)],
              [-1, 0, 1], format="csc")
    return A, lower


def _boundary_fn(u, grid: Grid) -> Callable[[float], float]:
    if u is None:
        return lambda t: 0.0
    if callable(u):
        return lambda t: float(u(t))
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.nt + 1,):
        raise ValueError(f"boundary data needs nt + 1 = {grid.nt + 1} samples, got {u.shape}")
    return lambda t: float(np.interp(t, grid.t, u))


def solve_forward(spec: ProblemSpec, y0, u, grid: Grid, rannacher: int = 2) -> np.ndarray:
    """Terminal state at the interior nodes.

    ``y0`` is an array of ``nx`` samples or a callable of x; ``u`` is a
    callable of t, an array of ``nt + 1`` node values, or None for a
    homogeneous boundary.  Crank-Nicolson replaces its first ``rannacher``
    steps by pairs of implicit-Euler half steps to damp the start-up
    incompatibility between ``y0`` and ``u(0)``.
    """
    if float(spec.L) != float(grid.L):
        raise ValueError("grid and spec disagree on L")
    x = grid.x
    y = np.asarray(y0(x) if callable(y0) else y0, dtype=float).copy()
    if y.shape != (grid.nx,):
        raise ValueError(f"initial state needs {grid.nx} samples, got {y.shape}")
    A, lower = _coefficients(spec, grid)
    g = _boundary_fn(u, grid)
    I = identity(grid.nx, format="csc")
    tau = grid.tau

    def bvec(t):
        b = np.zeros(grid.nx)
        b[0] = lower * g(t)
        return b

    ie_half = splu((I - tau / 2 * A).tocsc())
    if grid.scheme is Scheme.IMPLICIT_EULER:
        ie = splu((I - tau * A).tocsc())
        for n in range(grid.nt):
            y = ie.solve(y + tau * bvec((n + 1) * tau))
        return y
    cn_lhs = ie_half  # same matrix
    cn_rhs = (I + tau / 2 * A).tocsc()
    for n in range(grid.nt):
        t0 = n * tau
        if n < rannacher:
            y = ie_half.solve(y + tau / 2 * bvec(t0 + tau / 2))
            y = ie_half.solve(y + tau / 2 * bvec(t0 + tau))
        else:
            y = cn_lhs.solve(cn_rhs @ y + tau / 2 * (bvec(t0) + bvec(t0 + tau)))
    return y


# central-difference weights as exact fractions; converted at call precision
_D1 = {
    2: ([-1, 1], [Fraction(-1, 2), Fraction(1, 2)]),
    4: ([-2, -1, 1, 2], [Fraction(1, 12), Fraction(-2, 3), Fraction(2, 3), Fraction(-1, 12)]),
    6: ([-3, -2, -1, 1, 2, 3], [Fraction(-1, 60), Fraction(3, 20), Fraction(-3, 4),
                                Fraction(3, 4), Fraction(-3, 20), Fraction(1, 60)]),
}
_D2 = {
    2: ([-1, 0, 1], [Fraction(1), Fraction(-2), Fraction(1)]),
    4: ([-2, -1, 0, 1, 2], [Fraction(-1, 12), Fraction(4, 3), Fraction(-5, 2),
                            Fraction(4, 3), Fraction(-1, 12)]),
    6: ([-3, -2, -1, 0, 1, 2, 3], [Fraction(1, 90), Fraction(-3, 20), Fraction(3, 2),
                                   Fraction(-49, 18), Fraction(3, 2), Fraction(-3, 20),
                                   Fraction(1, 90)]),
}


def _weights(table, order):
    offsets, fracs = table[order]
    return offsets, [mp.mpf(f.numerator) / f.denominator for f in fracs]


def residual_of(evaluator, spec: ProblemSpec, grid: Grid, order: int = 2,
                steps: tuple | None = None, adjoint: bool = True, stride: int = 1):
    """Max over interior grid nodes of the finite-difference PDE residual.

    The adjoint operator is ``d_t - D d_xx - M d_x``; with ``adjoint=False``
    the forward operator ``d_t - D d_xx + M d_x`` is used.  Stencil steps
    default to the grid spacing; ``steps=(dt, dx)`` decouples them from the
    sampling grid.  Nodes whose stencil would leave ``[0, L] x [0, inf)``
    are skipped.  Evaluation runs at the ambient mpmath precision.
    """
    if order not in _D1:
        raise ValueError(f"order must be one of {sorted(_D1)}")
    dt, dx = (mp.mpf(grid.tau), mp.mpf(grid.h)) if steps is None else map(mp.mpf, steps)
    D = spec.diffusivity
    M = spec.speed if adjoint else -spec.speed
    off1, w1 = _weights(_D1, order)
    off2, w2 = _weights(_D2, order)
    half = order // 2
    L = mp.mpf(grid.L)
    worst = mp.mpf(0)
    for n in range(1, grid.nt, stride):
        t = n * mp.mpf(grid.tau)
        if t - half * dt < 0:
            continue
        for i in range(1, grid.nx + 1, stride):
            x = i * L / (grid.nx + 1)
            if x - half * dx < 0 or x + half * dx > L:
                continue
            ut = mp.fsum(w * evaluator(t + o * dt, x) for o, w in zip(off1, w1)) / dt
            ux = mp.fsum(w * evaluator(t, x + o * dx) for o, w in zip(off1, w1)) / dx
            uxx = mp.fsum(w * evaluator(t, x + o * dx) for o, w in zip(off2, w2)) / dx**2
            worst = max(worst, abs(ut - D * uxx - M * ux))
    return worst


def write_state_csv(x, y, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "value"])
        for xi, yi in zip(x, y):
            w.writerow([repr(float(xi)), repr(float(yi))])

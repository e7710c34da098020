"""Exponential rates, critical horizons and finite-sample verifiers.

Everything here works on finite samples.  A fitted rate is the slope of
``ln C`` against ``1/p`` over the small-``p`` tail; it estimates
``lim p ln C(p)`` when that limit exists, and the reported band
``min/max p ln C`` over the tail shows how far the samples are from it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np
from scipy.optimize import brentq

from .cost import CostKind, observability_cost
from .transform import chain_exponent

__all__ = [
    "FitResult",
    "fit_rate",
    "critical_times",
    "Feasibility",
    "feasible_ab",
    "Prop1Result",
    "prop1_verify",
    "eps_sweep",
    "read_samples_csv",
    "FIT_FIELDS",
]

FIT_FIELDS = ["rate", "intercept", "residual", "n_samples"]


@dataclass
class FitResult:
    rate: float
    intercept: float
    residual: float
    band: tuple[float, float]
    monotone: bool
    samples: list = field(repr=False)
    used: list = field(repr=False, default_factory=list)

    @property
    def n_samples(self) -> int:
        return len(self.used)

    def row(self, digits: int = 20) -> dict:
        return {"rate": mp.nstr(mp.mpf(self.rate), digits, strip_zeros=False),
                "intercept": mp.nstr(mp.mpf(self.intercept), digits, strip_zeros=False),
                "residual": mp.nstr(mp.mpf(self.residual), digits, strip_zeros=False),
                "n_samples": self.n_samples}


def _unpack(sample):
    """``(p, C)`` or ``(p, C, converged)``; a missing flag counts as usable."""
    if len(sample) == 3:
        return sample[0], sample[1], sample[2]
    p, c = sample
    return p, c, None


def fit_rate(samples, tail_fraction: float = 1.0, drop_unconverged: bool = True) -> FitResult:
    """Least-squares line ``ln C = rate / p + intercept`` over the tail.

    The tail is the ``tail_fraction`` of samples with the smallest ``p``.
    Samples carrying a third entry ``False`` (an unconverged truncation)
    are dropped first when ``drop_unconverged`` is set.  The fit runs in
    mpmath so huge costs do not overflow.  ``monotone`` reports whether
    ``p ln C`` is monotone along the tail ordered by ``p``.
    """
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    rows = []
    for s in samples:
        p, c, ok = _unpack(s)
        p, c = mp.mpf(p), mp.mpf(c)
        if not (p > 0 and c > 0):
            raise ValueError(f"samples need positive parameter and cost, got ({p}, {c})")
        if drop_unconverged and ok is False:
            continue
        rows.append((p, c))
    rows.sort(key=lambda r: r[0])
    if len({p for p, _ in rows}) != len(rows):
        raise ValueError("sample parameters must be distinct")
    n = math.ceil(tail_fraction * len(rows) - 1e-12)
    tail = rows[:n]
    if len(tail) < 3:
        raise ValueError(f"need at least 3 tail samples, got {len(tail)}")
    xs = [1 / p for p, _ in tail]
    ys = [mp.log(c) for _, c in tail]
    m = len(tail)
    xbar = mp.fsum(xs) / m
    ybar = mp.fsum(ys) / m
    sxx = mp.fsum((x - xbar) ** 2 for x in xs)
    sxy = mp.fsum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    rate = sxy / sxx
    intercept = ybar - rate * xbar
    resid = mp.sqrt(mp.fsum((y - rate * x - intercept) ** 2 for x, y in zip(xs, ys)))
    scaled = [float(p * y) for (p, _), y in zip(tail, ys)]
    d = np.diff(scaled)
    monotone = bool(np.all(d >= 0) or np.all(d <= 0))
    return FitResult(float(rate), float(intercept), float(resid),
                     (min(scaled), max(scaled)), monotone, list(samples), tail)


def _regime(M, regime):
    if M == 0:
        raise ValueError("M must be nonzero")
    natural = "Mpos" if M > 0 else "Mneg"
    if regime is None:
        return natural
    if regime not in ("Mpos", "Mneg"):
        raise ValueError(f"regime must be 'Mpos' or 'Mneg', got {regime!r}")
    if regime != natural:
        raise ValueError(f"regime {regime} does not match the sign of M={M}")
    return regime


def critical_times(L, M, regime: str | None = None, a=1, b=0):
    """Positive root in T of the exponent polynomial ``2 T * chain_exponent``.

    Mpos: ``L^2/a - (1 - b) M^2 T^2``; Mneg adds ``2 |M| L T``.  At
    ``(a, b) = (1, 0)`` these give ``L/|M|`` and ``(1 + sqrt 2) L/|M|``.
    """
    regime = _regime(M, regime)
    L, M, a, b = map(mp.mpf, (L, M, a, b))
    if not L > 0:
        raise ValueError("L must be positive")
    if not 0 < a <= 1:
        raise ValueError(f"a must lie in (0, 1], got {a}")
    if b == 1:
        raise ValueError("b = 1 removes the quadratic term; there is no root")
    if not 0 <= b < 1:
        raise ValueError(f"b must lie in [0, 1), got {b}")
    m = abs(M)
    if regime == "Mpos":
        return L / (m * mp.sqrt(a * (1 - b)))
    return L * (1 + mp.sqrt(1 + (1 - b) / a)) / ((1 - b) * m)


@dataclass
class Feasibility:
    feasible: bool
    a: float | None
    b: float | None
    exponent: float
    margin: float
    T_critical: float


def feasible_ab(T, L, M, grid: int = 200) -> Feasibility:
    """Find ``(a, b)`` with a strictly negative chain exponent.

    The exponent is increasing in ``1 - a`` and in ``b``, so its infimum is
    ``E* = E(1, 0)``.  When ``E* < 0`` the search returns the pair that
    keeps farthest from the excluded edges, maximising ``min(1 - a, b)``
    subject to ``E(a, b) <= E*/2``: a ``grid x grid`` logarithmic scan in
    ``(1 - a, b)`` brackets the optimum and a root solve on the diagonal
    ``1 - a = b`` refines it.  Otherwise the result is infeasible and
    ``margin = E* >= 0`` is the gap at the boundary.  ``exponent`` is the
    coefficient of ``1/eps`` in the bound, i.e. ``-2K`` for the decay rate
    ``e^{-K/eps}`` of the cost itself.
    """
    if not (T > 0 and L > 0) or M == 0:
        raise ValueError("need T > 0, L > 0 and M != 0")
    Tc = float(critical_times(L, M))
    star = float(chain_exponent(L, M, T, 1, 0))
    if star >= 0:
        return Feasibility(False, None, None, star, star, Tc)
    target = star / 2

    L_, M_, T_ = float(L), float(M), float(T)

    def E(s_a, s_b):
        # float mirror of chain_exponent, vectorised for the scan
        e = L_ * L_ / (2 * (1 - s_a) * T_) - M_ * M_ * T_ * (1 - s_b) / 2
        return e + (abs(M_) * L_ if M_ < 0 else 0.0)

    levels = np.logspace(-8, 0, grid, endpoint=False)
    SA, SB = np.meshgrid(levels, levels, indexing="ij")
    ok = E(SA, SB) <= target
    if not ok.any():
        raise RuntimeError("grid scan found no admissible pair; refine the grid")
    score = np.where(ok, np.minimum(SA, SB), -1.0)
    lo = float(score.max())
    i = int(np.searchsorted(levels, lo))
    hi = float(levels[i + 1]) if i + 1 < grid else 1 - 1e-12
    diag = lambda s: E(s, s) - target
    if diag(hi) > 0:
        s = brentq(diag, lo, hi, xtol=1e-16, rtol=1e-15)
        # stay on the feasible side of the level set
        while diag(s) > 0:
            s = float(np.nextafter(s, 0))
    else:
        s = hi
    a, b = 1 - s, s
    return Feasibility(True, a, b, float(chain_exponent(L, M, T, a, b)), star, Tc)


@dataclass
class Prop1Result:
    passed: bool
    r: float | None
    C: float | None
    rate: float
    margins: dict = field(repr=False, default_factory=dict)


def prop1_verify(cint_samples, L, K, n_r: int = 64, tail_fraction: float = 1.0) -> Prop1Result:
    """Check that ``e^{L^2/(2rT)} C_int(T) / (T (1 - r)) <= C e^{2K/T}`` on the samples.

    For each ``r`` on a geometric grid in ``(L^2/(4K), 1)`` the log of the
    ratio of the two sides is ``(L^2/(2r) - 2K)/T + ln C_int(T) + ln(1/(T(1-r)))``.
    The last term is a polynomial prefactor with zero exponential rate; the
    first two have rate ``L^2/(2r) - 2K + rate(C_int)``, with ``rate(C_int)``
    fitted by :func:`fit_rate`.  An ``r`` is admissible when that total rate
    is not positive, i.e. the ratio stays bounded as T decreases.  The
    witness is the admissible ``r`` with the smallest ``C`` (the max ratio
    over the samples).
    """
    L, K = float(L), float(K)
    if not K > L * L / 4:
        raise ValueError(f"K must exceed L^2/4 = {L * L / 4}, got {K}")
    samples = [(float(t), mp.mpf(c)) for t, c in cint_samples]
    if len(samples) < 3:
        raise ValueError(f"need at least 3 samples, got {len(samples)}")
    fit = fit_rate(samples, tail_fraction)
    r0 = L * L / (4 * K)
    rs = 1 - (1 - r0) * np.geomspace(1, 1e-4, n_r + 1)[1:]
    best = None
    margins = {}
    for r in rs:
        total = L * L / (2 * r) - 2 * K + fit.rate
        margins[float(r)] = total
        if total > 0:
            continue
        logs = [(L * L / (2 * r) - 2 * K) / t + mp.log(c) - math.log(t * (1 - r))
                for t, c in samples]
        C = float(mp.exp(max(logs)))
        if best is None or C < best[1]:
            best = (float(r), C)
    if best is None:
        return Prop1Result(False, None, None, fit.rate, margins)
    return Prop1Result(True, best[0], best[1], fit.rate, margins)


def eps_sweep(T, L, M, eps_grid, N: int, precision_bits: int = 256):
    """Truncated ``C_TD`` on a decreasing ``eps`` grid and the fitted rate.

    Returns ``(fit, estimates)``; ``fit.rate`` estimates ``lim eps ln C_TD``.
    Every truncated value is a lower bound, so all samples are fitted: a
    positive rate certifies blow-up whether or not the truncation has
    converged.
    """
    eps_grid = [float(e) for e in eps_grid]
    if any(not 0 < e < 1 for e in eps_grid):
        raise ValueError("eps values must lie in (0, 1)")
    if any(b >= a for a, b in zip(eps_grid, eps_grid[1:])):
        raise ValueError("eps grid must be strictly decreasing")
    ests = [observability_cost(CostKind.CTD, T, L, N, M=M, eps=e, precision_bits=precision_bits)
            for e in eps_grid]
    fit = fit_rate([(e, est.value) for e, est in zip(eps_grid, ests)])
    return fit, ests


def read_samples_csv(path) -> list:
    """``(parameter, value)`` pairs from a CSV with those two columns."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"parameter", "value"} - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            out.append((float(row["parameter"]), mp.mpf(row["value"])))
    return out

"""Truncated cost and observability constants.

Each constant is the square root of the largest eigenvalue of a pencil
``(state form, observation form)`` over the first N modes:

========  ==================================  ====================
kind      state form                          observation form
========  ==================================  ====================
``CD``    ``|phi(T)|^2`` in L2 (or H^1_0)     ``G(T)``
``Cint``  weighted Gramian, infinite horizon  ``G(T)``
``Cfin``  weighted Gramian, horizon T         ``G(T)``
``CTD``   ``|psi(T)|^2`` in L2                ``G_TD(T)``
========  ==================================  ====================

A supremum over an N-dimensional subspace can only underestimate the true
constant, so every value here is a lower bound, nondecreasing in N.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field

import mpmath as mp

from .gramians import (INFINITE, observation_gramian, terminal_mass,
                       weighted_gramian, working_precision)
from .pencil import PencilError, nested_pencil
from .spectral import ProblemSpec, eigenvalue

__all__ = [
    "CostKind",
    "CostEstimate",
    "observability_cost",
    "convergence_sweep",
    "plateau",
    "pencil_matrices",
    "CSV_FIELDS",
    "csv_row",
    "write_csv",
]

MAX_ESCALATIONS = 4


class CostKind(enum.Enum):
    CD = "cd"
    CINT = "cint"
    CFIN = "cfin"
    CTD = "ctd"


@dataclass
class CostEstimate:
    kind: CostKind
    params: dict
    N: int
    value: mp.mpf
    precision_bits: int
    convergence: list
    converged: bool | None = None
    plateau_N: int | None = None
    maximizer: list = field(default_factory=list, repr=False)
    pairing: str = "L2"

    @property
    def squared(self):
        """The pencil eigenvalue, i.e. the constant multiplying the observation integral."""
        return self.value ** 2


def _spec_for(kind: CostKind, L, M, eps) -> ProblemSpec:
    if kind is CostKind.CTD:
        if M is None or eps is None:
            raise ValueError("CTD needs both M and eps")
        return ProblemSpec.transport_diffusion(L, M, eps)
    return ProblemSpec.heat(L)


def pencil_matrices(kind: CostKind, spec: ProblemSpec, T, N: int, pairing: str = "L2"):
    """``(state form, observation form)`` at the ambient precision."""
    B = observation_gramian(spec, T, N)
    if kind is CostKind.CD or kind is CostKind.CTD:
        A = terminal_mass(spec, T, N)
        if pairing == "H1":
            if not spec.is_heat:
                raise ValueError("the H1 pairing is only available for the heat system")
            for k in range(N):
                A[k, k] *= eigenvalue(spec, k + 1)
        elif pairing != "L2":
            raise ValueError(f"unknown pairing {pairing!r}")
    elif kind is CostKind.CINT:
        A = weighted_gramian(spec, N, INFINITE)
    else:
        A = weighted_gramian(spec, N, T)
    return A, B


def observability_cost(kind, T, L, N: int, M=None, eps=None,
                       precision_bits: int = 256, pairing: str = "L2") -> CostEstimate:
    """Truncated constant for ``kind`` with the profile over N' = 1..N.

    ``pairing`` selects the norm of the terminal state for ``CD``: ``"L2"``
    is the observability inequality as usually written; ``"H1"`` measures
    ``phi(T)`` in H^1_0, which is the exact dual of the control cost for
    H^{-1} initial data.  Precision starts at
    :func:`~nullcost.gramians.working_precision` and is doubled (up to four
    times) when the observation Gramian fails to factor.
    """
    kind = CostKind(kind)
    if N < 1:
        raise ValueError("N must be >= 1")
    if not T > 0:
        raise ValueError(f"horizon must be positive, got T={T}")
    spec = _spec_for(kind, L, M, eps)
    bits = working_precision(N, precision_bits)
    for attempt in range(MAX_ESCALATIONS + 1):
        try:
            with mp.workprec(bits):
                A, B = pencil_matrices(kind, spec, T, N, pairing)
                results = nested_pencil(A, B, bits)
                profile = [mp.sqrt(r.value) for r in results]
            break
        except PencilError:
            if attempt == MAX_ESCALATIONS:
                raise
            bits *= 2
    params = {"T": T, "L": L, "M": M, "eps": eps}
    return CostEstimate(kind, params, N, profile[-1], bits, profile,
                        maximizer=results[-1].vector, pairing=pairing)


def plateau(profile, rtol: float = 1e-6) -> int | None:
    """First truncation from which every relative increment is below ``rtol``."""
    start = None
    for n in range(1, len(profile)):
        prev, cur = profile[n - 1], profile[n]
        inc = (cur - prev) / prev if prev else mp.inf
        if inc < rtol:
            if start is None:
                start = n + 1
        else:
            start = None
    return start


def convergence_sweep(kind, T, L, N_max: int, M=None, eps=None,
                      precision_bits: int = 256, pairing: str = "L2",
                      rtol: float = 1e-6) -> CostEstimate:
    """Run N = 1..N_max and flag a plateau of relative increments below ``rtol``.

    When no plateau is reached the estimate is still returned, with
    ``converged=False``.
    """
    if N_max < 2:
        raise ValueError("a sweep needs N_max >= 2")
    est = observability_cost(kind, T, L, N_max, M, eps, precision_bits, pairing)
    est.plateau_N = plateau(est.convergence, rtol)
    est.converged = est.plateau_N is not None
    return est


CSV_FIELDS = ["kind", "L", "T", "M", "eps", "N", "precision", "value", "converged"]


def _fmt(x, digits):
    if x is None:
        return ""
    return mp.nstr(x, digits, strip_zeros=False)


def csv_row(est: CostEstimate, digits: int = 20) -> dict:
    p = est.params
    return {
        "kind": est.kind.value,
        "L": repr(p["L"]),
        "T": repr(p["T"]),
        "M": "" if p["M"] is None else repr(p["M"]),
        "eps": "" if p["eps"] is None else repr(p["eps"]),
        "N": est.N,
        "precision": est.precision_bits,
        "value": _fmt(est.value, digits),
        "converged": "" if est.converged is None else str(est.converged).lower(),
    }


def write_csv(estimates, fh=None, digits: int = 20) -> str:
    """Write cost rows; returns the text when ``fh`` is None."""
    out = fh or io.StringIO()
    w = csv.DictWriter(out, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for est in estimates:
        w.writerow(csv_row(est, digits))
    return out.getvalue() if fh is None else ""

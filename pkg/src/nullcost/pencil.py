"""Symmetric-definite matrix pencils at arbitrary precision.

The optimal constant of an inequality ``c^T A c <= sigma c^T B c`` is the
largest eigenvalue of the pencil ``(A, B)``.  It is computed by a Cholesky
factorisation ``B = R R^T``, the congruence ``C = R^{-1} A R^{-T}`` and a
cyclic Jacobi eigensolver on ``C``.

Linear algebra runs on numpy object arrays of :class:`gmpy2.mpfr`, which is
roughly an order of magnitude faster than mpmath's own scalars; inputs and
outputs are mpmath values.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
import mpmath as mp
import numpy as np

__all__ = [
    "PencilError",
    "PencilResult",
    "solve_pencil",
    "nested_pencil",
    "jacobi_eigh",
    "cholesky",
    "is_positive_definite",
    "solve_spd",
    "to_mpfr",
    "to_mpf",
]


class PencilError(ArithmeticError):
    """B is not numerically positive definite at the working precision."""


@dataclass
class PencilResult:
    value: mp.mpf
    vector: list
    precision_bits: int


def _as_rows(A):
    if isinstance(A, mp.matrix):
        return [[A[i, j] for j in range(A.cols)] for i in range(A.rows)]
    return np.asarray(A, dtype=object).tolist()


def to_mpfr(x):
    if isinstance(x, mp.mpf):
        sign, man, exp, _ = x._mpf_
        if not man:
            return gmpy2.mpfr(0)
        v = gmpy2.mul_2exp(gmpy2.mpfr(man), exp)
        return -v if sign else v
    if isinstance(x, (int, gmpy2.mpz)):
        return gmpy2.mpfr(x)
    if isinstance(x, float):
        return gmpy2.mpfr(x)
    return gmpy2.mpfr(str(x))


def to_mpf(x):
    # exact: mantissa/exponent round trip
    if not x:
        return mp.mpf(0)
    man, exp = x.as_mantissa_exp()
    return mp.mpf((int(man), int(exp)))


def _matrix(A, bits):
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        rows = _as_rows(A)
        M = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=object)
        for i, row in enumerate(rows):
            for j, v in enumerate(row):
                M[i, j] = to_mpfr(v) + 0  # round to context precision
    return M


def cholesky(B: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of an mpfr object array (context precision)."""
    n = B.shape[0]
    R = np.full((n, n), gmpy2.mpfr(0), dtype=object)
    for i in range(n):
        d = B[i, i] - np.dot(R[i, :i], R[i, :i]) if i else B[i, i]
        if not d > 0:
            raise PencilError(
                f"Cholesky pivot {i} is {float(d):.3e}: B is not positive definite at "
                f"{gmpy2.get_context().precision} bits; raise the precision or lower N")
        R[i, i] = gmpy2.sqrt(d)
        if i + 1 < n:
            col = B[i + 1:, i] - (R[i + 1:, :i] @ R[i, :i] if i else 0)
            R[i + 1:, i] = col / R[i, i]
    return R


def _forward_solve(R: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Solve ``R Y = X`` for lower-triangular R (rows of X as right-hand sides)."""
    n = R.shape[0]
    Y = np.empty_like(X)
    for i in range(n):
        acc = X[i] - (R[i, :i] @ Y[:i]) if i else X[i]
        Y[i] = acc / R[i, i]
    return Y


def jacobi_eigh(S: np.ndarray, V: np.ndarray | None = None, max_sweeps: int = 60):
    """Cyclic Jacobi on a symmetric mpfr object array.

    Rotations use Rutishauser's stable formulas.  Iterates until the
    off-diagonal Frobenius norm is below ``2**(-bits/2)`` times the diagonal
    norm, i.e. relative tolerance of half the working digits.  Returns
    ``(eigenvalues, eigenvectors)``; ``V`` seeds the accumulated basis.
    """
    A = S.copy()
    n = A.shape[0]
    V = np.identity(n, dtype=object) * gmpy2.mpfr(1) if V is None else V.copy()
    bits = gmpy2.get_context().precision
    tol = gmpy2.mul_2exp(gmpy2.mpfr(1), -bits // 2)
    tiny = gmpy2.mul_2exp(gmpy2.mpfr(1), -bits - 8)
    zero = gmpy2.mpfr(0)
    for _ in range(max_sweeps):
        diag = sum(A[i, i] ** 2 for i in range(n))
        off = sum(A[i, j] ** 2 for i in range(n) for j in range(i + 1, n)) * 2
        if off <= tol * tol * diag:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= tiny * gmpy2.sqrt(abs(A[p, p] * A[q, q])):
                    A[p, q] = A[q, p] = zero
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * apq)
                t = 1 / (abs(theta) + gmpy2.sqrt(theta * theta + 1))
                if theta < 0:
                    t = -t
                c = 1 / gmpy2.sqrt(t * t + 1)
                s = t * c
                app = A[p, p] - t * apq
                aqq = A[q, q] + t * apq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                A[p, :] = A[:, p]
                A[q, :] = A[:, q]
                A[p, p], A[q, q] = app, aqq
                A[p, q] = A[q, p] = zero
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        raise PencilError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    return np.array([A[i, i] for i in range(n)], dtype=object), V


def _congruence(A, B, bits):
    Bm = _matrix(B, bits)
    Am = _matrix(A, bits)
    R = cholesky(Bm)
    X = _forward_solve(R, Am)          # R^{-1} A
    C = _forward_solve(R, X.T.copy())  # R^{-1} (R^{-1} A)^T = R^{-1} A R^{-T}
    C = (C + C.T) / 2
    return R, C


def _back_vector(R, y):
    """Solve ``R^T c = y``."""
    n = R.shape[0]
    c = np.empty(n, dtype=object)
    for i in range(n - 1, -1, -1):
        acc = y[i] - (R[i + 1:, i] @ c[i + 1:]) if i + 1 < n else y[i]
        c[i] = acc / R[i, i]
    return c


def solve_pencil(A, B, precision_bits: int | None = None) -> PencilResult:
    """Largest eigenvalue of ``A c = sigma B c`` and a maximiser.

    ``A`` symmetric positive semidefinite, ``B`` symmetric positive definite;
    mpmath matrices, nested lists or object arrays.  The maximiser is
    normalised to ``c^T B c = 1``.  Raises :class:`PencilError` if the
    factorisation of ``B`` fails.
    """
    bits = precision_bits or mp.mp.prec
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        R, C = _congruence(A, B, bits)
        w, V = jacobi_eigh(C)
        i = max(range(len(w)), key=lambda k: w[k])
        c = _back_vector(R, V[:, i])
    with mp.workprec(bits):
        return PencilResult(to_mpf(w[i]), [to_mpf(x) for x in c], bits)


def _shifted_solve(C: np.ndarray, sigma, v: np.ndarray) -> np.ndarray:
    """Gaussian elimination with partial pivoting for ``(C - sigma I) y = v``."""
    n = C.shape[0]
    M = C.copy()
    for i in range(n):
        M[i, i] = M[i, i] - sigma
    y = v.copy()
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(M[i, k]))
        if p != k:
            M[[k, p]] = M[[p, k]]
            y[[k, p]] = y[[p, k]]
        if not M[k, k]:
            raise ZeroDivisionError("shift hit an eigenvalue exactly")
        if k + 1 < n:
            f = M[k + 1:, k] / M[k, k]
            M[k + 1:, k:] -= np.outer(f, M[k, k:])
            y[k + 1:] -= f * y[k]
    x = np.empty(n, dtype=object)
    for i in range(n - 1, -1, -1):
        acc = y[i] - (M[i, i + 1:] @ x[i + 1:]) if i + 1 < n else y[i]
        x[i] = acc / M[i, i]
    return x


def _bounds_from_above(C: np.ndarray, bound) -> bool:
    """True iff every eigenvalue of C is below ``bound`` (Cholesky of ``bound I - C``)."""
    n = C.shape[0]
    M = -C
    for i in range(n):
        M[i, i] = M[i, i] + bound
    try:
        cholesky(M)
    except PencilError:
        return False
    return True


def _top_pair(C: np.ndarray, seed: np.ndarray, bits: int, max_iter: int = 30):
    """Largest eigenpair by Rayleigh-quotient iteration, certified from above.

    Returns ``None`` when the iteration settles on an eigenvalue that the
    certificate shows is not the largest.
    """
    v = seed / gmpy2.sqrt(seed @ seed)
    sigma = v @ (C @ v)
    tol = gmpy2.mul_2exp(gmpy2.mpfr(1), -bits // 2)
    for _ in range(max_iter):
        try:
            y = _shifted_solve(C, sigma, v)
        except ZeroDivisionError:
            break
        v = y / gmpy2.sqrt(y @ y)
        new = v @ (C @ v)
        done = abs(new - sigma) <= tol * abs(new)
        sigma = new
        if done:
            break
    slack = gmpy2.mul_2exp(gmpy2.mpfr(1), -bits // 3)
    if not _bounds_from_above(C, sigma + slack * abs(sigma)):
        return None
    return sigma, v


def nested_pencil(A, B, precision_bits: int | None = None) -> list[PencilResult]:
    """Pencil maxima for every leading n x n block, n = 1..N.

    With ``B = R R^T`` the leading block of ``R`` factors the leading block of
    ``B``, and the leading block of ``C = R^{-1} A R^{-T}`` is the congruence
    of the leading blocks, so one factorisation serves every n.  The top
    eigenpair of each block comes from Rayleigh-quotient iteration seeded with
    the previous block's maximiser; a Cholesky factorisation of
    ``sigma (1 + delta) I - C_n`` certifies it is the largest.  Blocks where
    the certificate fails, and the last block, are diagonalised by Jacobi.
    """
    bits = precision_bits or mp.mp.prec
    out = []
    with gmpy2.context(gmpy2.get_context(), precision=bits), mp.workprec(bits):
        R, C = _congruence(A, B, bits)
        n_max = C.shape[0]
        v = np.array([gmpy2.mpfr(1)], dtype=object)
        for n in range(1, n_max + 1):
            Cn = C[:n, :n]
            seed = np.append(v, gmpy2.mpfr(0)) if n > 1 else v
            pair = None if n == n_max else _top_pair(Cn, seed, bits)
            if pair is None:
                w, V = jacobi_eigh(Cn)
                i = max(range(n), key=lambda k: w[k])
                pair = w[i], V[:, i]
            sigma, v = pair
            c = _back_vector(R[:n, :n], v)
            out.append(PencilResult(to_mpf(sigma), [to_mpf(x) for x in c], bits))
    return out


def solve_spd(B, b, precision_bits: int | None = None) -> list:
    """Solve ``B c = b`` for symmetric positive definite B by Cholesky."""
    bits = precision_bits or mp.mp.prec
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        R = cholesky(_matrix(B, bits))
        rhs = np.array([to_mpfr(v) for v in b], dtype=object)
        y = _forward_solve(R, rhs)
        c = _back_vector(R, y)
    with mp.workprec(bits):
        return [to_mpf(x) for x in c]


def is_positive_definite(A, precision_bits: int | None = None) -> bool:
    """Diagonally pivoted LDL^T: every pivot must be positive.

    Also requires symmetry to working precision.
    """
    bits = precision_bits or mp.mp.prec
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        M = _matrix(A, bits)
        n = M.shape[0]
        scale = max(abs(x) for x in M.flat)
        eps = gmpy2.mul_2exp(gmpy2.mpfr(1), -bits + 8)
        if any(abs(M[i, j] - M[j, i]) > eps * scale for i in range(n) for j in range(i)):
            return False
        M = M.copy()
        idx = list(range(n))
        for k in range(n):
            p = max(idx[k:], key=lambda i: M[i, i])
            j = idx.index(p)
            idx[k], idx[j] = idx[j], idx[k]
            piv = M[p, p]
            if not piv > 0:
                return False
            rest = idx[k + 1:]
            if rest:
                col = M[rest, p].copy()
                M[np.ix_(rest, rest)] -= np.outer(col, col) / piv
        return True

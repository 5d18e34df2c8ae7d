"""Small dense linear-algebra kernels (n <= 8).

Everything here is written out explicitly instead of calling a LAPACK
wrapper: the systems in this package never exceed 8x8, and having our own
factorizations keeps the determinant-sign bookkeeping (used for bifurcation
detection) in one place and bit-for-bit reproducible across platforms.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SingularSystemError",
    "sym_eigen",
    "lu_factor",
    "lu_solve",
    "solve",
    "solve_bordered",
    "det_sign",
    "det",
    "householder_complement",
    "orthonormal_columns",
]


class SingularSystemError(ValueError):
    """Raised when a pivot collapses during factorization."""

    def __init__(self, pivot_index: int, pivot: float):
        super().__init__(f"singular system: pivot {pivot_index} has magnitude {pivot:.3e}")
        self.pivot_index = pivot_index
        self.pivot = pivot


def _as_square(M) -> np.ndarray:
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    return A


def sym_eigen(M) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (w, V) with eigenvalues ascending and orthonormal eigenvectors in
    the columns of V, so that V @ diag(w) @ V.T reconstructs M.  Sweeps stop
    once the off-diagonal Frobenius norm falls below 1e-13 * ||M||.
    """
    A = _as_square(M)
    n = A.shape[0]
    scale = np.abs(A).max()
    if scale > 0 and np.abs(A - A.T).max() > 1e-10 * scale:
        raise ValueError("sym_eigen requires a symmetric matrix")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    if scale == 0.0 or n == 1:
        return np.diag(A).copy(), V
    for _ in range(40 * n * n):
        off = 0.0
        p, q, best = 0, 1, -1.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                m = abs(A[i, j])
                off += 2.0 * m * m
                if m > best:
                    best, p, q = m, i, j
        if np.sqrt(off) <= 1e-13 * scale:
            break
        apq = A[p, q]
        if apq == 0.0:
            break
        tau = (A[q, q] - A[p, p]) / (2.0 * apq)
        t = 1.0 / (tau + np.sqrt(1.0 + tau * tau)) if tau >= 0 else -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
        c = 1.0 / np.sqrt(1.0 + t * t)
        s = t * c
        for i in range(n):
            if i != p and i != q:
                aip, aiq = A[i, p], A[i, q]
                A[i, p] = A[p, i] = aip * c - aiq * s
                A[i, q] = A[q, i] = aiq * c + aip * s
        A[p, p] -= t * apq
        A[q, q] += t * apq
        A[p, q] = A[q, p] = 0.0
        vp = V[:, p].copy()
        V[:, p] = vp * c - V[:, q] * s
        V[:, q] = V[:, q] * c + vp * s
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def lu_factor(M) -> tuple[np.ndarray, np.ndarray, int]:
    """Partial-pivot LU. Returns (LU, row permutation, parity of the permutation)."""
    A = _as_square(M).copy()
    n = A.shape[0]
    piv = np.arange(n)
    parity = 1
    scale = np.abs(A).max()
    for k in range(n):
        r = k + int(np.argmax(np.abs(A[k:, k])))
        if abs(A[r, k]) < 1e-14 * max(scale, 1e-300):
            raise SingularSystemError(k, abs(A[r, k]))
        if r != k:
            A[[k, r]] = A[[r, k]]
            piv[[k, r]] = piv[[r, k]]
            parity = -parity
        A[k + 1:, k] /= A[k, k]
        A[k + 1:, k + 1:] -= np.outer(A[k + 1:, k], A[k, k + 1:])
    return A, piv, parity


def lu_solve(LU: np.ndarray, piv: np.ndarray, b) -> np.ndarray:
    n = LU.shape[0]
    x = np.array(b, dtype=float)[piv]
    for k in range(1, n):
        x[k] -= LU[k, :k] @ x[:k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - LU[k, k + 1:] @ x[k + 1:]) / LU[k, k]
    return x


def solve(M, b) -> tuple[np.ndarray, int]:
    """Solve M x = b; returns (x, sign of det M)."""
    LU, piv, parity = lu_factor(M)
    sign = parity
    for k in range(LU.shape[0]):
        if LU[k, k] < 0:
            sign = -sign
    return lu_solve(LU, piv, b), sign


def det_sign(M) -> int:
    """Sign of det(M) from the pivoted factorization (0 never occurs: singular raises)."""
    LU, _, parity = lu_factor(M)
    sign = parity
    for k in range(LU.shape[0]):
        if LU[k, k] < 0:
            sign = -sign
    return sign


def det(M) -> float:
    """Determinant from the pivoted factorization; 0.0 for a singular matrix."""
    try:
        LU, _, parity = lu_factor(M)
    except SingularSystemError:
        return 0.0
    return float(parity) * float(np.prod(np.diag(LU)))


def solve_bordered(J, rhs, border_row=None, border_col=None, corner: float = 0.0):
    """Solve the (optionally bordered) system, returning (x, det sign).

    With a border the assembled matrix is [[J, c], [r^t, corner]] and `rhs`
    must have length n+1.  Without one this is a plain pivoted solve.
    """
    A = _as_square(J)
    if border_row is None and border_col is None:
        return solve(A, rhs)
    if border_row is None or border_col is None:
        raise ValueError("border row and column must be supplied together")
    n = A.shape[0]
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = A
    M[:n, n] = np.asarray(border_col, dtype=float)
    M[n, :n] = np.asarray(border_row, dtype=float)
    M[n, n] = corner
    return solve(M, rhs)


def householder_complement(g) -> np.ndarray:
    """Orthonormal basis (columns) of the complement of a nonzero vector g.

    Taken as the trailing n-1 columns of the Householder reflector sending g
    to a multiple of e1; deterministic, no randomized null spaces.
    """
    g = np.asarray(g, dtype=float)
    nrm = np.sqrt(g @ g)
    if nrm == 0.0:
        raise ValueError("cannot build a complement basis for the zero vector")
    v = g.copy()
    v[0] += nrm if g[0] >= 0 else -nrm
    H = np.eye(g.size) - 2.0 * np.outer(v, v) / (v @ v)
    return H[:, 1:]


def orthonormal_columns(P, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the column space of P via ordered Gram-Schmidt."""
    P = np.asarray(P, dtype=float)
    basis: list[np.ndarray] = []
    for j in range(P.shape[1]):
        w = P[:, j].copy()
        for q in basis:
            w -= (q @ w) * q
        for q in basis:  # second pass for orthogonality at round-off level
            w -= (q @ w) * q
        nw = np.sqrt(w @ w)
        if nw > tol:
            basis.append(w / nw)
    return np.column_stack(basis) if basis else np.zeros((P.shape[0], 0))

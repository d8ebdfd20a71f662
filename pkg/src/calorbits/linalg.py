"""Small linear-algebra helpers: float spans/nullspaces and exact
rational ranks (Gaussian elimination over Fractions)."""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def orth_rows(vectors, tol=1e-10):
    """Orthonormal basis (rows) of the span of the given row vectors."""
    A = np.asarray(vectors, dtype=float)
    if A.size == 0:
        return np.zeros((0, A.shape[1] if A.ndim == 2 else 0))
    _, s, vt = np.linalg.svd(A, full_matrices=False)
    if len(s) == 0 or s[0] == 0:
        return np.zeros((0, A.shape[1]))
    rank = int(np.sum(s > tol * s[0]))
    return vt[:rank]


def float_rank(A, tol=1e-9):
    A = np.asarray(A)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def nullspace(A, tol=1e-10):
    """Orthonormal basis (columns) of the kernel of A."""
    A = np.asarray(A)
    if not np.iscomplexobj(A):
        A = A.astype(float)
    if A.shape[0] == 0:
        return np.eye(A.shape[1])
    _, s, vt = np.linalg.svd(A, full_matrices=A.shape[0] < A.shape[1])
    rank = int(np.sum(s > tol * (s[0] if len(s) and s[0] else 1.0)))
    return vt[rank:].conj().T


def rational_echelon(rows):
    """Row echelon form over Fractions; returns the nonzero pivot rows."""
    m = [[Fraction(x) for x in r] for r in rows]
    out = []
    ncols = len(m[0]) if m else 0
    col = 0
    rix = 0
    nrows = len(m)
    while rix < nrows and col < ncols:
        piv = None
        for r in range(rix, nrows):
            if m[r][col]:
                piv = r
                break
        if piv is None:
            col += 1
            continue
        m[rix], m[piv] = m[piv], m[rix]
        inv = 1 / m[rix][col]
        m[rix] = [x * inv for x in m[rix]]
        for r in range(nrows):
            if r != rix and m[r][col]:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[rix])]
        out.append(m[rix])
        rix += 1
        col += 1
    return out


def rational_rank(rows):
    return len(rational_echelon(rows))

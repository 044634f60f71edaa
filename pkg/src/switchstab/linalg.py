"""Dense real matrix helpers: symmetric eigen extremes, SPD checks, Lyapunov solve."""

from __future__ import annotations

import numpy as np


def _require_finite(mat: np.ndarray) -> None:
    if not np.all(np.isfinite(mat)):
        raise ValueError("non-finite matrix")


def symmetrize(mat: np.ndarray) -> np.ndarray:
    """Return 0.5 * (M + M')."""
    return 0.5 * (mat + mat.T)


def smallest_eigenvalue(sym: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    Uses the closed-form trace/determinant expression for 2x2 matrices and a
    symmetric eigensolver otherwise.  Raises ValueError on non-finite entries.
    """
    sym = np.asarray(sym, dtype=float)
    _require_finite(sym)
    n = sym.shape[0]
    if n == 1:
        return float(sym[0, 0])
    if n == 2:
        a, b, c = sym[0, 0], 0.5 * (sym[0, 1] + sym[1, 0]), sym[1, 1]
        disc = np.hypot(a - c, 2.0 * b)
        return float(0.5 * ((a + c) - disc))
    return float(np.linalg.eigvalsh(symmetrize(sym))[0])


def largest_eigenvalue(sym: np.ndarray) -> float:
    sym = np.asarray(sym, dtype=float)
    _require_finite(sym)
    n = sym.shape[0]
    if n == 1:
        return float(sym[0, 0])
    if n == 2:
        a, b, c = sym[0, 0], 0.5 * (sym[0, 1] + sym[1, 0]), sym[1, 1]
        disc = np.hypot(a - c, 2.0 * b)
        return float(0.5 * ((a + c) + disc))
    return float(np.linalg.eigvalsh(symmetrize(sym))[-1])


def eigenvalues_sym(sym: np.ndarray) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, ascending."""
    sym = np.asarray(sym, dtype=float)
    _require_finite(sym)
    return np.linalg.eigvalsh(symmetrize(sym))


def is_positive_definite(sym: np.ndarray, tol: float = 0.0) -> bool:
    """True iff the smallest eigenvalue exceeds ``tol``."""
    return smallest_eigenvalue(sym) > tol


def solve_sym(sym: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve S z = rhs for symmetric positive definite S (never inverts)."""
    return np.linalg.solve(symmetrize(np.asarray(sym, dtype=float)), rhs)


def _vech_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    iu = np.triu_indices(n)
    return iu


def solve_lyapunov(a: np.ndarray, c: np.ndarray, beta: float) -> np.ndarray:
    """Solve A'S + S A + beta S = C'C for symmetric S.

    Assembles the linear operator on the n(n+1)/2 free entries of S and
    solves densely.  The residual is verified against
    1e-10 * (1 + ||C'C||_F); failure or a singular operator raises
    ValueError("no unique solution").
    """
    a = np.asarray(a, dtype=float)
    c = np.atleast_2d(np.asarray(c, dtype=float))
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("A must be square")
    ctc = c.T @ c
    rows, cols = np.triu_indices(n)
    m = len(rows)
    op = np.empty((m, m))
    for k in range(m):
        basis = np.zeros((n, n))
        basis[rows[k], cols[k]] = 1.0
        basis[cols[k], rows[k]] = 1.0
        image = a.T @ basis + basis @ a + beta * basis
        op[:, k] = image[rows, cols]
    rhs = ctc[rows, cols]
    try:
        packed = np.linalg.solve(op, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError("no unique solution") from exc
    sol = np.zeros((n, n))
    sol[rows, cols] = packed
    sol[cols, rows] = packed
    residual = a.T @ sol + sol @ a + beta * sol - ctc
    if np.linalg.norm(residual) > 1e-10 * (1.0 + np.linalg.norm(ctc)):
        raise ValueError("no unique solution")
    return sol


def observability_rank(c: np.ndarray, a: np.ndarray) -> int:
    """Rank of the stacked observability matrix [C; CA; ...; CA^(n-1)].

    Singular values below 1e-10 times the largest one are treated as zero.
    """
    a = np.asarray(a, dtype=float)
    c = np.atleast_2d(np.asarray(c, dtype=float))
    n = a.shape[0]
    blocks = [c]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ a)
    stacked = np.vstack(blocks)
    svals = np.linalg.svd(stacked, compute_uv=False)
    if svals.size == 0 or svals[0] == 0.0:
        return 0
    return int(np.sum(svals > 1e-10 * svals[0]))

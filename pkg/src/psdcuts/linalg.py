"""Symmetric eigendecomposition and principal-minor helpers.

The decomposition itself is delegated to LAPACK via ``numpy.linalg.eigh``
(dense, ascending eigenvalues); this module adds the contract the cut
generators rely on: explicit failure on non-convergence, canonical
eigenvector signs for reproducible runs, and a residual check against the
requested tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EigenError(RuntimeError):
    """Eigendecomposition failed or missed the requested tolerance."""


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray


def canonical_sign(vecs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip eigenvector columns so the first entry above tol is positive."""
    vecs = np.array(vecs, dtype=float)
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        idx = np.flatnonzero(np.abs(col) > tol)
        if idx.size and col[idx[0]] < 0.0:
            vecs[:, k] = -col
    return vecs


def eigh_sorted(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and sign-canonical orthonormal eigenvectors.

    Raises EigenError instead of letting LAPACK non-convergence pass
    silently.
    """
    mat = np.asarray(mat, dtype=float)
    try:
        vals, vecs = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise EigenError(f"eigendecomposition did not converge: {exc}") from exc
    return vals, canonical_sign(vecs)


def sym_eigen(mat: np.ndarray, tol: float = 1e-8) -> list[EigenPair]:
    """Full spectral decomposition of a symmetric matrix as EigenPairs,
    sorted ascending, verified to reconstruct the input within tol."""
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
        raise EigenError(f"expected a square matrix, got shape {mat.shape}")
    vals, vecs = eigh_sorted(mat)
    scale = max(1.0, float(np.max(np.abs(mat))))
    resid = float(np.max(np.abs(mat - (vecs * vals) @ vecs.T)))
    if resid > tol * scale:
        raise EigenError(f"reconstruction residual {resid:.3e} exceeds "
                         f"tolerance {tol:.1e} * {scale:.3e}")
    return [EigenPair(float(vals[k]), vecs[:, k].copy())
            for k in range(mat.shape[0])]


def principal_minor(mat: np.ndarray, support: np.ndarray) -> np.ndarray:
    """Submatrix on the given sorted index set (rows and columns alike)."""
    support = np.asarray(support, dtype=np.int64)
    if support.size == 0:
        raise ValueError("empty support")
    if np.any(support < 0) or np.any(support >= mat.shape[0]):
        raise IndexError("support index out of range")
    if np.any(np.diff(support) <= 0):
        raise ValueError("support must be strictly increasing")
    return np.asarray(mat, dtype=float)[np.ix_(support, support)]


def lift_vector(w_minor: np.ndarray, support: np.ndarray, dim: int) -> np.ndarray:
    """Scatter a minor-space vector back into the full index space."""
    w_minor = np.asarray(w_minor, dtype=float)
    support = np.asarray(support, dtype=np.int64)
    if w_minor.size != support.size:
        raise ValueError(f"vector length {w_minor.size} != support size {support.size}")
    if support.size and (support.min() < 0 or support.max() >= dim):
        raise IndexError("support index out of range")
    out = np.zeros(dim)
    out[support] = w_minor
    return out

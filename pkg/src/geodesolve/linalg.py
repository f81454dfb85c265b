"""Dense symmetric linear algebra: eigendecomposition, Gram factorization,
PCA rank reduction and Laplacian spectra."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import GeodesolveError, Graph, Realization

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


class NumericFailure(GeodesolveError, ArithmeticError):
    pass


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray  # non-increasing
    eigenvectors: np.ndarray  # columns, orthonormal

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T


def symmetrize(a) -> np.ndarray:
    """Symmetric matrix from a full array (upper triangle wins) or a 1x1 scalar."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    upper = np.triu(a)
    return upper + np.triu(a, 1).T


def eigen_sym(a, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenDecomposition:
    """Cyclic Jacobi eigendecomposition, eigenvalues sorted non-increasing.

    Only the upper triangle of ``a`` is read, so the input is symmetric by
    construction.
    """
    s = symmetrize(a)
    if not np.all(np.isfinite(s)):
        raise ValueError("matrix has non-finite entries")
    if s.shape[0] == 0:
        return EigenDecomposition(np.zeros(0), np.zeros((0, 0)))
    w, v, _, converged = kernels.jacobi_eigh(s, tol, max_sweeps)
    if not converged:
        raise NumericFailure(f"Jacobi did not converge in {max_sweeps} sweeps")
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    # deterministic sign: largest-magnitude entry of each eigenvector positive
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return EigenDecomposition(w, v * signs)


def gram_factor(x) -> tuple[np.ndarray, float]:
    """Factor a symmetric matrix as ``points @ points.T`` after clipping negative
    eigenvalues; returns ``(points, clipped_mass)``."""
    dec = eigen_sym(x)
    lam = dec.eigenvalues
    clipped = float(np.sum(np.abs(lam[lam < 0])))
    points = dec.eigenvectors * np.sqrt(np.maximum(lam, 0.0))
    return points, clipped


def pca_reduce(points, k: int) -> Realization:
    """Center the rows and project them on the top ``k`` principal directions."""
    p = np.asarray(points, dtype=float)
    if p.ndim != 2:
        raise ValueError("points must be a 2-D array")
    if k < 1 or k > p.shape[1]:
        raise ValueError(f"k={k} must lie in 1..{p.shape[1]}")
    c = p - p.mean(axis=0)
    dec = eigen_sym(c.T @ c)
    return Realization(c @ dec.eigenvectors[:, :k])


def laplacian(g: Graph) -> np.ndarray:
    a = g.adjacency()
    return np.diag(a.sum(axis=1)) - a


def laplacian_spectrum(g: Graph) -> np.ndarray:
    """Eigenvalues of the unweighted Laplacian ``D - A`` in decreasing order."""
    return eigen_sym(laplacian(g)).eigenvalues

"""Dense symmetric eigen helpers with deterministic output conventions.

All routines order eigenvalues in descending order and fix eigenvector signs
so that the largest-magnitude entry of each vector is positive (first such
entry on ties). This makes decompositions reproducible across runs and
platforms, which the serialization and report formats rely on.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotPSDError, NumericalError, SingularMatrixError

__all__ = [
    "EigenDecomposition",
    "sym_eig",
    "psd_sqrt",
    "spd_solve",
    "top_subspace",
]

# relative gap below which adjacent eigenvalues are reported as degenerate
GAP_TOL = 1e-10
# relative magnitude beyond which a negative eigenvalue is a hard PSD failure
PSD_TOL = 1e-8


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a symmetric matrix, descending, signs fixed.

    values: (d,) eigenvalues, values[0] >= values[1] >= ...
    vectors: (d, tau) orthonormal eigenvectors as columns, vectors[:, i]
        belongs to values[i]; tau == d for full decompositions.
    degenerate: True when some adjacent eigenvalue gap is below
        GAP_TOL * max(1, |values|_max), in which case the individual
        eigenvectors are not well determined (only their span is).
    """

    values: np.ndarray
    vectors: np.ndarray
    degenerate: bool


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # flip each column so its largest-|entry| is positive; ties resolved by
    # np.argmax taking the first index
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _check_square_symmetric(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NumericalError(f"{name} must be a square matrix, got shape {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if a.size and float(np.max(np.abs(a - a.T))) > 1e-8 * (1.0 + scale):
        raise NumericalError(f"{name} is not symmetric")
    return 0.5 * (a + a.T)


def _gap_degenerate(values: np.ndarray) -> bool:
    if len(values) < 2:
        return False
    scale = max(1.0, float(np.max(np.abs(values))))
    return bool(np.min(np.abs(np.diff(values))) < GAP_TOL * scale)


def sym_eig(a: np.ndarray, *, warn_degenerate: bool = False) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix.

    Validates the eigenpair residuals, |A v - lambda v|_inf per pair, against
    1e-10 * (1 + |lambda| + |A|_F) and raises NumericalError on violation.
    """
    a = _check_square_symmetric(a, "sym_eig input")
    vals, vecs = np.linalg.eigh(a)
    vals = vals[::-1].copy()
    vecs = _fix_signs(vecs[:, ::-1])
    resid = np.max(np.abs(a @ vecs - vecs * vals), axis=0)
    budget = 1e-10 * (1.0 + np.abs(vals) + np.linalg.norm(a))
    if np.any(resid > budget):
        raise NumericalError(
            f"eigenpair residual {np.max(resid):.3e} exceeds tolerance"
        )
    degenerate = _gap_degenerate(vals)
    if degenerate and warn_degenerate:
        warnings.warn("degenerate eigenvalue gap, eigenvectors not unique")
    return EigenDecomposition(values=vals, vectors=vecs, degenerate=degenerate)


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD matrix.

    Eigenvalues in [-tol, 0) are clipped to 0; below -tol raises NotPSDError.
    """
    dec = sym_eig(a)
    scale = max(1.0, float(np.max(np.abs(dec.values))) if dec.values.size else 1.0)
    if np.any(dec.values < -PSD_TOL * scale):
        raise NotPSDError(
            f"matrix has negative eigenvalue {np.min(dec.values):.3e}"
        )
    root = np.sqrt(np.clip(dec.values, 0.0, None))
    out = (dec.vectors * root) @ dec.vectors.T
    return 0.5 * (out + out.T)


def spd_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b for symmetric positive definite A via Cholesky."""
    a = _check_square_symmetric(a, "spd_solve input")
    try:
        c, low = scipy.linalg.cho_factor(a, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"matrix is not positive definite: {exc}") from exc
    except scipy.linalg.LinAlgError as exc:  # scipy raises its own subclass
        raise SingularMatrixError(f"matrix is not positive definite: {exc}") from exc
    return scipy.linalg.cho_solve((c, low), np.asarray(b, dtype=float), check_finite=False)


def top_subspace(x: np.ndarray, tau: int) -> EigenDecomposition:
    """Top-tau eigenpairs of the scaled outer product X X^T / p, X of shape (p, n).

    Works on whichever Gram side is smaller: for n < p the n x n inner Gram
    X^T X / p is decomposed and eigenvectors are mapped back through X. Raises
    NumericalError when a requested eigenvalue is numerically zero (the
    corresponding direction is undefined).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise NumericalError(f"top_subspace expects a matrix, got shape {x.shape}")
    p, n = x.shape
    if not 1 <= tau <= min(p, n):
        raise NumericalError(f"tau={tau} out of range for shape {x.shape}")
    if n < p:
        g = x.T @ x / p
        g = 0.5 * (g + g.T)
        vals, vecs = scipy.linalg.eigh(g, subset_by_index=[n - tau, n - 1])
        vals = vals[::-1].copy()
        vecs = vecs[:, ::-1]
        if np.any(vals <= 1e-12 * max(1.0, vals[0] if vals.size else 1.0)):
            raise NumericalError("requested eigenvalue is numerically zero")
        u = x @ vecs / np.sqrt(p * vals)
    else:
        g = x @ x.T / p
        g = 0.5 * (g + g.T)
        vals, u = scipy.linalg.eigh(g, subset_by_index=[p - tau, p - 1])
        vals = vals[::-1].copy()
        u = u[:, ::-1]
    u = _fix_signs(u)
    return EigenDecomposition(values=vals, vectors=u, degenerate=_gap_degenerate(vals))

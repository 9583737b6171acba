"""Dense matrix primitives: thin SVD, spectral/nuclear norms and the
nuclear-norm proximity operator (singular value thresholding)."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, InvalidConfig, NonConvergence, NonFinite

#: relative floor below which a singular value counts as an exact zero
RANK_TOL = 1e-12


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate ``a`` as a finite 2-D float64 array and return it.

    Vectors are *not* promoted silently; pass ``a[:, None]`` explicitly.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return arr


class SvdResult(NamedTuple):
    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singular_values) @ self.V.T


def svd(a) -> SvdResult:
    """Thin SVD ``A = U diag(s) V^T`` with ``k = min(rows, cols)`` triplets.

    Uses LAPACK ``gesdd`` and falls back to the slower but more robust
    ``gesvd`` driver if the divide-and-conquer kernel fails.

    Raises
    ------
    NonFinite
        If ``a`` has NaN/Inf entries.
    NonConvergence
        If both LAPACK drivers fail.
    """
    A = as_matrix(a)
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError:
        try:
            U, s, Vt = scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise NonConvergence(f"SVD failed to converge: {exc}") from exc
    return SvdResult(U, s, Vt.T)


def spectral_norm(a) -> float:
    """Largest singular value of ``a``."""
    A = as_matrix(a)
    return float(np.linalg.norm(A, 2))


def nuclear_norm(a) -> float:
    """Sum of singular values of ``a``."""
    A = as_matrix(a)
    return float(np.sum(np.linalg.svd(A, compute_uv=False)))


def numerical_rank(singular_values, rel_tol: float = RANK_TOL) -> int:
    """Number of singular values above ``rel_tol * max(singular_values)``."""
    s = np.asarray(singular_values, dtype=np.float64)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def singular_value_threshold(y, threshold: float) -> np.ndarray:
    """Proximity operator of ``threshold * ||.||_*`` evaluated at ``y``.

    Returns ``U (D - threshold I)_+ V^T`` where ``y = U D V^T``.
    """
    if np.isnan(threshold):
        raise NonFinite("threshold is NaN")
    if threshold < 0:
        raise InvalidConfig(f"threshold must be nonnegative, got {threshold}")
    res = svd(y)
    shrunk = np.maximum(res.singular_values - threshold, 0.0)
    keep = shrunk > 0.0
    if not np.any(keep):
        return np.zeros((res.U.shape[0], res.V.shape[0]))
    return (res.U[:, keep] * shrunk[keep]) @ res.V[:, keep].T

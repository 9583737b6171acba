"""Factor decomposition of a fitted coefficient matrix.

With ``gamma = U diag(s) V^T`` the conditional quantile of response ``j`` is
``sum_k V[j, k] * f_k(x)`` where ``f_k(x) = s[k] * U[:, k] @ x`` are the
factors and the rows of ``V`` are the factor loadings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, InvalidConfig
from .matrix_core import RANK_TOL, as_matrix, numerical_rank, svd

#: default rank-drop threshold as a fraction of the leading singular value
DEFAULT_DROP_FRACTION = 0.1


@dataclass
class FactorModel:
    singular_values: np.ndarray
    left_vectors: np.ndarray
    loadings: np.ndarray
    rank: int

    @property
    def p(self) -> int:
        return self.left_vectors.shape[0]

    @property
    def m(self) -> int:
        return self.loadings.shape[0]

    def gamma(self, k: Optional[int] = None) -> np.ndarray:
        """Coefficient matrix rebuilt from the leading ``k`` triplets (all by default)."""
        k = len(self.singular_values) if k is None else k
        return (self.left_vectors[:, :k] * self.singular_values[:k]) @ self.loadings[:, :k].T

    def to_dict(self) -> dict:
        return {
            "sigma": self.singular_values.tolist(),
            "U": self.left_vectors.tolist(),
            "V": self.loadings.tolist(),
            "rank": int(self.rank),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FactorModel":
        sigma = np.asarray(d["sigma"], dtype=np.float64)
        U = np.asarray(d["U"], dtype=np.float64).reshape(-1, len(sigma))
        V = np.asarray(d["V"], dtype=np.float64).reshape(-1, len(sigma))
        return cls(sigma, U, V, int(d["rank"]))


def detect_rank(singular_values, drop_threshold: float) -> int:
    """Index of the first drop ``s[k] - s[k+1] > drop_threshold`` (1-based).

    Singular values past the end count as zero.  Without such a drop the
    numerical rank is returned.
    """
    s = np.asarray(singular_values, dtype=np.float64)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    gaps = s - np.append(s[1:], 0.0)
    hits = np.flatnonzero(gaps > drop_threshold)
    if hits.size:
        return int(hits[0]) + 1
    return numerical_rank(s, RANK_TOL)


def factorize(gamma_hat, drop_threshold: Optional[float] = None) -> FactorModel:
    """SVD of ``gamma_hat`` with a deterministic sign convention and rank estimate.

    Each left singular vector is flipped so that its largest-magnitude entry
    is positive (the matching right vector is flipped with it).

    Parameters
    ----------
    gamma_hat : array, p x m
    drop_threshold : float, optional
        Minimum drop between consecutive singular values that marks the rank.
        Defaults to 10% of the leading singular value.
    """
    res = svd(gamma_hat)
    U, s, V = res.U.copy(), res.singular_values.copy(), res.V.copy()
    idx = np.argmax(np.abs(U), axis=0)
    flip = U[idx, np.arange(U.shape[1])] < 0.0
    U[:, flip] *= -1.0
    V[:, flip] *= -1.0
    if drop_threshold is None:
        drop_threshold = DEFAULT_DROP_FRACTION * float(s[0]) if s.size else 0.0
        if drop_threshold == 0.0:
            return FactorModel(s, U, V, 0)
    elif not drop_threshold > 0.0:
        raise InvalidConfig(f"drop_threshold must be positive, got {drop_threshold}")
    return FactorModel(s, U, V, detect_rank(s, drop_threshold))


def factor_scores(model: FactorModel, X, k: Optional[int] = None) -> np.ndarray:
    """Factor values ``s_k * X @ U[:, k]`` for the leading ``k`` factors (``rank`` by default)."""
    X = as_matrix(X, "X")
    if X.shape[1] != model.p:
        raise DimensionMismatch(f"X has {X.shape[1]} columns, model expects {model.p}")
    k = model.rank if k is None else k
    return (X @ model.left_vectors[:, :k]) * model.singular_values[:k]


def contribution(model: FactorModel, k: int) -> np.ndarray:
    """Derivative of factor ``k`` (0-based) with respect to each covariate."""
    if not 0 <= k < model.rank:
        raise IndexOutOfRange(f"factor index {k} outside [0, {model.rank})")
    return model.singular_values[k] * model.left_vectors[:, k]


def sensitivity(model: FactorModel) -> np.ndarray:
    """m x rank matrix of quantile sensitivities to each factor (the loadings)."""
    return model.loadings[:, : model.rank].copy()

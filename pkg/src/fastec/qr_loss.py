"""Check loss, its multivariate empirical average, and the Nesterov-smoothed
version with a closed-form gradient.

Shapes follow the regression convention ``Y ~ X @ gamma`` with ``X`` n x p,
``Y`` n x m and ``gamma`` p x m.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, InvalidConfig
from .matrix_core import as_matrix


def check_tau(tau: float) -> float:
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise InvalidConfig(f"quantile level must lie in (0, 1), got {tau}")
    return tau


def tail_weight(tau: float) -> float:
    """``max(tau, 1 - tau)``, the largest attainable dual magnitude."""
    return max(tau, 1.0 - tau)


def check_loss(u, tau: float):
    """Pinball loss ``u * (tau - 1{u <= 0})``; works elementwise on arrays."""
    tau = check_tau(tau)
    u = np.asarray(u, dtype=np.float64)
    out = u * (tau - (u <= 0.0))
    return float(out) if out.ndim == 0 else out


def _residuals(gamma, X, Y) -> np.ndarray:
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    gamma = as_matrix(gamma, "gamma")
    n, p = X.shape
    if Y.shape[0] != n:
        raise DimensionMismatch(f"X has {n} rows but Y has {Y.shape[0]}")
    if gamma.shape != (p, Y.shape[1]):
        raise DimensionMismatch(
            f"gamma must be {p} x {Y.shape[1]}, got {gamma.shape[0]} x {gamma.shape[1]}"
        )
    return Y - X @ gamma


def empirical_loss(gamma, X, Y, tau: float) -> float:
    """Average check loss ``(mn)^{-1} sum_ij rho_tau(Y_ij - X_i^T gamma_j)``."""
    tau = check_tau(tau)
    R = _residuals(gamma, X, Y)
    return float(np.mean(R * (tau - (R <= 0.0))))


def clip_to_tau_interval(a, tau: float) -> np.ndarray:
    """Project every entry of ``a`` onto the closed interval ``[tau - 1, tau]``."""
    tau = check_tau(tau)
    return np.clip(np.asarray(a, dtype=np.float64), tau - 1.0, tau)


def _dual(R: np.ndarray, tau: float, kappa: float) -> np.ndarray:
    n, m = R.shape
    return np.clip(R / (kappa * m * n), tau - 1.0, tau)


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not kappa > 0.0 or not np.isfinite(kappa):
        raise InvalidConfig(f"kappa must be positive and finite, got {kappa}")
    return kappa


def smoothed_loss(gamma, X, Y, tau: float, kappa: float) -> float:
    """Smoothed check loss.

    ``max_Theta (mn)^{-1} <Y - X gamma, Theta> - (kappa/2) ||Theta||_F^2`` over
    ``Theta`` in ``[tau-1, tau]^{n x m}``; the maximizer is the clipped,
    rescaled residual.  It under-estimates :func:`empirical_loss` by at most
    ``kappa * max(tau, 1-tau)^2 * n * m / 2``.
    """
    tau = check_tau(tau)
    kappa = _check_kappa(kappa)
    R = _residuals(gamma, X, Y)
    n, m = R.shape
    theta = _dual(R, tau, kappa)
    return float(np.sum(R * theta) / (m * n) - 0.5 * kappa * np.sum(theta * theta))


def smoothed_gradient(gamma, X, Y, tau: float, kappa: float) -> np.ndarray:
    """Gradient ``-(mn)^{-1} X^T [[(kappa m n)^{-1}(Y - X gamma)]]_tau``."""
    tau = check_tau(tau)
    kappa = _check_kappa(kappa)
    R = _residuals(gamma, X, Y)
    n, m = R.shape
    return -(np.asarray(X, dtype=np.float64).T @ _dual(R, tau, kappa)) / (m * n)


def lipschitz_constant(X, m: int, kappa: float) -> float:
    """Global Lipschitz constant ``||X||^2 / (kappa m^2 n^2)`` of the gradient."""
    X = as_matrix(X, "X")
    kappa = _check_kappa(kappa)
    n = X.shape[0]
    return float(np.linalg.norm(X, 2) ** 2 / (kappa * m * m * n * n))

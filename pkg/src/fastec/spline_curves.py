"""Factorisable quantile curves on a clamped B-spline basis.

Responses observed at common times ``t_1..t_n`` are regressed on the basis
design ``B[i, l] = b_l(t_i)``; the fitted curves are ``B @ gamma`` and
factor curves are ``s_k * U[:, k] @ b(t)``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, InvalidConfig, OutOfDomain, SingularDesign
from .factorization import FactorModel, factorize
from .matrix_core import as_matrix
from .qr_loss import check_tau
from .solver import FitResult, SolverConfig, fit


def default_basis_size(n: int) -> int:
    """``ceil(n ** 0.4)`` computed in exact integer arithmetic."""
    n = int(n)
    if n < 2:
        raise InvalidConfig(f"n must be >= 2, got {n}")
    # ceil(n^(2/5)) is the least k with k^5 >= n^2
    k = 1
    while k ** 5 < n * n:
        k += 1
    return k


@dataclass(frozen=True)
class SplineBasis:
    degree: int
    n_basis: int
    knots: tuple

    @property
    def t_min(self) -> float:
        return self.knots[0]

    @property
    def t_max(self) -> float:
        return self.knots[-1]

    @classmethod
    def uniform(cls, t_min: float, t_max: float, n_basis: int, degree: int = 3) -> "SplineBasis":
        """Clamped basis with equally spaced interior knots on ``[t_min, t_max]``."""
        t_min, t_max = float(t_min), float(t_max)
        if not t_max > t_min:
            raise InvalidConfig(f"empty domain [{t_min}, {t_max}]")
        if degree < 0:
            raise InvalidConfig(f"degree must be >= 0, got {degree}")
        n_interior = n_basis - degree - 1
        if n_interior < 0:
            raise InvalidConfig(f"n_basis must be >= degree + 1 = {degree + 1}, got {n_basis}")
        interior = np.linspace(t_min, t_max, n_interior + 2)[1:-1]
        knots = [t_min] * (degree + 1) + interior.tolist() + [t_max] * (degree + 1)
        return cls(int(degree), int(n_basis), tuple(float(k) for k in knots))

    def to_dict(self) -> dict:
        return {"degree": self.degree, "n_basis": self.n_basis, "knots": list(self.knots)}

    @classmethod
    def from_dict(cls, d: dict) -> "SplineBasis":
        return cls(int(d["degree"]), int(d["n_basis"]), tuple(float(k) for k in d["knots"]))


def _check_domain(basis: SplineBasis, t: np.ndarray) -> None:
    if not np.all(np.isfinite(t)):
        raise OutOfDomain("evaluation points must be finite")
    if t.size and (t.min() < basis.t_min or t.max() > basis.t_max):
        raise OutOfDomain(
            f"points must lie in [{basis.t_min}, {basis.t_max}], got [{t.min()}, {t.max()}]"
        )


def _cox_de_boor(knots: np.ndarray, degree: int, t: np.ndarray) -> np.ndarray:
    """All basis functions at points ``t`` via the Cox-de Boor recursion."""
    n_knots = len(knots)
    left, right = knots[:-1], knots[1:]
    B = ((t[:, None] >= left) & (t[:, None] < right)).astype(np.float64)
    # right endpoint belongs to the last non-degenerate span
    last = np.flatnonzero(right > left)[-1]
    at_end = t == knots[-1]
    B[at_end, :] = 0.0
    B[at_end, last] = 1.0
    for d in range(1, degree + 1):
        n_funcs = n_knots - d - 1
        nxt = np.zeros((len(t), n_funcs))
        for i in range(n_funcs):
            den1 = knots[i + d] - knots[i]
            den2 = knots[i + d + 1] - knots[i + 1]
            if den1 > 0.0:
                nxt[:, i] += (t - knots[i]) / den1 * B[:, i]
            if den2 > 0.0:
                nxt[:, i] += (knots[i + d + 1] - t) / den2 * B[:, i + 1]
        B = nxt
    return B


def evaluate_basis(basis: SplineBasis, t: float) -> np.ndarray:
    """Vector ``(b_1(t), ..., b_p(t))``."""
    return build_design(np.array([t], dtype=np.float64), basis)[0]


def build_design(times, basis: SplineBasis) -> np.ndarray:
    """n x p design with ``B[i, l] = b_l(times[i])``."""
    t = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if t.ndim != 1:
        raise DimensionMismatch("times must be one-dimensional")
    _check_domain(basis, t)
    return _cox_de_boor(np.asarray(basis.knots), basis.degree, t)


@dataclass
class CurveModel:
    basis: SplineBasis
    gamma: np.ndarray
    factor_model: FactorModel
    tau: float
    lam: float = 0.0

    def quantile_curves(self, t_grid) -> np.ndarray:
        """grid x m matrix of fitted quantile curves."""
        return build_design(t_grid, self.basis) @ self.gamma

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "lambda": self.lam,
            "basis": self.basis.to_dict(),
            "gamma": self.gamma.tolist(),
            "svd": self.factor_model.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CurveModel":
        return cls(
            basis=SplineBasis.from_dict(d["basis"]),
            gamma=np.asarray(d["gamma"], dtype=np.float64),
            factor_model=FactorModel.from_dict(d["svd"]),
            tau=float(d["tau"]),
            lam=float(d["lambda"]),
        )


def fit_quantile_curves(times, Y, tau: float, lam: float, config: Optional[SolverConfig] = None,
                        n_basis: Optional[int] = None, degree: int = 3,
                        drop_threshold: Optional[float] = None) -> tuple:
    """Fit penalized quantile curves; returns ``(CurveModel, FitResult)``.

    The basis spans the observed time range with ``ceil(n ** 0.4)`` functions
    unless ``n_basis`` is given.
    """
    t = np.asarray(times, dtype=np.float64)
    Y = as_matrix(Y, "Y")
    if t.ndim != 1 or t.shape[0] != Y.shape[0]:
        raise DimensionMismatch(f"need one time per row of Y ({Y.shape[0]}), got {t.shape}")
    tau = check_tau(tau)
    n_basis = default_basis_size(len(t)) if n_basis is None else int(n_basis)
    basis = SplineBasis.uniform(t.min(), t.max(), n_basis, degree)
    B = build_design(t, basis)
    cfg = dataclasses.replace(SolverConfig() if config is None else config, tau=tau, lam=float(lam))
    res: FitResult = fit(B, Y, cfg)
    model = CurveModel(basis=basis, gamma=res.gamma_hat,
                       factor_model=factorize(res.gamma_hat, drop_threshold), tau=tau, lam=float(lam))
    return model, res


def factor_curves(model: CurveModel, t_grid, k: Optional[int] = None) -> np.ndarray:
    """grid x k matrix of factor curves ``s_k * U[:, k] @ b(t)`` (``k`` defaults to the rank)."""
    fm = model.factor_model
    k = fm.rank if k is None else k
    B = build_design(t_grid, model.basis)
    return (B @ fm.left_vectors[:, :k]) * fm.singular_values[:k]


def detrend_mean_curve(times, Y, n_basis: Optional[int] = None, degree: int = 3) -> tuple:
    """Least-squares regression-spline fit of the cross-sectional mean.

    Returns ``(trend, residual)`` where ``trend`` has one value per time and
    ``residual = Y - trend[:, None]``.
    """
    t = np.asarray(times, dtype=np.float64)
    Y = as_matrix(Y, "Y")
    if t.ndim != 1 or t.shape[0] != Y.shape[0]:
        raise DimensionMismatch(f"need one time per row of Y ({Y.shape[0]}), got {t.shape}")
    n_basis = default_basis_size(len(t)) if n_basis is None else int(n_basis)
    if len(t) <= n_basis:
        raise SingularDesign(f"need more than {n_basis} time points, got {len(t)}")
    basis = SplineBasis.uniform(t.min(), t.max(), n_basis, degree)
    B = build_design(t, basis)
    coef, _, rank, _ = np.linalg.lstsq(B, Y.mean(axis=1), rcond=None)
    if rank < n_basis:
        raise SingularDesign(f"spline design has rank {rank} < {n_basis}")
    trend = B @ coef
    return trend, Y - trend[:, None]

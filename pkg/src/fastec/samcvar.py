"""Multivariate CAViaR-style quantile model on lagged return features.

The tau-quantile of firm ``j`` at time ``t`` is linear in the lagged
absolute returns and lagged negative parts of all firms::

    q_tj = sum_k g1[j, k] |Y_{t-1,k}| + sum_k g2[j, k] max(-Y_{t-1,k}, 0)

so ``X_{t-1} = (|Y_{t-1}|, Y_{t-1}^-)`` has ``p = 2m`` columns.  There is no
intercept unless ``intercept=True`` prepends a constant column.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidConfig, NonPositivePrice
from .factorization import FactorModel, factorize
from .matrix_core import as_matrix
from .solver import FitResult, SolverConfig, fit
from .tuning import PivotalConfig, pivotal_lambda


@dataclass
class ReturnPanel:
    returns: np.ndarray
    dates: list = field(default_factory=list)
    firm_names: list = field(default_factory=list)

    def __post_init__(self):
        self.returns = as_matrix(self.returns, "returns")
        T, m = self.returns.shape
        if not self.dates:
            self.dates = list(range(T))
        if not self.firm_names:
            self.firm_names = [f"firm{j + 1}" for j in range(m)]
        if len(self.dates) != T or len(self.firm_names) != m:
            raise DimensionMismatch("dates/firm_names do not match the returns shape")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise InvalidConfig("dates must be strictly increasing")

    @property
    def m(self) -> int:
        return self.returns.shape[1]


def log_returns(prices, dates: Optional[Sequence[str]] = None,
                firm_names: Optional[Sequence[str]] = None) -> ReturnPanel:
    """Daily log-returns ``log P_{t+1} - log P_t``; the first date is dropped."""
    P = as_matrix(prices, "prices")
    if np.any(P <= 0.0):
        raise NonPositivePrice("prices must be strictly positive")
    if P.shape[0] < 2:
        raise DimensionMismatch("need at least two price rows")
    R = np.diff(np.log(P), axis=0)
    return ReturnPanel(R, list(dates[1:]) if dates else [], list(firm_names or []))


def lag_features(returns, intercept: bool = False) -> np.ndarray:
    """Feature rows ``(|y|, max(-y, 0))`` for each row ``y`` of ``returns``."""
    R = np.atleast_2d(np.asarray(returns, dtype=np.float64))
    X = np.hstack([np.abs(R), np.maximum(-R, 0.0)])
    if intercept:
        X = np.hstack([np.ones((R.shape[0], 1)), X])
    return X


def build_caviar_features(panel, intercept: bool = False) -> tuple:
    """Design ``X`` ((T-1) x 2m) from lagged returns and targets ``Y`` ((T-1) x m)."""
    R = panel.returns if isinstance(panel, ReturnPanel) else as_matrix(panel, "returns")
    if R.shape[0] < 2:
        raise DimensionMismatch("need at least two return rows")
    return lag_features(R[:-1], intercept), R[1:].copy()


def fit_samcvar(panel: ReturnPanel, tau: float, lam: Optional[float] = None,
                config: Optional[SolverConfig] = None,
                pivotal: PivotalConfig = PivotalConfig(),
                intercept: bool = False, drop_threshold: Optional[float] = None) -> tuple:
    """Fit the quantile model; ``lam=None`` tunes the penalty by the pivotal rule.

    Returns ``(FitResult, FactorModel)``.
    """
    X, Y = build_caviar_features(panel, intercept)
    if lam is None:
        lam = pivotal_lambda(X, Y.shape[1], tau, pivotal)
    cfg = dataclasses.replace(config or SolverConfig(), tau=tau, lam=float(lam))
    res = fit(X, Y, cfg)
    return res, factorize(res.gamma_hat, drop_threshold)


def var_forecast(fit_or_gamma, last_returns, intercept: bool = False) -> np.ndarray:
    """One-step-ahead quantile vector ``gamma^T x`` from the latest return row."""
    gamma = fit_or_gamma.gamma_hat if isinstance(fit_or_gamma, FitResult) else np.asarray(fit_or_gamma)
    x = lag_features(np.asarray(last_returns, dtype=np.float64).reshape(1, -1), intercept)[0]
    if x.shape[0] != gamma.shape[0]:
        raise DimensionMismatch(f"features have length {x.shape[0]}, gamma has {gamma.shape[0]} rows")
    return gamma.T @ x


def contribution_table(model: FactorModel, m: int, intercept: bool = False) -> np.ndarray:
    """rank x m x 2 array: contribution of firm ``j``'s (|y|, y^-) to each factor."""
    off = 1 if intercept else 0
    if model.p != 2 * m + off:
        raise DimensionMismatch(f"model has {model.p} covariates, expected {2 * m + off}")
    out = np.empty((model.rank, m, 2))
    for k in range(model.rank):
        c = model.singular_values[k] * model.left_vectors[off:, k]
        out[k, :, 0] = c[:m]
        out[k, :, 1] = c[m:]
    return out


def simulate_panel(T: int, m: int, seed: int = 0, floor: float = 0.1, persistence: float = 1.6,
                   burn_in: int = 200) -> tuple:
    """Synthetic returns whose conditional quantiles follow a rank-2 lag model.

    Firms are split into two groups led by the first firm of each group.
    Every firm in group ``g`` has scale ``floor + persistence * |Y_{t-1, leader_g}|``
    and ``Y_tj = scale * z_tj`` with ``z`` uniform on ``[-1, 1]``, so the
    tau-quantile is ``(2 tau - 1) * scale``.  Stationarity needs
    ``persistence < 2``.

    Returns ``(panel, truth)`` where ``truth(tau)`` gives the (2m + 1) x m
    coefficients including the leading intercept row.
    """
    if m < 2 or T < 2:
        raise InvalidConfig("need m >= 2 and T >= 2")
    if not 0.0 <= persistence < 2.0 or not floor > 0.0:
        raise InvalidConfig("need floor > 0 and 0 <= persistence < 2")
    rng = np.random.default_rng([int(seed), 17])
    groups = np.arange(m) < (m + 1) // 2
    leaders = (0, int(groups.sum()))
    coef = np.zeros((2 * m + 1, m))
    coef[0, :] = floor
    coef[1 + leaders[0], groups] = persistence
    coef[1 + leaders[1], ~groups] = persistence

    R = np.zeros((T + burn_in, m))
    prev = np.zeros(m)
    for t in range(T + burn_in):
        scale = lag_features(prev[None, :], intercept=True)[0] @ coef
        R[t] = scale * rng.uniform(-1.0, 1.0, m)
        prev = R[t]

    def truth(tau: float) -> np.ndarray:
        return (2.0 * float(tau) - 1.0) * coef

    return ReturnPanel(R[burn_in:]), truth

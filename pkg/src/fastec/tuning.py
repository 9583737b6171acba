"""Penalty selection.

:func:`pivotal_lambda` simulates the score statistic
``Lambda = (nm)^{-1} ||X^T W||`` with ``W`` independent of the data and
returns ``multiplier`` times its ``(1 - alpha)`` quantile.  Two score
distributions are available:

``"scaled_sign"`` (default)
    ``W_ij = sqrt(max(tau, 1 - tau)) * R_ij`` with Rademacher ``R_ij``.
    The variance matches the ``tau v (1 - tau)`` factor of the theoretical
    rate, so the penalty shrinks as ``tau`` moves toward 0.5.
``"indicator"``
    ``W_ij = 1{U_ij <= tau} - tau`` with ``U_ij`` uniform, i.e. exactly the
    distribution of the check-loss score at the true coefficients.

Each draw owns an independent RNG stream spawned from ``seed`` by draw
index, so the result does not depend on how draws are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig
from .matrix_core import as_matrix
from .qr_loss import check_tau, tail_weight

SCORES = ("scaled_sign", "indicator")


@dataclass(frozen=True)
class PivotalConfig:
    n_sim: int = 500
    alpha: float = 0.1
    seed: int = 0
    multiplier: float = 2.0
    score: str = "scaled_sign"
    antithetic: bool = False

    def __post_init__(self):
        if int(self.n_sim) < 1:
            raise InvalidConfig(f"n_sim must be >= 1, got {self.n_sim}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidConfig(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.multiplier >= 0.0:
            raise InvalidConfig(f"multiplier must be nonnegative, got {self.multiplier}")
        if self.score not in SCORES:
            raise InvalidConfig(f"score must be one of {SCORES}, got {self.score!r}")


def score_matrix(rng: np.random.Generator, n: int, m: int, tau: float,
                 score: str = "scaled_sign", antithetic: bool = False) -> np.ndarray:
    """One draw of the n x m pivotal score matrix."""
    if score == "scaled_sign":
        signs = 2.0 * rng.integers(0, 2, size=(n, m)) - 1.0
        if antithetic:
            signs = -signs
        return math.sqrt(tail_weight(tau)) * signs
    u = rng.random((n, m))
    if antithetic:
        u = 1.0 - u
    return (u <= tau) - tau


def pivotal_draws(X, m: int, tau: float, cfg: PivotalConfig = PivotalConfig(),
                  workers: int = 1) -> np.ndarray:
    """Monte Carlo draws of ``(nm)^{-1} ||X^T W||`` for ``cfg.n_sim`` score matrices."""
    X = as_matrix(X, "X")
    tau = check_tau(tau)
    m = int(m)
    if m < 1:
        raise InvalidConfig(f"m must be >= 1, got {m}")
    n = X.shape[0]
    children = np.random.SeedSequence(cfg.seed).spawn(int(cfg.n_sim))

    def draw(ss):
        W = score_matrix(np.random.default_rng(ss), n, m, tau, cfg.score, cfg.antithetic)
        return np.linalg.norm(X.T @ W, 2) / (n * m)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return np.fromiter(pool.map(draw, children), dtype=np.float64, count=len(children))
    return np.fromiter(map(draw, children), dtype=np.float64, count=len(children))


def pivotal_lambda(X, m: int, tau: float, cfg: PivotalConfig = PivotalConfig(),
                   workers: int = 1) -> float:
    draws = pivotal_draws(X, m, tau, cfg, workers=workers)
    return float(cfg.multiplier * np.quantile(draws, 1.0 - cfg.alpha))


def theoretical_lambda(sigma_max_hat: float, tau: float, p: int, m: int, n: int,
                       constant: float) -> float:
    """Rate-based penalty ``constant / m * sqrt(sigma_max * max(tau, 1-tau)) * sqrt((p+m)/n)``.

    ``sigma_max_hat`` estimates the largest eigenvalue of the covariate
    covariance, e.g. ``||X||^2 / n``.
    """
    tau = check_tau(tau)
    if not sigma_max_hat > 0.0:
        raise InvalidConfig(f"sigma_max_hat must be positive, got {sigma_max_hat}")
    if not constant > 0.0:
        raise InvalidConfig(f"constant must be positive, got {constant}")
    if min(p, m, n) < 1:
        raise InvalidConfig("p, m and n must be positive")
    return constant / m * math.sqrt(sigma_max_hat * tail_weight(tau)) * math.sqrt((p + m) / n)

"""Smoothing fast iterative shrinkage-thresholding (SFISTA).

Minimizes the nuclear-norm penalized multivariate check loss

    L(G) = (mn)^{-1} sum_ij rho_tau(Y_ij - X_i^T G_j) + lam * ||G||_*

by running FISTA on the smoothed loss with a singular value thresholding
prox step.  The step size is the exact global Lipschitz constant of the
smoothed gradient, so no line search is needed.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidConfig, NonFinite
from .matrix_core import as_matrix, svd
from .qr_loss import check_tau, empirical_loss, tail_weight


class Termination(str, enum.Enum):
    LOSS_TOL = "LossTolReached"
    MAX_ITERS = "MaxIters"


@dataclass(frozen=True)
class SolverConfig:
    """Inputs of one SFISTA run.

    ``kappa`` overrides the default smoothing level ``epsilon / (2 m n)``;
    large problems are usually run with a fixed ``kappa`` such as 1e-4.
    Iteration stops once successive penalized objectives differ by less
    than ``loss_tol`` (set it to 0 to always run ``max_iters`` steps).
    """

    tau: float = 0.5
    lam: float = 0.0
    epsilon: float = 1e-3
    kappa: Optional[float] = None
    max_iters: int = 10_000
    loss_tol: float = 1e-6

    def __post_init__(self):
        check_tau(self.tau)
        if not (self.lam >= 0.0):
            raise InvalidConfig(f"lam must be nonnegative, got {self.lam}")
        if not (self.epsilon > 0.0):
            raise InvalidConfig(f"epsilon must be positive, got {self.epsilon}")
        if self.kappa is not None and not (self.kappa > 0.0 and math.isfinite(self.kappa)):
            raise InvalidConfig(f"kappa must be positive, got {self.kappa}")
        if int(self.max_iters) < 1:
            raise InvalidConfig(f"max_iters must be >= 1, got {self.max_iters}")
        if not (self.loss_tol >= 0.0):
            raise InvalidConfig(f"loss_tol must be nonnegative, got {self.loss_tol}")

    def smoothing(self, n: int, m: int) -> float:
        return self.kappa if self.kappa is not None else self.epsilon / (2.0 * m * n)

    def effective_epsilon(self, n: int, m: int) -> float:
        """Accuracy level implied by the smoothing actually used."""
        return 2.0 * m * n * self.smoothing(n, m)


@dataclass
class SolverState:
    gamma_t: np.ndarray
    omega_t: np.ndarray
    delta_t: float = 1.0
    iter: int = 0
    loss_history: list = field(default_factory=list)


@dataclass
class FitResult:
    gamma_hat: np.ndarray
    objective: float
    iterations: int
    termination: Termination
    loss_history: np.ndarray
    tau: float
    lam: float
    kappa: float
    lipschitz: float
    epsilon: float

    @property
    def best_history(self) -> np.ndarray:
        """Running minimum of the objective trajectory."""
        return np.minimum.accumulate(self.loss_history)


def next_momentum(delta: float) -> float:
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * delta * delta))


def penalized_objective(gamma, X, Y, tau: float, lam: float) -> float:
    """Nonsmooth objective: empirical check loss plus ``lam * ||gamma||_*``."""
    gamma = as_matrix(gamma, "gamma")
    nuc = float(np.sum(np.linalg.svd(gamma, compute_uv=False)))
    return empirical_loss(gamma, X, Y, tau) + lam * nuc


def _validate(X, Y):
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise DimensionMismatch(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    return X, Y


def fit(X, Y, config: SolverConfig, gamma0=None) -> FitResult:
    """Run SFISTA from ``gamma0`` (zero by default).

    Raises
    ------
    DimensionMismatch
        If ``X`` and ``Y`` have different row counts or ``gamma0`` is not p x m.
    NonFinite
        If an iterate or objective becomes NaN/Inf.
    """
    X, Y = _validate(X, Y)
    n, p = X.shape
    m = Y.shape[1]
    tau = config.tau
    lam = float(config.lam)
    kappa = config.smoothing(n, m)
    scale = kappa * m * n
    xnorm2 = float(np.linalg.norm(X, 2)) ** 2
    M = xnorm2 / (kappa * m * m * n * n)

    if gamma0 is None:
        gamma_prev = np.zeros((p, m))
    else:
        gamma_prev = as_matrix(gamma0, "gamma0").copy()
        if gamma_prev.shape != (p, m):
            raise DimensionMismatch(f"gamma0 must be {p} x {m}, got {gamma_prev.shape}")

    def objective(R, sv):
        return float(np.mean(R * (tau - (R <= 0.0)))) + lam * float(np.sum(sv))

    def result(gamma, history, term):
        hist = np.asarray(history, dtype=np.float64)
        return FitResult(
            gamma_hat=gamma,
            objective=float(hist[-1]),
            iterations=len(history),
            termination=term,
            loss_history=hist,
            tau=tau,
            lam=lam,
            kappa=kappa,
            lipschitz=M,
            epsilon=config.effective_epsilon(n, m),
        )

    loss_prev = objective(Y - X @ gamma_prev, np.linalg.svd(gamma_prev, compute_uv=False))

    if M == 0.0:
        # X == 0: the loss is constant, only the penalty acts
        gamma = np.zeros((p, m)) if lam > 0.0 else gamma_prev
        return result(gamma, [objective(Y - X @ gamma, np.linalg.svd(gamma, compute_uv=False))],
                      Termination.LOSS_TOL)

    step = 1.0 / M
    threshold = lam / M
    state = SolverState(gamma_t=gamma_prev, omega_t=gamma_prev.copy())
    history = state.loss_history
    term = Termination.MAX_ITERS
    for t in range(1, int(config.max_iters) + 1):
        omega = state.omega_t
        theta = np.clip((Y - X @ omega) / scale, tau - 1.0, tau)
        grad = -(X.T @ theta) / (m * n)
        res = svd(omega - step * grad)
        shrunk = np.maximum(res.singular_values - threshold, 0.0)
        keep = shrunk > 0.0
        if np.any(keep):
            gamma = (res.U[:, keep] * shrunk[keep]) @ res.V[:, keep].T
        else:
            gamma = np.zeros((p, m))
        delta_next = next_momentum(state.delta_t)
        state.omega_t = gamma + ((state.delta_t - 1.0) / delta_next) * (gamma - state.gamma_t)
        state.gamma_t = gamma
        state.delta_t = delta_next
        state.iter = t

        loss = objective(Y - X @ gamma, shrunk)
        if not math.isfinite(loss):
            raise NonFinite(f"objective became non-finite at iteration {t}")
        history.append(loss)
        if abs(loss_prev - loss) < config.loss_tol:
            term = Termination.LOSS_TOL
            break
        loss_prev = loss

    return result(state.gamma_t, history, term)


def fit_path(X, Y, lambdas: Sequence[float], config: SolverConfig) -> list:
    """Fit a descending sequence of penalties, warm-starting each from the last."""
    lambdas = [float(v) for v in lambdas]
    if not lambdas:
        raise InvalidConfig("lambdas must be nonempty")
    if any(b > a for a, b in zip(lambdas, lambdas[1:])):
        raise InvalidConfig("lambdas must be sorted in descending order")
    results = []
    gamma0 = None
    for lam in lambdas:
        res = fit(X, Y, dataclasses.replace(config, lam=lam), gamma0=gamma0)
        results.append(res)
        gamma0 = res.gamma_hat
    return results


@dataclass
class ConvergenceReport:
    iterations: np.ndarray
    gaps: np.ndarray
    bounds: np.ndarray
    required_iterations: int
    epsilon: float

    @property
    def holds(self) -> np.ndarray:
        return self.gaps <= self.bounds

    @property
    def all_hold(self) -> bool:
        return bool(np.all(self.holds))

    def gap_at_required(self) -> Optional[float]:
        """Objective gap at the iteration count guaranteeing accuracy epsilon."""
        if self.required_iterations > len(self.gaps):
            return None
        return float(self.gaps[max(self.required_iterations, 1) - 1])


def iteration_bound(err0: float, xnorm: float, n: int, m: int, tau: float, epsilon: float) -> int:
    """Iterations after which the objective is guaranteed within ``epsilon``.

    ``err0`` is ``||G_0 - G*||_F`` and ``xnorm`` the spectral norm of ``X``.
    """
    c = tail_weight(tau)
    t = 2.0 * err0 * xnorm / (epsilon * math.sqrt(m * n) * math.sqrt(1.0 - c * c / 2.0))
    return int(math.ceil(t))


def convergence_certificate(
    result: FitResult,
    reference_objective: float,
    reference_gamma,
    X,
    gamma0=None,
) -> ConvergenceReport:
    """Compare the recorded objective gaps with the theoretical SFISTA bound.

    At iteration ``t`` the bound is
    ``eps c^2 / 2 + 4 ||G_0 - G*||_F^2 ||X||^2 / ((t+1)^2 eps m n)`` with
    ``c = max(tau, 1-tau)`` and ``eps`` the accuracy implied by the smoothing
    level of the run.
    """
    X = as_matrix(X, "X")
    ref = as_matrix(reference_gamma, "reference_gamma")
    n = X.shape[0]
    p, m = ref.shape
    g0 = np.zeros((p, m)) if gamma0 is None else as_matrix(gamma0, "gamma0")
    err0 = float(np.linalg.norm(g0 - ref))
    xnorm = float(np.linalg.norm(X, 2))
    eps = result.epsilon
    c = tail_weight(result.tau)
    t = np.arange(1, result.iterations + 1, dtype=np.float64)
    bounds = eps * c * c / 2.0 + 4.0 * err0 ** 2 * xnorm ** 2 / ((t + 1.0) ** 2 * eps * m * n)
    gaps = np.abs(result.loss_history - reference_objective)
    return ConvergenceReport(
        iterations=t.astype(int),
        gaps=gaps,
        bounds=bounds,
        required_iterations=iteration_bound(err0, xnorm, n, m, result.tau, eps),
        epsilon=eps,
    )

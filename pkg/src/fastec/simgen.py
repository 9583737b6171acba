"""Simulation designs and the Monte Carlo study harness.

Symmetric models (``Y = X G + eps``) differ only in the singular spectrum of
``G``:

* ``LS``: the trailing 75% of the singular values of a Gaussian matrix are
  zeroed (rank 125 at p = m = 500);
* ``MS``: the leading ``min(10, max(1, min(p, m) // 50))`` singular values
  are set to 30, the rest to 0;
* ``ES``: a single singular value equal to 20.

Asymmetric models (``AES``: ranks (2, 2), ``AMS``: ranks (2, 10)) draw
``Y_ij = Phi^{-1}(U_ij) x_i^T [G1_j 1{U_ij < .5} + G2_j 1{U_ij >= .5}]`` on a
Gaussian-copula design in ``[0, 1]^p``.
"""

from __future__ import annotations

import dataclasses
import enum
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DimensionMismatch, InvalidConfig
from .factorization import factorize
from .matrix_core import as_matrix
from .qr_loss import check_tau
from .solver import SolverConfig, fit
from .tuning import PivotalConfig, pivotal_lambda

RESULT_COLUMNS = ("rep", "tau", "lambda", "pred_err", "fro_err", "nuc_err", "rank_hat", "seconds")

#: lambda grid entry that requests a per-instance pivotal penalty
PIVOTAL = "pivotal"


class Model(str, enum.Enum):
    LS = "LS"
    MS = "MS"
    ES = "ES"
    AES = "AES"
    AMS = "AMS"

    @property
    def symmetric(self) -> bool:
        return self in (Model.LS, Model.MS, Model.ES)


ASYMMETRIC_RANKS = {Model.AES: (2, 2), Model.AMS: (2, 10)}


@dataclass(frozen=True)
class SimSpec:
    model: Model
    n: int = 100
    p: int = 100
    m: int = 100
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        if min(self.n, self.p, self.m) < 2:
            raise InvalidConfig("n, p and m must all be >= 2")
        if not self.model.symmetric:
            r1, r2 = ASYMMETRIC_RANKS[self.model]
            if max(r1, r2) > min(self.p, self.m):
                raise InvalidConfig(f"{self.model.value} needs min(p, m) >= {max(r1, r2)}")


@dataclass
class SimInstance:
    X: np.ndarray
    Y: np.ndarray
    gamma: Optional[np.ndarray] = None
    gamma1: Optional[np.ndarray] = None
    gamma2: Optional[np.ndarray] = None

    def truth(self, tau: float) -> np.ndarray:
        """Coefficient matrix that the estimate at level ``tau`` is scored against.

        Symmetric designs return ``G`` at every level (the noise quantile is
        a constant shift the no-intercept model does not represent).
        """
        tau = check_tau(tau)
        if self.gamma is not None:
            return self.gamma
        z = float(ndtri(tau))
        return z * (self.gamma1 if tau < 0.5 else self.gamma2)

    def true_quantiles(self, tau: float) -> np.ndarray:
        """n x m conditional quantiles of ``Y`` given ``X`` (asymmetric designs)."""
        if self.gamma is not None:
            return self.X @ self.gamma + float(ndtri(check_tau(tau)))
        return self.X @ self.truth(tau)


def instance_rng(seed: int, rep: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(rep)])


def ar_covariance(p: int, rho: float = 0.5) -> np.ndarray:
    idx = np.arange(p)
    return rho ** np.abs(np.subtract.outer(idx, idx))


def ar_design(rng: np.random.Generator, n: int, p: int, rho: float = 0.5) -> np.ndarray:
    """Rows i.i.d. ``N(0, Sigma)`` with ``Sigma_ij = rho^|i-j|``."""
    L = np.linalg.cholesky(ar_covariance(p, rho))
    return rng.standard_normal((n, p)) @ L.T


def gen_gamma_symmetric(model, p: int, m: int, seed: Union[int, np.random.Generator] = 0) -> np.ndarray:
    model = Model(model)
    if not model.symmetric:
        raise InvalidConfig(f"{model.value} is not a symmetric model")
    rng = seed if isinstance(seed, np.random.Generator) else instance_rng(seed)
    G = rng.standard_normal((p, m))
    U, s, Vt = np.linalg.svd(G, full_matrices=False)
    k = len(s)
    if model is Model.LS:
        keep = k - int(round(0.75 * k))
        s[keep:] = 0.0
    elif model is Model.MS:
        r = min(10, max(1, k // 50))
        s[:r] = 30.0
        s[r:] = 0.0
    else:
        s[0] = 20.0
        s[1:] = 0.0
    return (U * s) @ Vt


def gen_symmetric_instance(spec: SimSpec, rep: int = 0) -> SimInstance:
    rng = instance_rng(spec.seed, rep)
    G = gen_gamma_symmetric(spec.model, spec.p, spec.m, rng)
    X = ar_design(rng, spec.n, spec.p)
    Y = X @ G + rng.standard_normal((spec.n, spec.m))
    return SimInstance(X=X, Y=Y, gamma=G)


def _mixture_matrix(rng: np.random.Generator, p: int, m: int, r: int) -> np.ndarray:
    basis = rng.random((p, r))
    weights = rng.random((r, m))
    return basis @ weights


def gen_asymmetric_instance(spec: SimSpec, rep: int = 0) -> SimInstance:
    if spec.model.symmetric:
        raise InvalidConfig(f"{spec.model.value} is not an asymmetric model")
    rng = instance_rng(spec.seed, rep)
    r1, r2 = ASYMMETRIC_RANKS[spec.model]
    G1 = _mixture_matrix(rng, spec.p, spec.m, r1)
    G2 = _mixture_matrix(rng, spec.p, spec.m, r2)
    X = ndtr(ar_design(rng, spec.n, spec.p))
    U = rng.random((spec.n, spec.m))
    lower = U < 0.5
    scale = np.where(lower, X @ G1, X @ G2)
    Y = ndtri(U) * scale
    return SimInstance(X=X, Y=Y, gamma1=G1, gamma2=G2)


def generate(spec: SimSpec, rep: int = 0) -> SimInstance:
    if spec.model.symmetric:
        return gen_symmetric_instance(spec, rep)
    return gen_asymmetric_instance(spec, rep)


def error_metrics(gamma_hat, truth, X, drop_threshold: Optional[float] = None) -> dict:
    """Prediction, Frobenius and nuclear errors plus the detected rank of ``gamma_hat``."""
    gamma_hat = as_matrix(gamma_hat, "gamma_hat")
    truth = as_matrix(truth, "truth")
    X = as_matrix(X, "X")
    if gamma_hat.shape != truth.shape or X.shape[1] != truth.shape[0]:
        raise DimensionMismatch("gamma_hat, truth and X are not conformable")
    diff = gamma_hat - truth
    m = truth.shape[1]
    return {
        "prediction": float(np.linalg.norm(X @ diff) / m),
        "frobenius": float(np.linalg.norm(diff)),
        "nuclear": float(np.sum(np.linalg.svd(diff, compute_uv=False))),
        "rank_hat": factorize(gamma_hat, drop_threshold).rank,
    }


@dataclass(frozen=True)
class StudyConfig:
    solver: SolverConfig = SolverConfig(epsilon=1e-2)
    pivotal: PivotalConfig = PivotalConfig(multiplier=1.5, n_sim=100)
    drop_threshold: Optional[float] = None
    timing: bool = True


def _pivotal_seed(seed: int, rep: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(rep), 1]).generate_state(1)[0])


def run_replicate(spec: SimSpec, rep: int, taus: Sequence[float],
                  lambdas: Sequence[Union[float, str]], cfg: StudyConfig) -> list:
    inst = generate(spec, rep)
    m = spec.m
    rows = []
    piv = dataclasses.replace(cfg.pivotal, seed=_pivotal_seed(spec.seed, rep))
    for tau in taus:
        for lam in lambdas:
            start = time.perf_counter()
            if lam == PIVOTAL:
                lam_value = pivotal_lambda(inst.X, m, tau, piv)
                rule = PIVOTAL
            else:
                lam_value = float(lam)
                rule = "fixed"
            res = fit(inst.X, inst.Y, dataclasses.replace(cfg.solver, tau=tau, lam=lam_value))
            seconds = time.perf_counter() - start if cfg.timing else 0.0
            met = error_metrics(res.gamma_hat, inst.truth(tau), inst.X, cfg.drop_threshold)
            rows.append({
                "rep": rep,
                "tau": float(tau),
                "lambda": lam_value,
                "pred_err": met["prediction"],
                "fro_err": met["frobenius"],
                "nuc_err": met["nuclear"],
                "rank_hat": met["rank_hat"],
                "seconds": seconds,
                "lambda_rule": rule,
                "iterations": res.iterations,
            })
    return rows


def run_study(spec: SimSpec, taus: Sequence[float], lambdas: Sequence[Union[float, str]],
              reps: int, cfg: StudyConfig = StudyConfig(), workers: int = 1) -> list:
    """One row per (rep, tau, lambda) with the four error metrics and wall time.

    ``lambdas`` may contain the string ``"pivotal"`` to tune the penalty on
    every instance and level.  Replicate ``r`` draws from the stream
    ``(spec.seed, r)``, so results do not depend on ``workers``.
    """
    if reps < 1:
        raise InvalidConfig(f"reps must be >= 1, got {reps}")
    if not taus or not lambdas:
        raise InvalidConfig("taus and lambdas must be nonempty")
    for lam in lambdas:
        if lam != PIVOTAL and not float(lam) >= 0.0:
            raise InvalidConfig(f"invalid lambda {lam!r}")

    def one(rep):
        return run_replicate(spec, rep, taus, lambdas, cfg)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(one, range(reps)))
    else:
        chunks = [one(rep) for rep in range(reps)]
    return [row for chunk in chunks for row in chunk]


def long_format(rows: Sequence[dict], model: str) -> list:
    """Melt study rows into (model, rep, tau, lambda_rule, lambda, metric, value) records."""
    out = []
    for row in rows:
        for metric in ("pred_err", "fro_err", "nuc_err", "rank_hat", "seconds"):
            out.append({
                "model": model,
                "rep": row["rep"],
                "tau": row["tau"],
                "lambda_rule": row["lambda_rule"],
                "lambda": row["lambda"],
                "metric": metric,
                "value": row[metric],
            })
    return out

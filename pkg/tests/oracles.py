"""Independent reference computations used by the tests.

None of these call into the package's SVD, prox or solver code.
"""

import numpy as np


def nuclear_2x2(a, b, c, d):
    """Nuclear norm of [[a, b], [c, d]] without an SVD: sqrt(||A||_F^2 + 2|det A|)."""
    return np.sqrt(a * a + b * b + c * c + d * d + 2.0 * np.abs(a * d - b * c))


def prox_objective_2x2(a, b, c, d, Y, lam):
    return lam * nuclear_2x2(a, b, c, d) + 0.5 * (
        (a - Y[0, 0]) ** 2 + (b - Y[0, 1]) ** 2 + (c - Y[1, 0]) ** 2 + (d - Y[1, 1]) ** 2
    )


def grid_argmin_2x2(Y, lam, center, half, spacing):
    """Exhaustive minimization over the 4-D grid ``center + spacing * k``, ``|k| <= half/spacing``.

    Returns ``(argmin, min_value, value_at_center)``.
    """
    Y = np.asarray(Y, dtype=np.float64)
    c0 = np.asarray(center, dtype=np.float64).ravel()
    k = int(round(half / spacing))
    offs = spacing * np.arange(-k, k + 1)
    a, b, c, d = np.meshgrid(*(c0[i] + offs for i in range(4)), indexing="ij")
    obj = prox_objective_2x2(a, b, c, d, Y, lam)
    idx = np.unravel_index(np.argmin(obj), obj.shape)
    best = np.array([c0[i] + offs[idx[i]] for i in range(4)]).reshape(2, 2)
    at_center = float(prox_objective_2x2(*c0, Y, lam))
    return best, float(obj[idx]), at_center


def prox_grid_2x2(Y, lam, step=1e-3, points=9, shrink=0.7):
    """Global coarse-to-fine grid search for the 2 x 2 prox (no SVD involved).

    The box shrinks geometrically around the incumbent until the spacing is
    at most ``step``.  Near a rank-deficient minimizer the objective is flat
    to second order along the kink, so the result is only accurate to about
    ``sqrt(step)``; it locates the basin, the fine check is done by
    :func:`grid_argmin_2x2`.
    """
    Y = np.asarray(Y, dtype=np.float64)
    center = Y.ravel().copy()
    half = float(np.abs(Y).max()) + lam + 1.0
    offsets = np.linspace(-1.0, 1.0, points)
    while True:
        axes = [center[i] + half * offsets for i in range(4)]
        obj = prox_objective_2x2(*np.meshgrid(*axes, indexing="ij"), Y, lam)
        k = np.unravel_index(np.argmin(obj), obj.shape)
        center = np.array([axes[i][k[i]] for i in range(4)])
        spacing = 2.0 * half / (points - 1)
        if spacing <= step:
            return center.reshape(2, 2), spacing
        half *= shrink


def check_loss_loop(gamma, X, Y, tau):
    """Naive double loop over observations and responses."""
    n, m = Y.shape
    total = 0.0
    for i in range(n):
        for j in range(m):
            u = Y[i, j] - sum(X[i, k] * gamma[k, j] for k in range(X.shape[1]))
            total += u * (tau - (1.0 if u <= 0 else 0.0))
    return total / (n * m)


def quantile_grid_1d(y, tau, lo=None, hi=None, points=20001):
    """Grid minimizer of sum rho_tau(y_i - g) and the exact argmin interval.

    The check loss is piecewise linear, so the minimizers form an interval
    between order statistics; it is returned as ``(g_grid, (left, right))``.
    """
    y = np.sort(np.asarray(y, dtype=np.float64))
    lo = y[0] if lo is None else lo
    hi = y[-1] if hi is None else hi
    g = np.linspace(lo, hi, points)
    u = y[None, :] - g[:, None]
    obj = np.sum(u * (tau - (u <= 0)), axis=1)
    best = obj.min()
    flat = g[obj <= best + 1e-9 * max(1.0, abs(best))]
    # exact interval from the subgradient condition on order statistics
    n = len(y)
    k = tau * n
    if abs(k - round(k)) < 1e-9:
        k = int(round(k))
        interval = (y[k - 1], y[k]) if 0 < k < n else (y[max(k - 1, 0)], y[max(k - 1, 0)])
    else:
        idx = int(np.ceil(k)) - 1
        interval = (y[idx], y[idx])
    return g[np.argmin(obj)], interval, (flat.min(), flat.max())


def cvx_reference(X, Y, tau, lam):
    """Penalized multivariate check-loss minimum from a conic solver (cvxpy/Clarabel)."""
    import cvxpy as cp

    p, m = X.shape[1], Y.shape[1]
    G = cp.Variable((p, m))
    R = Y - X @ G
    loss = cp.sum(cp.maximum(tau * R, (tau - 1.0) * R)) / (Y.shape[0] * m)
    obj = loss + lam * cp.normNuc(G) if lam > 0 else loss
    prob = cp.Problem(cp.Minimize(obj))
    prob.solve(solver="CLARABEL", tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11)
    return float(prob.value), np.asarray(G.value)


def power_iteration_norm(A, iters=2000, seed=0):
    """Largest singular value via power iteration on A^T A."""
    v = np.random.default_rng(seed).standard_normal(A.shape[1])
    for _ in range(iters):
        v = A.T @ (A @ v)
        v /= np.linalg.norm(v)
    return float(np.linalg.norm(A @ v))


def kink_free(R, tau, kappa, margin=1e-3):
    """True if no rescaled residual lies within ``margin`` of a clip boundary."""
    n, m = R.shape
    z = R / (kappa * m * n)
    return bool(np.all(np.abs(z - tau) > margin) and np.all(np.abs(z - (tau - 1.0)) > margin))

import numpy as np
import pytest
from scipy.special import ndtri

from fastec.errors import DimensionMismatch, InvalidConfig
from fastec.simgen import (
    PIVOTAL, RESULT_COLUMNS, SimSpec, StudyConfig, ar_covariance, ar_design, error_metrics,
    gen_asymmetric_instance, gen_gamma_symmetric, gen_symmetric_instance, generate, long_format, run_study,
)
from fastec.solver import SolverConfig
from fastec.tuning import PivotalConfig


def sv(G):
    return np.linalg.svd(G, compute_uv=False)


@pytest.mark.parametrize("p,m", [(20, 30), (100, 100)])
def test_es_spectrum(p, m):
    s = sv(gen_gamma_symmetric("ES", p, m, seed=1))
    assert s[0] == pytest.approx(20.0)
    assert np.all(s[1:] < 1e-10)


def test_ms_ls_spectra():
    s = sv(gen_gamma_symmetric("MS", 500, 500, seed=0))
    np.testing.assert_allclose(s[:10], 30.0)
    assert np.all(s[10:] < 1e-9)
    assert np.sum(sv(gen_gamma_symmetric("LS", 500, 500, seed=0)) > 1e-9) == 125
    assert np.sum(sv(gen_gamma_symmetric("MS", 100, 100, seed=0)) > 1e-9) == 2
    assert np.sum(sv(gen_gamma_symmetric("LS", 100, 100, seed=0)) > 1e-9) == 25


def test_gamma_validation_and_determinism():
    with pytest.raises(InvalidConfig):
        gen_gamma_symmetric("AES", 5, 5)
    with pytest.raises(ValueError):
        SimSpec("XX")
    with pytest.raises(InvalidConfig):
        SimSpec("ES", n=1)
    with pytest.raises(InvalidConfig):
        SimSpec("AMS", p=5, m=5)
    assert np.array_equal(gen_gamma_symmetric("LS", 8, 6, 3), gen_gamma_symmetric("LS", 8, 6, 3))


def test_ar_design_covariance():
    n, p = 20_000, 5
    X = ar_design(np.random.default_rng(0), n, p)
    S = X.T @ X / n
    target = ar_covariance(p)
    # entrywise Monte Carlo standard error of a Gaussian covariance estimate
    se = np.sqrt((target ** 2 + np.outer(np.diag(target), np.diag(target))) / n)
    z = np.abs(S - target) / se
    assert np.all(z <= 3.0), z.max()


def test_symmetric_instance():
    spec = SimSpec("ES", n=400, p=10, m=8, seed=2)
    inst = gen_symmetric_instance(spec, 1)
    eps = inst.Y - inst.X @ inst.gamma
    assert abs(eps.mean()) < 4 / np.sqrt(eps.size)
    again = generate(spec, 1)
    assert np.array_equal(again.Y, inst.Y)
    assert not np.array_equal(generate(spec, 2).Y, inst.Y)
    assert np.array_equal(inst.truth(0.1), inst.gamma)
    q = inst.true_quantiles(0.1)
    assert abs(np.mean(inst.Y <= q) - 0.1) < 3 * np.sqrt(0.09 / inst.Y.size)


@pytest.mark.parametrize("model,ranks", [("AES", (2, 2)), ("AMS", (2, 10))])
def test_asymmetric_instance(model, ranks):
    inst = gen_asymmetric_instance(SimSpec(model, n=2000, p=20, m=20, seed=4))
    assert np.linalg.matrix_rank(inst.gamma1) == ranks[0]
    assert np.linalg.matrix_rank(inst.gamma2) == ranks[1]
    assert np.all((inst.X >= 0) & (inst.X <= 1))
    assert not inst.truth(0.5).any()
    for tau in (0.1, 0.9):
        cover = np.mean(inst.Y <= inst.true_quantiles(tau))
        assert abs(cover - tau) <= 3 * np.sqrt(tau * (1 - tau) / inst.Y.size)
    np.testing.assert_allclose(inst.truth(0.1), ndtri(0.1) * inst.gamma1)
    with pytest.raises(InvalidConfig):
        gen_asymmetric_instance(SimSpec("ES"))


def test_error_metrics():
    r = np.random.default_rng(5)
    G, E, X = r.standard_normal((6, 4)), r.standard_normal((6, 4)), r.standard_normal((10, 6))
    zero = error_metrics(G, G, X)
    assert zero["prediction"] == zero["frobenius"] == zero["nuclear"] == 0.0
    met = error_metrics(G + E, G, X)
    assert met["frobenius"] == pytest.approx(np.linalg.norm(E))
    assert met["prediction"] == pytest.approx(np.linalg.norm(X @ E) / 4)
    assert met["nuclear"] >= met["frobenius"]
    with pytest.raises(DimensionMismatch):
        error_metrics(G, G.T, X)


def tiny_study(**kw):
    spec = SimSpec("ES", n=30, p=6, m=5, seed=9)
    cfg = StudyConfig(solver=SolverConfig(epsilon=1e-2, max_iters=50), pivotal=PivotalConfig(n_sim=10), timing=False)
    return run_study(spec, [0.2, 0.5], [1e-3, PIVOTAL], 3, cfg, **kw)


def test_study_rows_and_determinism():
    rows = tiny_study()
    assert len(rows) == 3 * 2 * 2
    assert set(RESULT_COLUMNS) <= set(rows[0])
    assert rows == tiny_study()
    assert rows == tiny_study(workers=3)
    assert {r["lambda_rule"] for r in rows} == {"fixed", PIVOTAL}
    longs = long_format(rows, "ES")
    assert len(longs) == 5 * len(rows)


def test_single_rep_matches_direct_fit():
    from fastec.solver import fit
    spec = SimSpec("ES", n=30, p=6, m=5, seed=9)
    cfg = StudyConfig(solver=SolverConfig(epsilon=1e-2, max_iters=50), timing=False)
    row = run_study(spec, [0.3], [1e-3], 1, cfg)[0]
    inst = generate(spec, 0)
    res = fit(inst.X, inst.Y, SolverConfig(tau=0.3, lam=1e-3, epsilon=1e-2, max_iters=50))
    assert row["fro_err"] == error_metrics(res.gamma_hat, inst.gamma, inst.X)["frobenius"]


def test_study_validation():
    spec = SimSpec("ES", n=10, p=3, m=3)
    with pytest.raises(InvalidConfig):
        run_study(spec, [0.5], [0.1], 0)
    with pytest.raises(InvalidConfig):
        run_study(spec, [], [0.1], 1)
    with pytest.raises(InvalidConfig):
        run_study(spec, [0.5], [-1.0], 1)

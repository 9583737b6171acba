import numpy as np
import pytest

from fastec.errors import DimensionMismatch, IndexOutOfRange, InvalidConfig
from fastec.factorization import FactorModel, contribution, detect_rank, factor_scores, factorize, sensitivity


def low_rank(seed, p=8, m=6, s=(5.0, 4.8)):
    r = np.random.default_rng(seed)
    U, _ = np.linalg.qr(r.standard_normal((p, len(s))))
    V, _ = np.linalg.qr(r.standard_normal((m, len(s))))
    return (U * np.asarray(s)) @ V.T


def test_detect_rank_examples():
    assert detect_rank([5.0, 4.9, 0.1], 0.5) == 2
    assert detect_rank([5.0, 1.0, 0.9], 0.5) == 1
    assert detect_rank([0.0, 0.0], 0.1) == 0
    # no large drop anywhere except at the end
    assert detect_rank([1.0, 0.95, 0.9], 0.5) == 3


def test_factorize_recovers_rank_and_gamma():
    G = low_rank(0)
    fm = factorize(G)
    assert fm.rank == 2
    np.testing.assert_allclose(fm.gamma(), G, atol=1e-12)
    np.testing.assert_allclose(fm.gamma(2), G, atol=1e-12)
    np.testing.assert_allclose(fm.singular_values[:2], [5.0, 4.8])


def test_first_gap_wins():
    # a large drop right after the leading value stops the count there
    assert factorize(low_rank(0, s=(5.0, 2.0))).rank == 1
    assert factorize(low_rank(0, s=(5.0, 2.0)), drop_threshold=3.5).rank == 2


def test_sign_convention_deterministic():
    G = low_rank(1)
    a, b = factorize(G), factorize(-G)
    # flipping gamma flips only the loadings under the convention
    np.testing.assert_allclose(a.left_vectors[:, :2], b.left_vectors[:, :2], atol=1e-12)
    np.testing.assert_allclose(a.loadings[:, :2], -b.loadings[:, :2], atol=1e-12)
    idx = np.argmax(np.abs(a.left_vectors), axis=0)
    assert np.all(a.left_vectors[idx, np.arange(a.left_vectors.shape[1])] > 0)


def test_zero_matrix():
    fm = factorize(np.zeros((3, 2)))
    assert fm.rank == 0
    assert factor_scores(fm, np.ones((4, 3))).shape == (4, 0)


def test_threshold_validation():
    with pytest.raises(InvalidConfig):
        factorize(np.eye(2), drop_threshold=-1.0)


def test_factor_scores_reconstruct_quantiles():
    G = low_rank(2)
    X = np.random.default_rng(3).standard_normal((10, 8))
    fm = factorize(G)
    F = factor_scores(fm, X)
    np.testing.assert_allclose(F @ sensitivity(fm).T, X @ G, atol=1e-12)
    with pytest.raises(DimensionMismatch):
        factor_scores(fm, X[:, :5])


def test_contribution_is_gradient():
    G = low_rank(4)
    fm = factorize(G)
    x = np.random.default_rng(5).standard_normal(8)
    h = 1e-6
    for k in range(fm.rank):
        fd = np.array([(factor_scores(fm, (x + h * e)[None])[0, k] - factor_scores(fm, (x - h * e)[None])[0, k]) / (2 * h)
                       for e in np.eye(8)])
        np.testing.assert_allclose(contribution(fm, k), fd, atol=1e-8)
    with pytest.raises(IndexOutOfRange):
        contribution(fm, fm.rank)


def test_dict_round_trip():
    fm = factorize(low_rank(6))
    back = FactorModel.from_dict(fm.to_dict())
    assert back.rank == fm.rank
    for a, b in ((back.singular_values, fm.singular_values), (back.left_vectors, fm.left_vectors),
                 (back.loadings, fm.loadings)):
        assert np.array_equal(a, b)

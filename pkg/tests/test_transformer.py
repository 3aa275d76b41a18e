import math

import numpy as np
import pytest
import scipy.sparse as sp
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer
from sklearn.utils.estimator_checks import check_estimator

from stablesketch import StableRandomProjection, estimators, project_vector
from stablesketch._validation import DomainError


def test_sklearn_conventions():
    check_estimator(StableRandomProjection(n_components=8))


def test_matches_project_vector():
    X = np.random.default_rng(0).normal(size=(4, 30))
    est = StableRandomProjection(n_components=12, alpha=1.3, random_state=5).fit(X)
    V = est.transform(X)
    for row, v in zip(X, V):
        np.testing.assert_allclose(v, project_vector(est.spec_, row).values, rtol=1e-12, atol=1e-12)


def test_sparse_input_same_as_dense():
    X = sp.random(5, 200, density=0.05, format="csr", random_state=1)
    est = StableRandomProjection(n_components=10, mode="sparse-pareto", alpha=0.9, random_state=2).fit(X)
    np.testing.assert_allclose(est.transform(X), est.transform(X.toarray()), rtol=1e-12, atol=1e-14)
    assert est.spec_.beta == pytest.approx(200**-0.5)


def test_feature_mismatch():
    est = StableRandomProjection(n_components=4).fit(np.ones((2, 5)))
    with pytest.raises(ValueError):
        est.transform(np.ones((2, 6)))


def test_integer_seed_required():
    with pytest.raises(DomainError):
        StableRandomProjection(random_state=None).fit(np.ones((2, 3)))


def test_distance_estimates():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(3, 400))
    est = StableRandomProjection(n_components=2000, alpha=1.0, random_state=11)
    V = est.fit_transform(X)
    Dm = est.pairwise_distances(V)
    assert np.allclose(Dm, Dm.T) and np.all(np.diag(Dm) == 0)
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        truth = np.abs(X[i] - X[j]).sum()
        assert abs(Dm[i, j] - truth) < 4 * math.sqrt(estimators.gm_variance(2000, 1.0, truth))
    norms = est.estimate_norms(V)
    truth = np.abs(X).sum(axis=1)
    assert np.all(np.abs(norms - truth) < 4 * np.sqrt(estimators.gm_variance(2000, 1.0) * truth**2))


def test_sparse_mode_normalized_estimates():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(2, 3000))
    est = StableRandomProjection(n_components=400, alpha=1.0, mode="sparse-pareto", random_state=1)
    V = est.fit_transform(X)
    truth = np.abs(X[0] - X[1]).sum()
    assert est.pairwise_distances(V)[0, 1] == pytest.approx(truth, rel=0.2)


def test_in_pipeline():
    pipe = make_pipeline(FunctionTransformer(np.abs), StableRandomProjection(n_components=6, random_state=1))
    assert pipe.fit_transform(np.ones((3, 7))).shape == (3, 6)


def test_get_params_round_trip():
    est = StableRandomProjection(n_components=9, alpha=0.5, beta=0.1, mode="sparse-pareto", random_state=7)
    clone = StableRandomProjection(**est.get_params())
    X = np.eye(4)
    np.testing.assert_array_equal(est.fit_transform(X), clone.fit_transform(X))

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from toposig import DirichletMLE, TopologicalFeatures, TopoMMDTest
from toposig.grad import batch_features
from toposig.tcloss import TCParams


def test_features_match_function(rng):
    Y, Z, T = rng.normal(size=(6, 3)), rng.normal(size=(20, 3)), rng.normal(size=(8, 3))
    est = TopologicalFeatures(method="TP", alpha=2.0).fit(Z, T)
    expected = batch_features(Y, Z, T, TCParams(method="TP", alpha=2.0, max_dim=0)).grads
    np.testing.assert_array_equal(est.transform(Y), expected)
    assert est.n_features_in_ == 3


def test_clone_and_params():
    est = TopologicalFeatures(method="MK", sigma=0.5, exact=True)
    assert clone(est).get_params() == est.get_params()
    est.set_params(sigma=2.0)
    assert est.get_params()["sigma"] == 2.0
    assert set(TopoMMDTest().get_params()) == {"kernel", "eps0", "steps", "lr", "n_permutations", "alpha", "seed", "bandwidth_scales"}


def test_unfitted_transform(rng):
    with pytest.raises(NotFittedError):
        TopologicalFeatures().transform(rng.normal(size=(3, 2)))
    with pytest.raises(NotFittedError):
        TopoMMDTest().test(rng.normal(size=(3, 2)), rng.normal(size=(3, 2)))


def test_mmd_estimator_detects_shift(rng):
    X, Y = rng.normal(size=(40, 2)), rng.normal(size=(40, 2)) + 2
    est = TopoMMDTest(kernel="GAUSSIAN", steps=10).fit(X[:20], Y[:20])
    out = est.test(X[20:], Y[20:])
    assert out.reject


def test_dirichlet_estimator(rng):
    lam = rng.dirichlet([3.0, 2.0, 1.0], size=4000)
    est = DirichletMLE().fit(lam)
    np.testing.assert_allclose(est.alpha_, [3, 2, 1], rtol=0.08)
    np.testing.assert_allclose(est.variance_, lam.var(axis=0), rtol=0.1)

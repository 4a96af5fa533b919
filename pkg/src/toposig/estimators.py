"""scikit-learn style wrappers so the pieces compose with pipelines and ``clone``."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .grad import batch_features, exact_features
from .mmdtest import KernelParams, initial_params, optimize_kernel, permutation_test
from .pcp import dirichlet_mle
from .persistence import vr_persistence
from .pointcloud import pairwise_distances
from .tcloss import TCParams


class TopologicalFeatures(TransformerMixin, BaseEstimator):
    """Per-sample topological-contrastive gradients.

    ``fit(Z, T)`` stores the hold-out cloud ``Z`` and the persistence diagram of
    the reference (text) cloud ``T``. ``transform(Y)`` returns the gradient of
    the loss of ``Y u Z`` against ``T``, restricted to the rows of ``Y``.
    With ``exact=True`` each row is differentiated in its own filtration
    ``{y_i} u Z`` instead.
    """

    def __init__(self, method="TP", alpha=1.0, sigma=1.0, max_dim=0, exact=False):
        self.method = method
        self.alpha = alpha
        self.sigma = sigma
        self.max_dim = max_dim
        self.exact = exact

    def _params(self):
        return TCParams(method=self.method, alpha=self.alpha, sigma=self.sigma, max_dim=self.max_dim)

    def fit(self, X, y):
        """``X`` is the hold-out cloud ``Z``; ``y`` is the reference cloud ``T``."""
        params = self._params()
        self.holdout_ = check_array(X, dtype=np.float64)
        text = check_array(y, dtype=np.float64)
        self.text_diagram_ = vr_persistence(pairwise_distances(text), max_dim=params.max_dim)
        self.n_features_in_ = self.holdout_.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "text_diagram_")
        X = check_array(X, dtype=np.float64)
        fn = exact_features if self.exact else batch_features
        return fn(X, self.holdout_, None, self._params(), text_diagram=self.text_diagram_).grads


class TopoMMDTest(BaseEstimator):
    """Two-sample test with a learned mixed kernel.

    ``fit`` picks median-heuristic bandwidths on a training pair and then
    ascends the power criterion from each rescaling in ``bandwidth_scales``.
    ``test`` runs the permutation test on new, disjoint data. Feature views
    are passed as ``X_features``/``Y_features``; without them the embeddings
    double as features.
    """

    def __init__(
        self,
        kernel="TPSAMMD",
        eps0=0.1,
        steps=50,
        lr=0.05,
        n_permutations=200,
        alpha=0.05,
        seed=0,
        bandwidth_scales=(0.1, 0.3, 1.0, 3.0),
    ):
        self.kernel = kernel
        self.eps0 = eps0
        self.steps = steps
        self.lr = lr
        self.n_permutations = n_permutations
        self.alpha = alpha
        self.seed = seed
        self.bandwidth_scales = bandwidth_scales

    @staticmethod
    def _set(E, F):
        E = check_array(E, dtype=np.float64)
        return E if F is None else (E, check_array(F, dtype=np.float64))

    def fit(self, X, Y, X_features=None, Y_features=None):
        sx, sy = self._set(X, X_features), self._set(Y, Y_features)
        p0 = initial_params(self.kernel, sx, sy, eps0=self.eps0)
        self.kernel_params_ = optimize_kernel(
            sx, sy, p0, steps=self.steps, lr=self.lr, bandwidth_scales=self.bandwidth_scales
        )
        return self

    def test(self, X, Y, X_features=None, Y_features=None):
        check_is_fitted(self, "kernel_params_")
        return permutation_test(
            self._set(X, X_features),
            self._set(Y, Y_features),
            self.kernel_params_,
            n_permutations=self.n_permutations,
            alpha=self.alpha,
            seed=self.seed,
        )

    def set_kernel_params(self, params: KernelParams):
        self.kernel_params_ = params
        return self


class DirichletMLE(BaseEstimator):
    """Fits Dirichlet concentrations to rows of barycentric coordinates."""

    def __init__(self, max_iter=1000, tol=1e-8):
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        fit = dirichlet_mle(check_array(X, dtype=np.float64), max_iter=self.max_iter, tol=self.tol)
        self.alpha_ = fit.alpha
        self.log_likelihood_ = np.asarray(fit.log_likelihood)
        self.n_iter_ = fit.n_iter
        return self

    @property
    def variance_(self):
        check_is_fitted(self, "alpha_")
        a0 = self.alpha_.sum()
        mean = self.alpha_ / a0
        return mean * (1 - mean) / (a0 + 1)

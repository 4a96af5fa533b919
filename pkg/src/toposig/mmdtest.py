"""Kernel two-sample tests on embeddings augmented with a second feature view.

Each sample is a pair ``(embedding row, feature row)``. The mixed kernel is

    k(a, b) = [(1 - eps0) * g(f_a, f_b; sigma_tc) + eps0] * g(e_a, e_b; sigma_nu)

with ``g`` a Gaussian. For ``TPSAMMD``/``MKSAMMD`` the feature view holds
topological gradients; for ``SAMMD_EMB`` it holds a deep-feature view of the
same inputs (or the embeddings again if no second view exists). ``GAUSSIAN``
ignores the feature view and uses ``g(e_a, e_b; sigma_nu)`` alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .exceptions import InputValidationError, OptimizationError, ParameterError

KERNEL_METHODS = ("TPSAMMD", "MKSAMMD", "SAMMD_EMB", "GAUSSIAN")


@dataclass(frozen=True)
class KernelParams:
    eps0: float = 0.1
    sigma_nu: float = 1.0
    sigma_tc: float = 1.0
    method: str = "TPSAMMD"

    def __post_init__(self):
        method = self.method.upper().replace("-", "_")
        object.__setattr__(self, "method", method)
        if method not in KERNEL_METHODS:
            raise ParameterError(f"unknown kernel {self.method!r}; expected one of {KERNEL_METHODS}")
        if not 0 < self.eps0 < 1:
            raise ParameterError(f"eps0 must lie in (0, 1), got {self.eps0}")
        if not (self.sigma_nu > 0 and self.sigma_tc > 0):
            raise ParameterError("bandwidths must be positive")

    @property
    def uses_features(self) -> bool:
        return self.method != "GAUSSIAN"


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    threshold: float
    p_value: float
    reject: bool
    n_permutations: int
    seed: int

    __test__ = False


def as_sample_set(data, name="set"):
    """Normalize ``array`` or ``(embeddings, features)`` into two float arrays.

    A missing feature view is filled with the embeddings themselves.
    """
    if isinstance(data, tuple):
        emb, feat = data
    else:
        emb, feat = data, None
    emb = np.atleast_2d(np.asarray(emb, dtype=np.float64))
    feat = emb if feat is None else np.atleast_2d(np.asarray(feat, dtype=np.float64))
    if emb.shape[0] != feat.shape[0]:
        raise InputValidationError(f"{name}: {emb.shape[0]} embedding rows but {feat.shape[0]} feature rows")
    if not (np.isfinite(emb).all() and np.isfinite(feat).all()):
        raise InputValidationError(f"{name}: non-finite values")
    return emb, feat


def _gauss(sq, sigma):
    return np.exp(-sq / (2 * sigma**2))


def mixed_kernel(ea, fa, eb, fb, params: KernelParams) -> float:
    ea, fa, eb, fb = (np.asarray(v, dtype=np.float64).ravel() for v in (ea, fa, eb, fb))
    if ea.shape != eb.shape or fa.shape != fb.shape:
        raise InputValidationError("kernel arguments differ in dimension")
    nu = _gauss(float(((ea - eb) ** 2).sum()), params.sigma_nu)
    if not params.uses_features:
        return float(nu)
    tau = _gauss(float(((fa - fb) ** 2).sum()), params.sigma_tc)
    return float(((1 - params.eps0) * tau + params.eps0) * nu)


def tc_kernel(xa, xb, params: KernelParams) -> float:
    """Topological-contrastive kernel on ``(embedding row, topological feature row)`` pairs."""
    return mixed_kernel(xa[0], xa[1], xb[0], xb[1], params)


def sammd_emb_kernel(xa, xb, params: KernelParams) -> float:
    """Semantic-aware kernel: ``q`` on the raw view, ``s`` on the deep view.

    Rows may be ``(raw, deep)`` pairs or a single array standing for both views.
    """
    ra, da = xa if isinstance(xa, tuple) else (xa, xa)
    rb, db = xb if isinstance(xb, tuple) else (xb, xb)
    return mixed_kernel(ra, da, rb, db, replace(params, method="SAMMD_EMB"))


def _sq_dists(A, B=None):
    if B is None:
        return cdist(A, A, "sqeuclidean")
    return cdist(A, B, "sqeuclidean")


def kernel_matrix(emb, feat, params: KernelParams, emb_b=None, feat_b=None) -> np.ndarray:
    nu = _gauss(_sq_dists(emb, emb_b), params.sigma_nu)
    if not params.uses_features:
        return nu
    tau = _gauss(_sq_dists(feat, feat_b), params.sigma_tc)
    return ((1 - params.eps0) * tau + params.eps0) * nu


def _kernel_matrix_grads(emb, feat, params):
    """Gram matrix and its derivatives in (log sigma_nu, log sigma_tc, logit eps0)."""
    Dn = _sq_dists(emb)
    nu = _gauss(Dn, params.sigma_nu)
    dnu = nu * Dn / params.sigma_nu**2
    if not params.uses_features:
        zero = np.zeros_like(nu)
        return nu, (dnu, zero, zero)
    Dt = _sq_dists(feat)
    tau = _gauss(Dt, params.sigma_tc)
    eps = params.eps0
    mix = (1 - eps) * tau + eps
    K = mix * nu
    dK_nu = mix * dnu
    dK_tc = (1 - eps) * tau * Dt / params.sigma_tc**2 * nu
    dK_eps = (1 - tau) * nu * eps * (1 - eps)
    return K, (dK_nu, dK_tc, dK_eps)


def _h_matrix(K, n):
    Kxy = K[:n, n:]
    return K[:n, :n] + K[n:, n:] - Kxy - Kxy.T


def _u_from_gram(K, n):
    H = _h_matrix(K, n)
    return float((H.sum() - np.trace(H)) / (n * (n - 1)))


def _check_pair(setX, setY):
    ex, fx = as_sample_set(setX, "X")
    ey, fy = as_sample_set(setY, "Y")
    n = ex.shape[0]
    if ey.shape[0] != n:
        raise InputValidationError(f"equal sample sizes required, got {n} and {ey.shape[0]}")
    if n < 2:
        raise InputValidationError("need at least 2 samples per set")
    if ex.shape[1] != ey.shape[1] or fx.shape[1] != fy.shape[1]:
        raise InputValidationError("X and Y differ in dimension")
    return np.vstack([ex, ey]), np.vstack([fx, fy]), n


def mmd_u_statistic(setX, setY, params: KernelParams) -> float:
    """Unbiased MMD^2 estimate ``1/(n(n-1)) sum_{i != j} H_ij``.

    ``H_ij = k(x_i, x_j) + k(y_i, y_j) - k(x_i, y_j) - k(y_i, x_j)``.
    """
    emb, feat, n = _check_pair(setX, setY)
    return _u_from_gram(kernel_matrix(emb, feat, params), n)


def _permutation_statistics(K, n, n_permutations, seed):
    stats = np.empty(n_permutations)
    for k in range(n_permutations):
        perm = np.random.default_rng([seed, k]).permutation(2 * n)
        stats[k] = _u_from_gram(K[np.ix_(perm, perm)], n)
    return stats


def permutation_test(setX, setY, params: KernelParams, n_permutations: int = 200, alpha: float = 0.05, seed: int = 0):
    """Permutation-calibrated MMD test.

    The threshold is the ``k``-th largest permuted statistic with
    ``k = floor(alpha * (n_permutations + 1))``; the test rejects when the
    observed statistic is strictly above it.
    """
    if n_permutations < 100:
        raise ParameterError(f"n_permutations must be >= 100, got {n_permutations}")
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    emb, feat, n = _check_pair(setX, setY)
    K = kernel_matrix(emb, feat, params)
    observed = _u_from_gram(K, n)
    null = _permutation_statistics(K, n, n_permutations, seed)
    k = math.floor(alpha * (n_permutations + 1))
    threshold = float(np.sort(null)[::-1][k - 1]) if k >= 1 else math.inf
    p_value = (1 + int(np.sum(null >= observed))) / (n_permutations + 1)
    return TestOutcome(
        statistic=observed,
        threshold=threshold,
        p_value=p_value,
        reject=bool(observed > threshold),
        n_permutations=n_permutations,
        seed=seed,
    )


VAR_REG = 1e-8


def power_criterion(K, n, dK=()):
    """``MMD^2 / sqrt(var + 1e-8)`` and its derivatives along each matrix in ``dK``."""
    H = _h_matrix(K, n)
    mmd2 = (H.sum() - np.trace(H)) / (n * (n - 1))
    r = H.sum(axis=1)
    var = 4 * (r @ r) / n**3 - 4 * r.sum() ** 2 / n**4
    s = math.sqrt(var + VAR_REG)
    J = mmd2 / s
    grads = []
    for dk in dK:
        dH = _h_matrix(dk, n)
        dmmd2 = (dH.sum() - np.trace(dH)) / (n * (n - 1))
        dr = dH.sum(axis=1)
        dvar = 8 * (r @ dr) / n**3 - 8 * r.sum() * dr.sum() / n**4
        grads.append(dmmd2 / s - mmd2 * dvar / (2 * s**3))
    return float(J), np.array(grads)


def _theta(params):
    return np.array([math.log(params.sigma_nu), math.log(params.sigma_tc), math.log(params.eps0 / (1 - params.eps0))])


def _from_theta(theta, method):
    theta = np.clip(theta, -30.0, 30.0)
    return KernelParams(
        eps0=float(1 / (1 + math.exp(-theta[2]))),
        sigma_nu=float(math.exp(theta[0])),
        sigma_tc=float(math.exp(theta[1])),
        method=method,
    )


def criterion(setX, setY, params: KernelParams):
    """Power criterion and its gradient in (log sigma_nu, log sigma_tc, logit eps0)."""
    emb, feat, n = _check_pair(setX, setY)
    K, dK = _kernel_matrix_grads(emb, feat, params)
    return power_criterion(K, n, dK)


def _ascend(emb, feat, n, params0: KernelParams, steps: int, lr: float):
    theta = _theta(params0)
    m = np.zeros(3)
    v = np.zeros(3)
    b1, b2 = 0.9, 0.999
    best_J, best = -math.inf, params0
    params = params0
    for t in range(1, steps + 2):
        K, dK = _kernel_matrix_grads(emb, feat, params)
        J, g = power_criterion(K, n, dK)
        if not (math.isfinite(J) and np.isfinite(g).all()):
            raise OptimizationError(f"non-finite criterion at step {t - 1}: J={J}, grad={g}, params={params}")
        if J > best_J:
            best_J, best = J, params
        if t == steps + 1:
            break
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g**2
        step = lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + 1e-12)
        theta = theta + step
        params = _from_theta(theta, params0.method)
    return best_J, best


def optimize_kernel(trainX, trainY, params0: KernelParams, steps: int = 100, lr: float = 0.05, bandwidth_scales=(1.0,)):
    """Gradient ascent (Adam) on the power criterion; returns the best parameters seen.

    ``trainX``/``trainY`` must be disjoint from any data later tested.
    With several ``bandwidth_scales`` the ascent is restarted from every
    combination of scaled ``sigma_nu`` and ``sigma_tc`` (only ``sigma_nu`` for
    the plain Gaussian) and the start reaching the highest criterion wins.
    """
    if steps < 0:
        raise ParameterError("steps must be >= 0")
    scales = [float(s) for s in bandwidth_scales]
    if not scales or min(scales) <= 0:
        raise ParameterError(f"bandwidth_scales must be positive, got {bandwidth_scales}")
    if steps == 0:
        return params0
    emb, feat, n = _check_pair(trainX, trainY)
    tc_scales = [1.0] if params0.method == "GAUSSIAN" else scales
    best_J, best = -math.inf, params0
    for s_nu in scales:
        for s_tc in tc_scales:
            start = replace(params0, sigma_nu=params0.sigma_nu * s_nu, sigma_tc=params0.sigma_tc * s_tc)
            J, params = _ascend(emb, feat, n, start, steps, lr)
            if J > best_J:
                best_J, best = J, params
    return best


def median_bandwidth(X) -> float:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] < 2:
        return 1.0
    med = float(np.median(pdist(X)))
    return med if med > 0 else 1.0


def initial_params(method: str, setX, setY, eps0: float = 0.1) -> KernelParams:
    """Median-heuristic bandwidths on the pooled training data."""
    ex, fx = as_sample_set(setX, "X")
    ey, fy = as_sample_set(setY, "Y")
    return KernelParams(
        eps0=eps0,
        sigma_nu=median_bandwidth(np.vstack([ex, ey])),
        sigma_tc=median_bandwidth(np.vstack([fx, fy])),
        method=method,
    )

"""Cluster-process model of classifier logits on a K-simplex.

Each of the ``K + 1`` clusters sits at a vertex ``v_i`` of a regular simplex.
A child point of cluster ``i`` is ``sum_j lam_j v_j`` with ``lam`` drawn from
a Dirichlet whose ``i``-th concentration is ``alpha_large`` and all others are
``alpha_small``. The model is parameterized by ``alpha_small`` and
``ratio = alpha_total / alpha_small``, so that

    alpha_total = alpha_small * ratio,  alpha_large = alpha_small * (ratio - K).

Cluster sizes are fixed counts, not Poisson draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import digamma, gammaln, polygamma

from .exceptions import ConvergenceError, InputValidationError, ParameterError
from .persistence import _prim_mst
from .pointcloud import pairwise_distances


@dataclass(frozen=True)
class PcpParams:
    K: int
    alpha_small: float
    ratio: float
    points_per_cluster: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ParameterError(f"K must be an integer >= 1, got {self.K}")
        if not self.alpha_small > 0:
            raise ParameterError(f"alpha_small must be > 0, got {self.alpha_small}")
        if not self.ratio > self.K:
            raise ParameterError(
                f"ratio must exceed K={self.K} (alpha_large = alpha_small * (ratio - K) must be > 0), got {self.ratio}"
            )
        counts = tuple(int(c) for c in self.points_per_cluster)
        if counts and (len(counts) != self.K + 1 or min(counts) < 0):
            raise ParameterError(f"points_per_cluster needs K+1={self.K + 1} nonnegative counts, got {counts}")
        object.__setattr__(self, "points_per_cluster", counts)

    @classmethod
    def even(cls, K, alpha_small, ratio, n_points, seed=0):
        """Split ``n_points`` as evenly as possible over the ``K + 1`` clusters."""
        base, extra = divmod(int(n_points), K + 1)
        counts = tuple(base + (1 if i < extra else 0) for i in range(K + 1))
        return cls(K=K, alpha_small=alpha_small, ratio=ratio, points_per_cluster=counts, seed=seed)

    @property
    def alpha_total(self) -> float:
        return self.alpha_small * self.ratio

    @property
    def alpha_large(self) -> float:
        return self.alpha_small * (self.ratio - self.K)

    def concentration(self, cluster: int) -> np.ndarray:
        alpha = np.full(self.K + 1, float(self.alpha_small))
        alpha[cluster] = self.alpha_large
        return alpha

    def moments(self):
        """Closed-form mean and variance of the own-vertex and off-vertex weights of one cluster."""
        a0 = self.alpha_total
        big, small = self.alpha_large / a0, self.alpha_small / a0
        return {
            "mean_large": big,
            "mean_small": small,
            "var_large": big * (1 - big) / (a0 + 1),
            "var_small": small * (1 - small) / (a0 + 1),
        }


@dataclass(frozen=True, eq=False)
class Simplex:
    vertices: np.ndarray

    @property
    def K(self) -> int:
        return self.vertices.shape[1]


def standard_simplex(K: int) -> Simplex:
    """Regular simplex with unit edges in R^K.

    The scaled basis vectors ``e_i / sqrt(2)`` of R^{K+1} are expressed in the
    Helmert basis of the hyperplane orthogonal to the all-ones vector.
    """
    if int(K) != K or K < 1:
        raise InputValidationError(f"K must be an integer >= 1, got {K}")
    K = int(K)
    helmert = np.zeros((K, K + 1))
    for k in range(1, K + 1):
        helmert[k - 1, :k] = 1.0
        helmert[k - 1, k] = -k
        helmert[k - 1] /= math.sqrt(k * (k + 1))
    return Simplex(vertices=(np.eye(K + 1) / math.sqrt(2)) @ helmert.T)


@dataclass(frozen=True, eq=False)
class PcpSample:
    points: np.ndarray
    labels: np.ndarray
    barycentric: np.ndarray


def sample_pcp(params: PcpParams, simplex: Simplex | None = None) -> PcpSample:
    """Draw every cluster's children. Cluster ``i`` uses the substream ``(seed, i)``."""
    simplex = simplex or standard_simplex(params.K)
    if simplex.vertices.shape != (params.K + 1, params.K):
        raise ParameterError(f"simplex shape {simplex.vertices.shape} does not match K={params.K}")
    lams, labels = [], []
    for i, count in enumerate(params.points_per_cluster):
        rng = np.random.default_rng([params.seed, i])
        lams.append(rng.dirichlet(params.concentration(i), size=count))
        labels.append(np.full(count, i, dtype=np.int64))
    lam = np.vstack(lams) if lams else np.empty((0, params.K + 1))
    return PcpSample(points=lam @ simplex.vertices, labels=np.concatenate(labels or [[]]).astype(np.int64), barycentric=lam)


def mst_length(points) -> float:
    if len(points) < 2:
        return 0.0
    lengths, _ = _prim_mst(pairwise_distances(points))
    return math.fsum(lengths.tolist())


@dataclass(frozen=True, eq=False)
class MstStudy:
    rows: list = field(default_factory=list)
    samples: dict = field(default_factory=dict)

    HEADER = ("alpha_small", "ratio", "mean_mst", "std_mst", "reps")


def mst_length_study(alpha_smalls, ratios, n_points: int, K: int, reps: int, seed: int = 0) -> MstStudy:
    """Monte Carlo mean and standard deviation of the MST length over a parameter grid.

    Replicate ``r`` of cell ``c`` is seeded by ``(seed, c, r)``. The standard
    deviation uses ``ddof=1``.
    """
    if reps < 2:
        raise ParameterError("reps must be >= 2")
    simplex = standard_simplex(K)
    rows, samples = [], {}
    for c, (a, r) in enumerate((a, r) for a in alpha_smalls for r in ratios):
        lengths = np.empty(reps)
        for rep in range(reps):
            p = PcpParams.even(K, a, r, n_points, seed=_subseed(seed, c, rep))
            lengths[rep] = mst_length(sample_pcp(p, simplex).points)
        samples[(float(a), float(r))] = lengths
        rows.append((float(a), float(r), float(lengths.mean()), float(lengths.std(ddof=1)), reps))
    return MstStudy(rows=rows, samples=samples)


def _subseed(seed, *keys) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def _inverse_digamma(y, iters=8):
    # Newton's method with Minka's initialization
    x = np.where(y >= -2.22, np.exp(y) + 0.5, -1.0 / (y - digamma(1.0)))
    for _ in range(iters):
        x = x - (digamma(x) - y) / polygamma(1, x)
    return x


def _check_simplex_rows(samples):
    lam = np.asarray(samples, dtype=np.float64)
    if lam.ndim != 2 or lam.shape[1] < 2:
        raise InputValidationError(f"samples must be an (m, K+1) matrix with K >= 1, got shape {lam.shape}")
    if not np.isfinite(lam).all() or (lam < 0).any():
        raise InputValidationError("samples must be finite and nonnegative")
    off = np.abs(lam.sum(axis=1) - 1)
    if (off > 1e-6).any():
        raise InputValidationError(f"row {int(np.argmax(off))} does not sum to 1 (off by {off.max():.3g})")
    if lam.shape[0] < lam.shape[1] + 1:
        raise InputValidationError(f"need at least K+2={lam.shape[1] + 1} rows, got {lam.shape[0]}")
    return np.clip(lam, 1e-10, None)


def dirichlet_log_likelihood(alpha, mean_log) -> float:
    """Average Dirichlet log-likelihood given the per-component mean of ``log lam``."""
    return float(gammaln(alpha.sum()) - gammaln(alpha).sum() + ((alpha - 1) * mean_log).sum())


@dataclass(frozen=True, eq=False)
class DirichletFit:
    alpha: np.ndarray
    log_likelihood: list
    n_iter: int
    grad_norm: float


def dirichlet_mle(samples, max_iter: int = 1000, tol: float = 1e-8) -> DirichletFit:
    """Maximum-likelihood Dirichlet concentrations by Minka's fixed-point iteration.

    Starts from moment matching; stops when the per-sample gradient norm drops
    below ``tol``. Each iteration maximizes a lower bound of the likelihood, so
    the recorded log-likelihood never decreases.
    """
    lam = _check_simplex_rows(samples)
    mean_log = np.log(lam).mean(axis=0)

    m = lam.mean(axis=0)
    v = lam.var(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = m * (1 - m) / v - 1
    precision = precision[np.isfinite(precision) & (precision > 0)]
    alpha = m * (float(np.median(precision)) if precision.size else 1.0)

    history = [dirichlet_log_likelihood(alpha, mean_log)]
    for it in range(1, max_iter + 1):
        grad = digamma(alpha.sum()) - digamma(alpha) + mean_log
        gnorm = float(np.linalg.norm(grad))
        if gnorm < tol:
            return DirichletFit(alpha=alpha, log_likelihood=history, n_iter=it - 1, grad_norm=gnorm)
        alpha = _inverse_digamma(digamma(alpha.sum()) + mean_log)
        history.append(dirichlet_log_likelihood(alpha, mean_log))
    grad = digamma(alpha.sum()) - digamma(alpha) + mean_log
    gnorm = float(np.linalg.norm(grad))
    if gnorm < tol:
        return DirichletFit(alpha=alpha, log_likelihood=history, n_iter=max_iter, grad_norm=gnorm)
    raise ConvergenceError(f"no convergence after {max_iter} iterations (gradient norm {gnorm:.3g})", last_iterate=alpha)

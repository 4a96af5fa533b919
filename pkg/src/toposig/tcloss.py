"""Topological-contrastive losses between two persistence diagrams.

Two flavours: the difference of alpha-total persistence summed over homology
dimensions (``TP``), and the multi-scale heat kernel between diagrams summed
over dimensions (``MK``). Essential classes never enter either sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionCoverageError, NumericalError, ParameterError
from .persistence import PersistenceDiagram

METHODS = ("TP", "MK")


@dataclass(frozen=True)
class TCParams:
    method: str = "TP"
    alpha: float = 1.0
    sigma: float = 1.0
    max_dim: int = 1

    def __post_init__(self):
        method = self.method.upper()
        object.__setattr__(self, "method", method)
        if method not in METHODS:
            raise ParameterError(f"method must be TP or MK, got {self.method!r}")
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be > 0, got {self.alpha}")
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        if int(self.max_dim) != self.max_dim or self.max_dim < 0:
            raise ParameterError(f"max_dim must be a nonnegative integer, got {self.max_dim}")


def total_persistence(diagram: PersistenceDiagram, dim: int, alpha: float = 1.0) -> float:
    """Sum of ``(death - birth) ** alpha`` over the finite pairs of one dimension."""
    if dim > diagram.max_dim:
        raise DimensionCoverageError(f"diagram only covers dimensions <= {diagram.max_dim}, asked for {dim}")
    b, d, _, _ = diagram.finite(dim)
    return math.fsum(((d - b) ** alpha).tolist())


def _check_coverage(diagX, diagY, max_dim):
    if diagX.max_dim < max_dim or diagY.max_dim < max_dim:
        raise DimensionCoverageError(
            f"loss over dimensions <= {max_dim} needs diagrams computed that far "
            f"(got {diagX.max_dim} and {diagY.max_dim})"
        )


def tp_loss(diagX: PersistenceDiagram, diagY: PersistenceDiagram, params: TCParams) -> float:
    _check_coverage(diagX, diagY, params.max_dim)
    return math.fsum(
        abs(total_persistence(diagX, i, params.alpha) - total_persistence(diagY, i, params.alpha))
        for i in range(params.max_dim + 1)
    )


def heat_kernel_points(P: np.ndarray, Q: np.ndarray, sigma: float) -> float:
    """Multi-scale kernel between two finite point sets in the (birth, death) plane."""
    if not sigma > 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    if P.shape[0] == 0 or Q.shape[0] == 0:
        return 0.0
    Qbar = Q[:, ::-1]
    direct = ((P[:, None, :] - Q[None, :, :]) ** 2).sum(-1)
    mirror = ((P[:, None, :] - Qbar[None, :, :]) ** 2).sum(-1)
    terms = np.exp(-direct / (8 * sigma)) - np.exp(-mirror / (8 * sigma))
    return float(terms.sum() / (8 * math.pi * sigma))


def multiscale_kernel(diagX: PersistenceDiagram, diagY: PersistenceDiagram, dim: int, sigma: float) -> float:
    if dim > diagX.max_dim or dim > diagY.max_dim:
        raise DimensionCoverageError(f"dimension {dim} not covered by both diagrams")
    return heat_kernel_points(diagX.points(dim), diagY.points(dim), sigma)


def mk_loss(diagX: PersistenceDiagram, diagY: PersistenceDiagram, params: TCParams) -> float:
    _check_coverage(diagX, diagY, params.max_dim)
    terms = [multiscale_kernel(diagX, diagY, i, params.sigma) for i in range(params.max_dim + 1)]
    for i, t in enumerate(terms):
        # each term is an inner product of two nonnegative feature functions
        if t < -1e-9:
            raise NumericalError(f"multi-scale kernel in dimension {i} is negative ({t})")
    return math.fsum(terms)


def tc_loss(diagX: PersistenceDiagram, diagY: PersistenceDiagram, params: TCParams) -> float:
    return tp_loss(diagX, diagY, params) if params.method == "TP" else mk_loss(diagX, diagY, params)


def median_sigma(*diagrams: PersistenceDiagram, max_dim: int = 0) -> float:
    """Median heuristic for the kernel scale: median squared distance between diagram points, over 8."""
    pts = [dg.points(k) for dg in diagrams for k in range(min(max_dim, dg.max_dim) + 1)]
    pts = np.vstack(pts) if pts else np.empty((0, 2))
    if pts.shape[0] < 2:
        return 1.0
    sq = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)[np.triu_indices(pts.shape[0], 1)]
    med = float(np.median(sq)) / 8
    return med if med > 0 else 1.0

"""Gradients of the topological-contrastive losses with respect to point coordinates.

Every finite persistence pair has a birth and a death equal to the length of a
recorded edge, so the loss is a function of a handful of pairwise distances.
Reverse-mode accumulation is therefore a sparse sum over those edges, done here
by hand rather than through an autodiff framework.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateConfigurationError, InputValidationError
from .persistence import PersistenceDiagram, vr_persistence
from .pointcloud import check_cloud, pairwise_distances
from .tcloss import TCParams, tc_loss, total_persistence


@dataclass(frozen=True, eq=False)
class TopoFeatures:
    grads: np.ndarray
    batch_rows: np.ndarray
    method: str


def _accumulate_edges(points, edges, weights, out):
    """Add ``weights[k] * d|x_i - x_j| / dx`` for every edge ``k = (i, j)`` into ``out``."""
    active = weights != 0
    if not active.any():
        return
    edges, weights = edges[active], weights[active]
    i, j = edges[:, 0], edges[:, 1]
    diff = points[i] - points[j]
    length = np.sqrt((diff**2).sum(axis=1))
    zero = length == 0
    if zero.any():
        k = int(np.flatnonzero(zero)[0])
        raise DegenerateConfigurationError(i[k], j[k])
    contrib = (weights / length)[:, None] * diff
    np.add.at(out, i, contrib)
    np.add.at(out, j, -contrib)


def _tp_edge_weights(diagX, diagT, params):
    for dim in range(params.max_dim + 1):
        b, d, be, de = diagX.finite(dim)
        gap = total_persistence(diagX, dim, params.alpha) - total_persistence(diagT, dim, params.alpha)
        sign = float(np.sign(gap))
        if sign == 0 or b.size == 0:
            continue
        w = sign * params.alpha * (d - b) ** (params.alpha - 1)
        yield de, w
        if dim > 0:
            yield be, -w


def _mk_edge_weights(diagX, diagT, params):
    sigma = params.sigma
    c = 1.0 / (8 * math.pi * sigma)
    for dim in range(params.max_dim + 1):
        b, d, be, de = diagX.finite(dim)
        Q = diagT.points(dim)
        if b.size == 0 or Q.shape[0] == 0:
            continue
        P = np.column_stack([b, d])
        dq = P[:, None, :] - Q[None, :, :]
        dm = P[:, None, :] - Q[None, :, ::-1]
        e1 = np.exp(-(dq**2).sum(-1) / (8 * sigma))[..., None]
        e2 = np.exp(-(dm**2).sum(-1) / (8 * sigma))[..., None]
        g = c * ((-dq * e1 + dm * e2) / (4 * sigma)).sum(axis=1)
        yield de, g[:, 1]
        if dim > 0:
            yield be, g[:, 0]


def tc_loss_and_gradient(points, diagramT: PersistenceDiagram, params: TCParams, diagramX=None):
    """Loss ``L_TC(X, T)`` and its (sub)gradient with respect to the rows of ``X``.

    ``T`` is a constant. Where the outer absolute value of the TP loss sits at
    zero, the subgradient 0 is used.
    """
    points = check_cloud(points, "X")
    if diagramX is None:
        diagramX = vr_persistence(pairwise_distances(points), max_dim=params.max_dim)
    loss = tc_loss(diagramX, diagramT, params)
    grad = np.zeros_like(points)
    weights = _tp_edge_weights if params.method == "TP" else _mk_edge_weights
    for edges, w in weights(diagramX, diagramT, params):
        _accumulate_edges(points, edges, w, grad)
    return loss, grad


def tc_gradient(points, diagramT: PersistenceDiagram, params: TCParams) -> np.ndarray:
    return tc_loss_and_gradient(points, diagramT, params)[1]


def _text_diagram(text, params, text_diagram):
    if text_diagram is not None:
        return text_diagram
    text = check_cloud(text, "T")
    return vr_persistence(pairwise_distances(text), max_dim=params.max_dim)


def batch_features(batchY, holdoutZ, textT, params: TCParams, text_diagram=None) -> TopoFeatures:
    """Gradient of ``L_TC(Y u Z, T)`` restricted to the rows of ``Y``.

    One filtration covers the whole batch together with the hold-out set.
    ``text_diagram`` may be passed to reuse a diagram of ``T`` across calls.
    """
    Y = check_cloud(batchY, "Y")
    Z = check_cloud(holdoutZ, "Z")
    if Y.shape[1] != Z.shape[1]:
        raise InputValidationError(f"Y and Z differ in dimension ({Y.shape[1]} vs {Z.shape[1]})")
    diagT = _text_diagram(textT, params, text_diagram)
    _, grad = tc_loss_and_gradient(np.vstack([Y, Z]), diagT, params)
    return TopoFeatures(grads=grad[: Y.shape[0]], batch_rows=np.arange(Y.shape[0]), method=params.method)


def exact_features(batchY, holdoutZ, textT, params: TCParams, text_diagram=None) -> TopoFeatures:
    """Per-sample gradients: row ``i`` differentiates ``L_TC({y_i} u Z, T)`` in ``y_i``."""
    Y = check_cloud(batchY, "Y")
    Z = check_cloud(holdoutZ, "Z")
    if Y.shape[1] != Z.shape[1]:
        raise InputValidationError(f"Y and Z differ in dimension ({Y.shape[1]} vs {Z.shape[1]})")
    diagT = _text_diagram(textT, params, text_diagram)
    rows = [tc_loss_and_gradient(np.vstack([y[None, :], Z]), diagT, params)[1][0] for y in Y]
    return TopoFeatures(grads=np.vstack(rows), batch_rows=np.arange(Y.shape[0]), method=params.method)

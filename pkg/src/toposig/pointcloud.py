"""Point clouds, distance matrices and the edge order of the Rips filtration."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .exceptions import InputValidationError


def check_cloud(points, name: str = "cloud") -> np.ndarray:
    """Validate a point cloud and return it as a C-contiguous float64 array.

    A 1-D input is read as ``n`` points on a line. Row order is preserved.
    """
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputValidationError(f"{name} must be an n x d matrix, got shape {arr.shape}")
    n, d = arr.shape
    if n < 1 or d < 1:
        raise InputValidationError(f"{name} must have n >= 1 and d >= 1, got shape {arr.shape}")
    finite = np.isfinite(arr).all(axis=1)
    if not finite.all():
        row = int(np.flatnonzero(~finite)[0])
        raise InputValidationError(f"{name} has a non-finite coordinate in row {row}")
    return np.ascontiguousarray(arr)


def l2_normalize(points: np.ndarray) -> np.ndarray:
    points = check_cloud(points)
    norms = np.linalg.norm(points, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise InputValidationError("cannot L2-normalize a zero row")
    return points / norms


def pairwise_distances(points) -> np.ndarray:
    """Dense n x n Euclidean distance matrix in double precision.

    Exactly symmetric with a zero diagonal (each unordered pair is computed
    once).
    """
    points = check_cloud(points)
    if points.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(points, metric="euclidean"))


def check_distance_matrix(dist) -> np.ndarray:
    dist = np.asarray(dist, dtype=np.float64)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1] or dist.shape[0] < 1:
        raise InputValidationError(f"distance matrix must be square, got shape {dist.shape}")
    if not np.isfinite(dist).all():
        raise InputValidationError("distance matrix has non-finite entries")
    if np.any(np.diag(dist) != 0) or np.any(dist < 0) or not np.array_equal(dist, dist.T):
        raise InputValidationError("distance matrix must be symmetric, nonnegative, zero on the diagonal")
    return dist


def sorted_edges(dist) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All pairs ``i < j`` sorted by length, ties broken by ``(i, j)``.

    Returns ``(lengths, i, j)`` as parallel arrays.
    """
    dist = np.asarray(dist, dtype=np.float64)
    rows, cols = np.triu_indices(dist.shape[0], k=1)
    lengths = dist[rows, cols]
    order = np.lexsort((cols, rows, lengths))
    return lengths[order], rows[order], cols[order]


def edge_ranks(dist) -> np.ndarray:
    """n x n matrix holding each edge's position in the filtration order (-1 on the diagonal)."""
    n = dist.shape[0]
    _, rows, cols = sorted_edges(dist)
    ranks = np.full((n, n), -1, dtype=np.int64)
    idx = np.arange(rows.size)
    ranks[rows, cols] = idx
    ranks[cols, rows] = idx
    return ranks

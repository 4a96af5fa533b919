"""Vietoris-Rips persistence with critical edges.

The filtration is run up to the diameter of the cloud, where the complex is a
full simplex: every class of dimension >= 1 has died and a single essential
component is left. Every finite pair remembers the edge whose length equals its
birth and death, which is what makes the diagram differentiable with respect to
the point coordinates (see :mod:`toposig.grad`).

Edges are totally ordered by ``(length, i, j)``; simplices of higher dimension
by ``(filtration value, vertex tuple)``. With that order the output is
deterministic even with tied distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .exceptions import UnsupportedDimensionError
from .pointcloud import check_distance_matrix, edge_ranks, sorted_edges

ESSENTIAL = math.inf
SUPPORTED_DIMS = (0, 1, 2)


@dataclass(frozen=True)
class PersistencePair:
    dim: int
    birth: float
    death: float
    birth_edge: Optional[tuple[int, int]] = None
    death_edge: Optional[tuple[int, int]] = None

    @property
    def is_essential(self) -> bool:
        return math.isinf(self.death)


@dataclass(frozen=True, eq=False)
class PersistenceDiagram:
    """Birth-death pairs per homology dimension.

    Stored column-wise: ``births[k]``, ``deaths[k]`` are float arrays for
    dimension ``k`` and ``birth_edges[k]``, ``death_edges[k]`` are ``(m, 2)``
    integer arrays with ``-1`` marking an absent edge. Essential classes have
    ``death == inf``.
    """

    max_dim: int
    n_points: int
    births: tuple
    deaths: tuple
    birth_edges: tuple
    death_edges: tuple

    @property
    def pairs(self) -> list[PersistencePair]:
        out = []
        for k in range(self.max_dim + 1):
            for b, d, be, de in zip(self.births[k], self.deaths[k], self.birth_edges[k], self.death_edges[k]):
                out.append(
                    PersistencePair(
                        dim=k,
                        birth=float(b),
                        death=float(d),
                        birth_edge=None if be[0] < 0 else (int(be[0]), int(be[1])),
                        death_edge=None if de[0] < 0 else (int(de[0]), int(de[1])),
                    )
                )
        return out

    def finite(self, dim: int):
        """``(births, deaths, birth_edges, death_edges)`` of the finite pairs in ``dim``."""
        if dim > self.max_dim:
            empty = np.empty(0)
            edges = np.empty((0, 2), dtype=np.int64)
            return empty, empty, edges, edges
        keep = np.isfinite(self.deaths[dim])
        return (
            self.births[dim][keep],
            self.deaths[dim][keep],
            self.birth_edges[dim][keep],
            self.death_edges[dim][keep],
        )

    def points(self, dim: int) -> np.ndarray:
        """Finite pairs of ``dim`` as an ``(m, 2)`` array of (birth, death)."""
        b, d, _, _ = self.finite(dim)
        return np.column_stack([b, d]) if b.size else np.empty((0, 2))

    def __len__(self) -> int:
        return sum(len(b) for b in self.births)


def _prim_mst(dist: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Prim under the strict total order (length, min(u, v), max(u, v)); the MST
    # for a strict order is unique, so this matches Kruskal with the same
    # tie-break edge for edge.
    n = dist.shape[0]
    idx = np.arange(n)
    outside = np.ones(n, dtype=bool)
    outside[0] = False
    best = dist[0].copy()
    src = np.zeros(n, dtype=np.int64)
    best[0] = np.inf
    lengths = np.empty(n - 1)
    edges = np.empty((n - 1, 2), dtype=np.int64)
    for t in range(n - 1):
        m = best.min()
        ties = np.flatnonzero(best == m)
        if ties.size > 1:
            lo = np.minimum(ties, src[ties])
            hi = np.maximum(ties, src[ties])
            v = ties[np.lexsort((hi, lo))[0]]
        else:
            v = ties[0]
        u = src[v]
        lengths[t] = m
        edges[t] = (min(u, v), max(u, v))
        outside[v] = False
        best[v] = np.inf
        row = dist[v]
        lo_new, hi_new = np.minimum(idx, v), np.maximum(idx, v)
        lo_old, hi_old = np.minimum(idx, src), np.maximum(idx, src)
        better = (row < best) | (
            (row == best) & ((lo_new < lo_old) | ((lo_new == lo_old) & (hi_new < hi_old)))
        )
        better &= outside
        best[better] = row[better]
        src[better] = v
    order = np.lexsort((edges[:, 1], edges[:, 0], lengths))
    return lengths[order], edges[order]


def mst_h0(dist) -> tuple[float, list[tuple[float, int, int]]]:
    """Kruskal minimum spanning tree with union-find.

    Returns the total length and the tree edges ``(length, i, j)`` in ascending
    filtration order. Under the elder rule the component holding the smaller
    vertex index survives each merge.
    """
    dist = check_distance_matrix(dist)
    n = dist.shape[0]
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    tree = []
    if n > 1:
        lengths, rows, cols = sorted_edges(dist)
        for length, i, j in zip(lengths.tolist(), rows.tolist(), cols.tolist()):
            ri, rj = find(i), find(j)
            if ri == rj:
                continue
            if ri < rj:
                parent[rj] = ri
            else:
                parent[ri] = rj
            tree.append((length, i, j))
            if len(tree) == n - 1:
                break
    return math.fsum(e[0] for e in tree), tree


def _simplices(n: int, size: int) -> np.ndarray:
    if n < size:
        return np.empty((0, size), dtype=np.int64)
    return np.fromiter(
        (v for s in combinations(range(n), size) for v in s), dtype=np.int64, count=math.comb(n, size) * size
    ).reshape(-1, size)


def _ordered_simplices(dist, ranks, size):
    """Simplices of ``size`` vertices in filtration order, with their value and maximal edge."""
    simp = _simplices(dist.shape[0], size)
    if simp.shape[0] == 0:
        return simp, np.empty(0), np.empty(0, dtype=np.int64)
    face_pairs = list(combinations(range(size), 2))
    er = np.column_stack([ranks[simp[:, a], simp[:, b]] for a, b in face_pairs])
    top = er.max(axis=1)
    value = np.column_stack([dist[simp[:, a], simp[:, b]] for a, b in face_pairs]).max(axis=1)
    keys = [simp[:, c] for c in reversed(range(size))] + [value]
    order = np.lexsort(keys)
    return simp[order], value[order], top[order]


def _reduce(columns, expected, skip=frozenset()):
    """GF(2) column reduction; columns are ints used as bitsets over face positions.

    Returns ``{pivot_row: column_position}``. Stops once ``expected`` pivots are
    found, since the complex at the diameter is acyclic and no later column can
    create a new pair.
    """
    reduced = {}
    owner = {}
    if expected == 0:
        return owner
    for pos, col in enumerate(columns):
        if pos in skip:
            continue
        while col:
            low = col.bit_length() - 1
            other = reduced.get(low)
            if other is None:
                reduced[low] = col
                owner[low] = pos
                break
            col ^= other
        if len(owner) == expected:
            break
    return owner


def _faces_bitsets(simp, face_index):
    size = simp.shape[1]
    face_cols = [face_index(np.delete(simp, k, axis=1)) for k in range(size)]
    stacked = np.column_stack(face_cols).tolist()
    return [sum(1 << f for f in row) for row in stacked]


def vr_persistence(dist, max_dim: int = 1) -> PersistenceDiagram:
    """Persistence diagram of the Vietoris-Rips filtration of a distance matrix.

    Dimension 0 comes from the minimum spanning tree (each tree edge kills one
    component); dimensions 1 and 2 from boundary-matrix reduction over GF(2)
    with clearing. Pairs of dimension >= 1 with zero persistence are dropped.
    """
    if max_dim not in SUPPORTED_DIMS:
        raise UnsupportedDimensionError(f"max_dim must be one of {SUPPORTED_DIMS}, got {max_dim}")
    dist = check_distance_matrix(dist)
    n = dist.shape[0]

    births, deaths, bedges, dedges = [], [], [], []
    if n > 1:
        lengths, tree = _prim_mst(dist)
    else:
        lengths, tree = np.empty(0), np.empty((0, 2), dtype=np.int64)
    births.append(np.zeros(n))
    deaths.append(np.append(lengths, ESSENTIAL))
    bedges.append(np.full((n, 2), -1, dtype=np.int64))
    dedges.append(np.vstack([tree, [[-1, -1]]]).astype(np.int64))

    if max_dim >= 1:
        ranks = edge_ranks(dist)
        elen, erow, ecol = sorted_edges(dist)
        edge_pairs = np.column_stack([erow, ecol])
        tri, tval, ttop = _ordered_simplices(dist, ranks, 3)
        n_edges, n_tri = elen.size, tri.shape[0]
        tri_cols = _faces_bitsets(tri, lambda f: ranks[f[:, 0], f[:, 1]])

        cleared = frozenset()
        tet_owner = {}
        if max_dim >= 2:
            tet, tetval, tettop = _ordered_simplices(dist, ranks, 4)
            tri_pos = {tuple(s): p for p, s in enumerate(tri.tolist())}
            tet_cols = _faces_bitsets(tet, lambda f: np.array([tri_pos[tuple(s)] for s in f.tolist()], dtype=np.int64))
            positive_tri = n_tri - (n_edges - (n - 1))
            tet_owner = _reduce(tet_cols, positive_tri)
            cleared = frozenset(tet_owner)

        tri_owner = _reduce(tri_cols, n_edges - (n - 1), skip=cleared)

        # dimension 1: (edge, triangle) pairs
        rows = sorted(tri_owner)
        b = elen[rows] if rows else np.empty(0)
        cols = [tri_owner[r] for r in rows]
        d = tval[cols] if cols else np.empty(0)
        be = edge_pairs[rows] if rows else np.empty((0, 2), dtype=np.int64)
        de = edge_pairs[ttop[cols]] if cols else np.empty((0, 2), dtype=np.int64)
        _append_nonzero(births, deaths, bedges, dedges, b, d, be, de)

        if max_dim >= 2:
            rows = sorted(tet_owner)
            cols = [tet_owner[r] for r in rows]
            b = tval[rows] if rows else np.empty(0)
            d = tetval[cols] if cols else np.empty(0)
            be = edge_pairs[ttop[rows]] if rows else np.empty((0, 2), dtype=np.int64)
            de = edge_pairs[tettop[cols]] if cols else np.empty((0, 2), dtype=np.int64)
            _append_nonzero(births, deaths, bedges, dedges, b, d, be, de)

    return PersistenceDiagram(
        max_dim=max_dim,
        n_points=n,
        births=tuple(births),
        deaths=tuple(deaths),
        birth_edges=tuple(bedges),
        death_edges=tuple(dedges),
    )


def _append_nonzero(births, deaths, bedges, dedges, b, d, be, de):
    keep = d > b
    order = np.lexsort((d[keep], b[keep])) if keep.any() else np.empty(0, dtype=np.int64)
    births.append(b[keep][order])
    deaths.append(d[keep][order])
    bedges.append(be[keep][order].reshape(-1, 2))
    dedges.append(de[keep][order].reshape(-1, 2))


def diagram_of(points, max_dim: int = 1) -> PersistenceDiagram:
    """Shortcut: distances then persistence."""
    from .pointcloud import pairwise_distances

    return vr_persistence(pairwise_distances(points), max_dim=max_dim)

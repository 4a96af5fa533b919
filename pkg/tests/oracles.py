"""Slow reference implementations, kept independent of the package internals."""

import math
from itertools import combinations

import numpy as np


def naive_distances(points):
    points = np.asarray(points, dtype=float)
    n = len(points)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = math.sqrt(sum((a - b) ** 2 for a, b in zip(points[i], points[j])))
    return out


def brute_force_diagram(dist, max_dim):
    """Multiset of (dim, birth, death) from one dense boundary matrix of the whole complex.

    Every simplex up to dimension ``max_dim + 1`` goes into a single matrix,
    ordered by (value, dimension, vertex tuple), and reduced by the textbook
    left-to-right algorithm with no clearing or shortcuts. Pairs of dimension
    >= 1 with zero persistence are dropped, matching the library convention.
    """
    n = dist.shape[0]
    simplices = []
    for size in range(1, max_dim + 3):
        for s in combinations(range(n), size):
            value = max((dist[a, b] for a, b in combinations(s, 2)), default=0.0)
            simplices.append((value, size - 1, s))
    simplices.sort()
    index = {s: k for k, (_, _, s) in enumerate(simplices)}
    m = len(simplices)
    D = np.zeros((m, m), dtype=bool)
    for k, (_, dim, s) in enumerate(simplices):
        if dim > 0:
            for face in combinations(s, dim):
                D[index[face], k] = True
    low_of = {}
    lows = [-1] * m
    for j in range(m):
        while D[:, j].any():
            low = int(np.flatnonzero(D[:, j])[-1])
            if low in low_of:
                D[:, j] ^= D[:, low_of[low]]
            else:
                low_of[low] = j
                lows[j] = low
                break
    out = []
    paired = set()
    for j, low in enumerate(lows):
        if low < 0:
            continue
        paired.add(low)
        paired.add(j)
        bval, bdim, _ = simplices[low]
        dval = simplices[j][0]
        if bdim <= max_dim and (bdim == 0 or dval > bval):
            out.append((bdim, bval, dval))
    for k, (val, dim, _) in enumerate(simplices):
        if k not in paired and lows[k] < 0 and dim <= max_dim:
            if not D[:, k].any():
                out.append((dim, val, math.inf))
    return sorted(out)


def kruskal_by_hand(dist):
    n = dist.shape[0]
    comp = list(range(n))
    total = 0.0
    edges = sorted((dist[i, j], i, j) for i in range(n) for j in range(i + 1, n))
    for w, i, j in edges:
        if comp[i] != comp[j]:
            old, new = comp[j], comp[i]
            comp = [new if c == old else c for c in comp]
            total += w
    return total


def central_difference(f, x, h=1e-4):
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
    return g


def min_distance_gap(points):
    d = naive_distances(points)
    vals = np.sort(d[np.triu_indices(len(points), 1)])
    return np.min(np.diff(vals)) if vals.size > 1 else np.inf


def generic_cloud(rng, n, d, gap=1e-3, scale=1.0):
    while True:
        pts = rng.normal(size=(n, d)) * scale
        if min_distance_gap(pts) > gap:
            return pts


def mk_double_loop(P, Q, sigma):
    total = 0.0
    for b1, d1 in P:
        for b2, d2 in Q:
            direct = (b1 - b2) ** 2 + (d1 - d2) ** 2
            mirror = (b1 - d2) ** 2 + (d1 - b2) ** 2
            total += math.exp(-direct / (8 * sigma)) - math.exp(-mirror / (8 * sigma))
    return total / (8 * math.pi * sigma)

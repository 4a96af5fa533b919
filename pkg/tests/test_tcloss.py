import math

import numpy as np
import pytest

from oracles import brute_force_diagram, mk_double_loop
from toposig.exceptions import DimensionCoverageError, ParameterError
from toposig.persistence import diagram_of, vr_persistence
from toposig.pointcloud import pairwise_distances
from toposig.tcloss import (
    TCParams,
    heat_kernel_points,
    median_sigma,
    mk_loss,
    multiscale_kernel,
    total_persistence,
    tp_loss,
)

LINE = [[0.0], [3.0], [7.0]]


def test_total_persistence_is_mst_length():
    dg = diagram_of(LINE, 0)
    assert total_persistence(dg, 0, 1.0) == 7.0


def test_total_persistence_alpha_two():
    assert total_persistence(diagram_of(LINE, 0), 0, 2.0) == 25.0


def test_total_persistence_of_empty_dimension():
    assert total_persistence(diagram_of(LINE, 1), 1, 1.0) == 0.0


def test_total_persistence_needs_coverage():
    with pytest.raises(DimensionCoverageError):
        total_persistence(diagram_of(LINE, 0), 1, 1.0)


def test_tp_identity(rng):
    dg = diagram_of(rng.normal(size=(9, 2)), 1)
    assert tp_loss(dg, dg, TCParams("TP")) == 0.0


def test_tp_by_hand():
    params = TCParams("TP", alpha=1.0, max_dim=0)
    assert tp_loss(diagram_of(LINE, 0), diagram_of([[0.0], [3.0]], 0), params) == 4.0


def test_tp_coverage_error():
    with pytest.raises(DimensionCoverageError):
        tp_loss(diagram_of(LINE, 0), diagram_of(LINE, 1), TCParams("TP", max_dim=1))


@pytest.mark.parametrize("alpha", [1.0, 2.0, 0.5])
def test_tp_matches_brute_force(rng, alpha):
    for _ in range(10):
        X, Y = rng.normal(size=(int(rng.integers(2, 10)), 3)), rng.normal(size=(int(rng.integers(2, 10)), 3))
        expected = 0.0
        bx = brute_force_diagram(pairwise_distances(X), 1)
        by = brute_force_diagram(pairwise_distances(Y), 1)
        for i in range(2):
            px = sum((d - b) ** alpha for k, b, d in bx if k == i and math.isfinite(d))
            py = sum((d - b) ** alpha for k, b, d in by if k == i and math.isfinite(d))
            expected += abs(px - py)
        got = tp_loss(diagram_of(X, 1), diagram_of(Y, 1), TCParams("TP", alpha=alpha, max_dim=1))
        assert got == pytest.approx(expected, rel=1e-12, abs=1e-14)


def test_tp_is_symmetric(rng):
    a, b = diagram_of(rng.normal(size=(8, 2)), 1), diagram_of(rng.normal(size=(6, 2)), 1)
    p = TCParams("TP", alpha=1.5)
    assert tp_loss(a, b, p) == tp_loss(b, a, p) >= 0


def test_kernel_with_diagonal_points_vanishes():
    P = np.array([[0.0, 1.0], [0.2, 0.9]])
    Q = np.array([[0.5, 0.5], [1.0, 1.0]])
    assert heat_kernel_points(P, Q, 0.3) == 0.0


def test_kernel_single_pair_closed_form():
    P = np.array([[0.0, 1.0]])
    assert heat_kernel_points(P, P, 1 / 8) == pytest.approx((1 - math.exp(-2)) / math.pi, rel=1e-14)


def test_kernel_symmetric_and_matches_double_loop(rng):
    for _ in range(10):
        P = np.sort(rng.uniform(0, 2, size=(int(rng.integers(1, 8)), 2)), axis=1)
        Q = np.sort(rng.uniform(0, 2, size=(int(rng.integers(1, 8)), 2)), axis=1)
        s = float(rng.uniform(0.05, 2))
        assert heat_kernel_points(P, Q, s) == pytest.approx(heat_kernel_points(Q, P, s), rel=1e-12)
        assert heat_kernel_points(P, Q, s) == pytest.approx(mk_double_loop(P, Q, s), rel=1e-9)


def test_kernel_rejects_bad_sigma():
    with pytest.raises(ParameterError):
        heat_kernel_points(np.zeros((1, 2)), np.zeros((1, 2)), 0.0)
    with pytest.raises(ParameterError):
        TCParams("MK", sigma=-1)


def test_mk_loss_single_points_is_zero():
    a = diagram_of([[1.0, 2.0]], 1)
    assert mk_loss(a, a, TCParams("MK", sigma=1.0)) == 0.0


def test_mk_loss_symmetry_and_oracle(rng):
    for _ in range(8):
        X = rng.normal(size=(int(rng.integers(3, 10)), 2))
        Y = rng.normal(size=(int(rng.integers(3, 10)), 2))
        dx, dy = diagram_of(X, 1), diagram_of(Y, 1)
        p = TCParams("MK", sigma=0.4, max_dim=1)
        assert mk_loss(dx, dy, p) == pytest.approx(mk_loss(dy, dx, p), rel=1e-12)
        expected = sum(mk_double_loop(dx.points(i), dy.points(i), 0.4) for i in range(2))
        assert mk_loss(dx, dy, p) == pytest.approx(expected, rel=1e-9)
        assert multiscale_kernel(dx, dy, 0, 0.4) >= 0


def _random_diagrams(rng, count):
    return [diagram_of(rng.normal(size=(int(rng.integers(3, 9)), 2)), 1) for _ in range(count)]


@pytest.mark.parametrize("sigma", [0.1, 1.0, 10.0])
def test_gram_matrix_is_psd(rng, sigma):
    dgs = _random_diagrams(rng, 20)
    for dim in (0, 1):
        G = np.array([[multiscale_kernel(a, b, dim, sigma) for b in dgs] for a in dgs])
        ev = np.linalg.eigvalsh((G + G.T) / 2)
        assert ev.min() >= -1e-8 * max(ev.max(), 0)


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_scale_law(rng, alpha):
    X = rng.normal(size=(9, 3))
    a, b = diagram_of(X, 1), diagram_of(2 * X, 1)
    for i in (0, 1):
        assert total_persistence(b, i, alpha) == pytest.approx(2**alpha * total_persistence(a, i, alpha), rel=1e-9)


def test_median_sigma_positive(rng):
    dg = diagram_of(rng.normal(size=(10, 2)), 1)
    assert median_sigma(dg, max_dim=1) > 0
    assert median_sigma(vr_persistence(np.zeros((1, 1)), 0)) == 1.0

import math

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from oracles import bottleneck_exhaustive, rank_diagram
from sublandscape.errors import BudgetError, SublandscapeError
from sublandscape.metricspace import PointCloud, hausdorff
from sublandscape.persistence import (PersistenceDiagram, bottleneck, bottleneck_points,
                                      compute_diagram, rips_diagram)
from sublandscape.rips import build_rips


def _sorted(a):
    a = np.asarray(a, dtype=float).reshape(-1, 3)
    return a[np.lexsort((a[:, 1], a[:, 0], a[:, 2]))]


def test_square(square):
    for dgm in (compute_diagram(build_rips(PointCloud(square), 1, 2.0), 2.0),
                rips_diagram(PointCloud(square), 1, 2.0, 2.0)):
        assert dgm.in_dim(1).tolist() == [[1.0, math.sqrt(2)]]
        assert dgm.in_dim(0).tolist() == [[0, 1], [0, 1], [0, 1], [0, 2.0]]
        assert dgm.betti(1, 1.2) == 1 and dgm.betti(1, 0.5) == 0
    assert np.allclose(_sorted(rank_diagram(cdist(square, square), 1, 2.0)),
                       rips_diagram(PointCloud(square), 1, 2.0, 2.0).points, atol=1e-12)


def test_triangle_has_no_loop():
    tri = np.array([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
    assert len(rips_diagram(PointCloud(tri), 1, 2.0, 2.0).in_dim(1)) == 0
    assert all(p[2] == 0 for p in rank_diagram(cdist(tri, tri), 1, 2.0))


def test_single_point():
    dgm = rips_diagram(PointCloud([[0.0, 0.0]]), 2, 1.0, 3.0)
    assert dgm.points.tolist() == [[0.0, 3.0, 0.0]]


def test_routes_agree_with_rank_oracle(rng):
    for _ in range(15):
        n = int(rng.integers(3, 9))
        X = rng.random((n, 2))
        D = cdist(X, X)
        want = _sorted(rank_diagram(D, 2, 2.0))
        fast = rips_diagram(D, 2, 5.0, 2.0).points
        slow = compute_diagram(build_rips(D, 2, 5.0), 2.0).points
        assert np.allclose(want, fast, atol=1e-12) and np.allclose(want, slow, atol=1e-12)


def test_fast_route_matches_explicit_route(rng):
    for _ in range(20):
        n = int(rng.integers(10, 35))
        X = rng.random((n, int(rng.integers(2, 4))))
        thr = float(rng.uniform(0.3, 1.5))
        a = rips_diagram(PointCloud(X), 2, thr, 1.5)
        b = compute_diagram(build_rips(PointCloud(X), 2, thr), 1.5)
        assert a == b


def test_duplicate_points_drop_zero_persistence():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    dgm = rips_diagram(PointCloud(X), 1, 2.0, 2.0)
    assert np.all(dgm.points[:, 1] > dgm.points[:, 0])
    assert dgm.in_dim(1).tolist() == [[1.0, math.sqrt(2)]]


def test_permutation_invariance(rng):
    X = rng.random((25, 2))
    perm = rng.permutation(25)
    assert rips_diagram(PointCloud(X), 1, 0.6, 1.0) == rips_diagram(PointCloud(X[perm]), 1, 0.6, 1.0)


def test_truncation():
    d = PersistenceDiagram([(0, 5, 0), (1, 2, 1), (3, 4, 1), (0.5, 0.5, 1)], 10.0)
    assert len(d) == 3
    t = d.truncate(3.5)
    assert t.points.tolist() == [[0, 3.5, 0], [1, 2, 1], [3, 3.5, 1]]
    with pytest.raises(SublandscapeError):
        PersistenceDiagram([(0, 1, 0)], 0.0)


def test_diagram_does_not_modify_input():
    pts = np.array([[0.0, 5.0, 0.0], [1.0, 2.0, 1.0]])
    PersistenceDiagram(pts, 3.0)
    assert pts.tolist() == [[0.0, 5.0, 0.0], [1.0, 2.0, 1.0]]


def test_json_round_trip(square):
    d = rips_diagram(PointCloud(square), 1, 2.0, 2.0)
    text = d.to_json()
    assert PersistenceDiagram.from_json(text) == d
    assert '"death": 1.4142135623730951' in text


def test_budget_error(rng):
    with pytest.raises(BudgetError):
        rips_diagram(PointCloud(rng.random((60, 2))), 2, 5.0, 1.0, budget=100)


def test_bottleneck_simple():
    assert bottleneck_points([[0, 2]], []) == 1.0
    assert bottleneck_points([], []) == 0.0
    d = PersistenceDiagram([(0, 2, 1), (1, 3, 1)], 4.0)
    assert bottleneck(d, d, 1) == 0.0
    assert bottleneck(d, d, 5) == 0.0
    with pytest.raises(SublandscapeError):
        bottleneck(d, d.truncate(3.0), 1)


def test_bottleneck_against_exhaustive_matchings(rng):
    for _ in range(40):
        A = np.sort(rng.random((rng.integers(0, 7), 2)), axis=1)
        B = np.sort(rng.random((rng.integers(0, 7), 2)), axis=1)
        got = bottleneck_points(A, B)
        assert got == pytest.approx(bottleneck_exhaustive(A, B), abs=1e-12)
        assert got == bottleneck_points(B, A)


def test_stability_with_diameter_convention(rng):
    # With the diameter convention the sharp constant is 2:
    # {0, 1} vs {-d, 1 + d} have H = d but bottleneck 2d on the H0 bar.
    a = rips_diagram(PointCloud([[0.0], [1.0]]), 0, 3.0, 3.0)
    b = rips_diagram(PointCloud([[-0.1], [1.1]]), 0, 3.0, 3.0)
    assert bottleneck(a, b, 0) == pytest.approx(0.2)
    for _ in range(20):
        X = rng.random((20, 2))
        Y = X + rng.uniform(-0.05, 0.05, X.shape)
        H = hausdorff(X, Y)
        dx = rips_diagram(PointCloud(X), 1, 3.0, 3.0)
        dy = rips_diagram(PointCloud(Y), 1, 3.0, 3.0)
        for k in (0, 1):
            assert bottleneck(dx, dy, k) <= 2 * H + 1e-9

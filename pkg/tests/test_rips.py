import math

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from oracles import rips_subsets
from sublandscape.errors import BudgetError, SublandscapeError
from sublandscape.metricspace import PointCloud
from sublandscape.rips import build_rips, count_simplices


def test_two_points():
    f = build_rips(PointCloud([[0.0], [1.0]]), 0, 2.0)
    assert [(s.vertices, s.value) for s in f.simplices] == [((0,), 0.0), ((1,), 0.0), ((0, 1), 1.0)]


def test_equilateral_triangle(rng):
    tri = np.array([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
    D = cdist(tri, tri)
    D[D > 0] = 1.0  # exact unit sides
    f = build_rips(D, 1, 2.0)
    assert f.counts() == (3, 3, 1)
    assert all(s.value == 1.0 for s in f.simplices if s.dim > 0)


def test_matches_subset_enumeration(rng):
    for n, thr in [(8, 0.6), (12, 0.5), (50, 0.2)]:
        X = rng.random((n, 2))
        D = cdist(X, X)
        f = build_rips(PointCloud(X), 2, thr)
        got = {s.vertices: s.value for s in f.simplices}
        want = rips_subsets(D, 3, thr)
        assert got.keys() == want.keys()
        assert all(got[k] == want[k] for k in want)


def test_order_and_face_property(rng):
    X = rng.random((15, 3))
    f = build_rips(PointCloud(X), 2, 0.8)
    keys = [(s.value, s.dim, s.vertices) for s in f.simplices]
    assert keys == sorted(keys)
    pos = {s.vertices: i for i, s in enumerate(f.simplices)}
    for i, s in enumerate(f.simplices):
        assert list(s.vertices) == sorted(set(s.vertices))
        for v in range(len(s.vertices)):
            face = s.vertices[:v] + s.vertices[v + 1:]
            if face:
                assert pos[face] < i
                assert f.simplices[pos[face]].value <= s.value


def test_diameter_convention(rng):
    X = rng.random((10, 2))
    D = cdist(X, X)
    for s in build_rips(PointCloud(X), 2, 1.0).simplices:
        if s.dim == 1:
            assert s.value == D[s.vertices]
        elif s.dim > 1:
            assert s.value == max(D[i, j] for i in s.vertices for j in s.vertices)


def test_monotone_in_threshold(rng):
    X = rng.random((12, 2))
    small = {s.vertices for s in build_rips(PointCloud(X), 1, 0.3).simplices}
    big = {s.vertices for s in build_rips(PointCloud(X), 1, 0.6).simplices}
    assert small <= big


def test_permutation_invariance(rng):
    X = rng.random((12, 2))
    perm = rng.permutation(12)
    a = sorted((s.dim, s.value) for s in build_rips(PointCloud(X), 2, 0.7).simplices)
    b = sorted((s.dim, s.value) for s in build_rips(PointCloud(X[perm]), 2, 0.7).simplices)
    assert a == b


def test_duplicates_kept():
    f = build_rips(PointCloud([[0.0], [0.0], [1.0]]), 1, 2.0)
    assert f.counts() == (3, 3, 1)
    assert f.simplices[3].value == 0.0


def test_count_simplices():
    D = np.ones((4, 4)) - np.eye(4)
    assert count_simplices(D, 2, 1.5, exact=True) == (4, 6, 4)
    assert count_simplices(D, 2, 1.5) == (4, 6, 4)
    assert count_simplices(D, 2, 0.5, exact=True) == (4, 0, 0)


def test_count_matches_build(rng):
    X = rng.random((30, 2))
    for thr in (0.1, 0.3, 0.5):
        exact = count_simplices(PointCloud(X), 2, thr, exact=True)
        assert exact == build_rips(PointCloud(X), 1, thr).counts()
        bound = count_simplices(PointCloud(X), 2, thr)
        assert all(b >= e for b, e in zip(bound, exact))


def test_budget_and_argument_errors(rng):
    X = rng.random((40, 2))
    with pytest.raises(BudgetError) as exc:
        build_rips(PointCloud(X), 2, 10.0, budget=1000)
    assert exc.value.code == "complexity-budget" and "dimension" in str(exc.value)
    with pytest.raises(SublandscapeError):
        build_rips(PointCloud(X), 4, 1.0)
    with pytest.raises(SublandscapeError):
        build_rips(PointCloud(X), 1, 0.0)


def test_dump(tmp_path):
    f = build_rips(PointCloud([[0.0], [1.0]]), 0, 2.0)
    f.dump(tmp_path / "f.txt")
    assert (tmp_path / "f.txt").read_text().splitlines() == ["0 0 0", "0 0 1", "1 1 0 1"]

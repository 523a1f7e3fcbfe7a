import numpy as np
import pytest

from oracles import kmax_landscape
from sublandscape.errors import SublandscapeError
from sublandscape.landscape import (Landscape, average, build_landscape, grid, linf_distance,
                                    tent, zeros_like)
from sublandscape.persistence import PersistenceDiagram, bottleneck


def _dgm(pairs, T=4.0, dim=1):
    return PersistenceDiagram([(b, d, dim) for b, d in pairs], T)


def test_tent():
    assert tent((0, 2), 1) == 1.0
    assert tent((1, 1), 1) == 0.0 and tent((1, 1), 0.3) == 0.0
    assert tent((1, 3), 1.5) == 0.5
    assert tent((1, 3), 5.0) == 0.0


def test_single_point_landscape():
    lam = build_landscape(_dgm([(0, 2)]), K=2, G=5)
    assert lam.t.tolist() == [0, 1, 2, 3, 4]
    assert lam.values.tolist() == [[0, 1, 0, 0, 0], [0, 0, 0, 0, 0]]


def test_kmax_against_sorting_oracle(rng):
    pts = [(0, 2), (1, 3), (0.5, 3.5), (2, 2.5)]
    lam = build_landscape(_dgm(pts), K=5, G=1001)
    for k in range(1, 6):
        assert np.allclose(lam.values[k - 1], kmax_landscape(pts, lam.t, k), atol=1e-15)
    # two overlapping tents: at t=1.5 the top layer is 0.5 from both
    assert build_landscape(_dgm([(0, 2), (1, 3)]), K=1, G=9).values[0, 3] == 0.5


def test_kmax_random_t(rng):
    pts = np.sort(rng.random((20, 2)) * 4, axis=1)
    t = rng.uniform(0, 4, 10_000)
    for k in (1, 2, 7):
        want = kmax_landscape(pts, t, k)
        got = np.array([sorted([tent(p, s) for p in pts], reverse=True)[k - 1] for s in t])
        assert np.allclose(got, want)
    lam = build_landscape(_dgm(pts), K=7, G=257)
    assert np.allclose(lam.values[6], kmax_landscape(pts, lam.t, 7))


def test_dim_selection():
    d = PersistenceDiagram([(0, 2, 0), (1, 3, 1)], 4.0)
    assert build_landscape(d, dim=0, G=5).values[0].tolist() == [0, 1, 0, 0, 0]
    assert build_landscape(d, dim=1, G=5).values[0].tolist() == [0, 0, 1, 0, 0]
    assert build_landscape(d, dim=2, G=5).values.max() == 0.0


def test_invariants(rng):
    for _ in range(20):
        pts = np.sort(rng.random((rng.integers(0, 30), 2)) * 3, axis=1)
        lam = build_landscape(_dgm(pts, T=3.0), K=4, G=200)
        lam.check()
        assert np.all(lam.values[:, 0] == 0) and np.all(lam.values[:, -1] == 0)


def test_linf():
    a = build_landscape(_dgm([(0, 2)]), G=101)
    assert linf_distance(a, a) == 0.0
    assert linf_distance(a, zeros_like(a)) == 1.0
    with pytest.raises(SublandscapeError) as exc:
        linf_distance(a, build_landscape(_dgm([(0, 2)]), G=100))
    assert exc.value.code == "grid-mismatch"


def test_linf_scan(rng):
    a = Landscape(rng.random((3, 50)), 1.0)
    b = Landscape(rng.random((3, 50)), 1.0)
    want = max(abs(a.values[k, g] - b.values[k, g]) for k in range(3) for g in range(50))
    assert linf_distance(a, b) == want


def test_average():
    a = build_landscape(_dgm([(0, 2)]), G=101)
    assert average([a]).values.tolist() == a.values.tolist()
    half = average([a, zeros_like(a)])
    assert np.array_equal(half.values, a.values / 2)
    with pytest.raises(SublandscapeError) as exc:
        average([])
    assert exc.value.code == "empty-average"


def test_average_summation_oracle(rng):
    lands = [build_landscape(_dgm(np.sort(rng.random((8, 2)) * 4, axis=1)), K=3, G=64)
             for _ in range(30)]
    want = np.zeros((3, 64))
    for lam in lands:
        want += lam.values
    want /= 30
    avg = average(lands)
    assert np.allclose(avg.values, want, atol=1e-12, rtol=0)
    avg.check()


def test_stability_against_bottleneck(rng):
    for _ in range(30):
        A = np.sort(rng.random((6, 2)) * 4, axis=1)
        B = np.clip(A + rng.uniform(-0.2, 0.2, A.shape), 0, 4)
        B = np.sort(B, axis=1)
        da, db = _dgm(A), _dgm(B)
        la, lb = build_landscape(da, K=3, G=300), build_landscape(db, K=3, G=300)
        assert linf_distance(la, lb) <= bottleneck(da, db, 1) + la.spacing


def test_grid_refinement(rng):
    pts = np.sort(rng.random((10, 2)) * 4, axis=1)
    d = _dgm(pts)
    ref = build_landscape(d, G=10 * 512 + 1)
    for G in (129, 257, 513):
        coarse = build_landscape(d, G=G)
        fine_at_coarse = ref.values[:, ::(ref.G - 1) // (G - 1)]
        assert np.max(np.abs(coarse.values - fine_at_coarse)) <= 1e-12
        # between grid points the piecewise-linear interpolant is off by at most one spacing
        interp = np.interp(ref.t, coarse.t, coarse.values[0])
        assert np.max(np.abs(interp - ref.values[0])) <= coarse.spacing


def test_csv_round_trip(tmp_path):
    a = build_landscape(_dgm([(0, 2), (1, 3)]), K=2, G=11)
    a.to_csv(tmp_path / "l.csv")
    lines = (tmp_path / "l.csv").read_text().splitlines()
    assert lines[0] == "t,k1,k2" and len(lines) == 12
    b = Landscape.from_csv(tmp_path / "l.csv")
    assert b.T == a.T and np.array_equal(a.values, b.values)


def test_grid_and_depth_errors():
    with pytest.raises(SublandscapeError):
        build_landscape(_dgm([(0, 1)]), G=1)
    with pytest.raises(SublandscapeError):
        build_landscape(_dgm([(0, 1)]), K=0)
    assert grid(2.0, 3).tolist() == [0.0, 1.0, 2.0]

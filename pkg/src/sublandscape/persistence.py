"""Persistence diagrams and bottleneck distance.

Diagrams live in [0, T]^2: classes still alive at the filtration threshold
are given death ``T`` and zero-length pairs are not stored.
"""

from __future__ import annotations

import itertools
import json

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from . import _engine
from ._io import dumps
from .errors import SublandscapeError
from .rips import DEFAULT_BUDGET, MAX_DIM_CAP, _check_args, _matrix, check_budget


class PersistenceDiagram:
    """Multiset of (birth, death, dim) points truncated to [0, T]."""

    __slots__ = ("T", "points")

    def __init__(self, points, T):
        T = float(T)
        if not T > 0:
            raise SublandscapeError("bad-T", "T must be positive")
        pts = np.array(points, dtype=np.float64).reshape(-1, 3)
        # drop points born after T, clip deaths at T, drop the diagonal
        pts = pts[pts[:, 0] <= T]
        pts[:, 1] = np.minimum(pts[:, 1], T)
        pts = pts[pts[:, 1] > pts[:, 0]]
        if np.any(pts[:, 0] < 0):
            raise SublandscapeError("bad-diagram", "negative birth")
        order = np.lexsort((pts[:, 1], pts[:, 0], pts[:, 2]))
        pts = pts[order]
        pts.setflags(write=False)
        self.points = pts
        self.T = T

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"PersistenceDiagram({len(self)} points, T={self.T})"

    def __eq__(self, other):
        return (isinstance(other, PersistenceDiagram) and self.T == other.T
                and np.array_equal(self.points, other.points))

    def dims(self):
        return sorted({int(d) for d in self.points[:, 2]})

    def in_dim(self, dim):
        """(k, 2) array of (birth, death) for one homology dimension."""
        sel = self.points[:, 2] == dim
        return self.points[sel, :2]

    def betti(self, dim, alpha):
        """Number of classes of ``dim`` alive at scale ``alpha``."""
        p = self.in_dim(dim)
        return int(np.sum((p[:, 0] <= alpha) & (alpha < p[:, 1])))

    def truncate(self, T):
        return PersistenceDiagram(self.points, T)

    def to_json(self):
        pts = [{"dim": int(d), "birth": float(b), "death": float(x)} for b, x, d in self.points]
        return dumps({"T": self.T, "points": pts})

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        pts = [(p["birth"], p["death"], p["dim"]) for p in obj["points"]]
        return cls(pts, obj["T"])


def compute_diagram(filtration, T):
    """Diagram of an explicit filtration by Z/2 boundary-matrix reduction.

    Dimension 0 uses union-find over edges; higher dimensions reduce the
    boundary matrices from the top dimension down, clearing the columns of
    simplices already known to be positive.
    """
    simplices = filtration.simplices
    pos = {s.vertices: i for i, s in enumerate(simplices)}
    vals = np.array([s.value for s in simplices]) if simplices else np.empty(0)
    top = max((s.dim for s in simplices), default=0)
    by_dim = [[] for _ in range(top + 1)]
    for i, s in enumerate(simplices):
        by_dim[s.dim].append(i)

    out = []
    n = len(by_dim[0])
    parent = list(range(n))
    vid = {simplices[i].vertices[0]: r for r, i in enumerate(by_dim[0])}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    negative_edges = set()
    if top >= 1:
        for i in by_dim[1]:
            u, v = simplices[i].vertices
            a, b = find(vid[u]), find(vid[v])
            if a != b:
                parent[max(a, b)] = min(a, b)
                negative_edges.add(i)
                out.append((0.0, vals[i], 0))
    comps = len({find(a) for a in range(n)})
    out.extend((0.0, np.inf, 0) for _ in range(comps))

    # positive[d]: d-simplices whose boundary column reduces to zero
    positive = {1: set(by_dim[1]) - negative_edges} if top >= 1 else {}
    paired_low = {}
    for d in range(top, 1, -1):
        cleared = paired_low.get(d, set())
        lows = {}
        pos_d = set()
        paired_low[d - 1] = set()
        for i in by_dim[d]:
            if i in cleared:
                pos_d.add(i)
                continue
            col = {pos[f] for f in itertools.combinations(simplices[i].vertices, d)}
            while col:
                low = max(col)
                if low not in lows:
                    break
                col ^= lows[low]
            if col:
                low = max(col)
                lows[low] = col
                paired_low[d - 1].add(low)
                out.append((vals[low], vals[i], d - 1))
            else:
                pos_d.add(i)
        positive[d] = pos_d
    for d in range(1, min(top, filtration.max_dim) + 1):
        alive = positive.get(d, set()) - paired_low.get(d, set())
        out.extend((vals[i], np.inf, d) for i in alive)
    return PersistenceDiagram(out, T)


def rips_diagram(cloud, max_dim, threshold, T, *, budget=DEFAULT_BUDGET, max_dim_cap=MAX_DIM_CAP):
    """Diagram of the Rips filtration of ``cloud`` (a PointCloud or matrix).

    Same result as ``compute_diagram(build_rips(...), T)`` without
    materialising the filtration.
    """
    D = _matrix(cloud)
    _check_args(D.shape[0], max_dim, threshold, max_dim_cap)
    eff = min(float(threshold), _engine.enclosing_radius(D)) if D.shape[0] > 1 else threshold
    # the top dimension is enumerated implicitly, so only max_dim is stored
    check_budget(D, max_dim, eff, budget)
    pts = []
    for k, (b, d) in enumerate(_engine.rips_pairs(D, max_dim, threshold)):
        if len(b):
            pts.append(np.column_stack([b, d, np.full(len(b), k)]))
    return PersistenceDiagram(np.concatenate(pts) if pts else np.empty((0, 3)), T)


def _linf(a, b):
    return np.maximum(np.abs(a[:, None, 0] - b[None, :, 0]), np.abs(a[:, None, 1] - b[None, :, 1]))


def _matching_exists(a, b, cross, ha, hb, delta):
    """Perfect matching between A+diag(B) and B+diag(A) within ``delta``."""
    na, nb = len(a), len(b)
    size = na + nb
    rows, cols = [], []
    r, c = np.nonzero(cross <= delta)
    rows.append(r)
    cols.append(c)
    ia = np.nonzero(ha <= delta)[0]
    rows.append(ia)
    cols.append(nb + ia)
    ib = np.nonzero(hb <= delta)[0]
    rows.append(na + ib)
    cols.append(ib)
    # diagonal copies match each other for free
    dr, dc = np.meshgrid(np.arange(nb), np.arange(na), indexing="ij")
    rows.append(na + dr.ravel())
    cols.append(nb + dc.ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    g = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(size, size))
    match = maximum_bipartite_matching(g, perm_type="column")
    return bool(np.all(match >= 0))


def bottleneck_points(a, b):
    """Bottleneck distance between two (k, 2) arrays of (birth, death)."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 2)
    ha = (a[:, 1] - a[:, 0]) / 2
    hb = (b[:, 1] - b[:, 0]) / 2
    if len(a) == 0 and len(b) == 0:
        return 0.0
    cross = _linf(a, b)
    cand = np.unique(np.concatenate([cross.ravel(), ha, hb, [0.0]]))
    lo, hi = 0, len(cand) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _matching_exists(a, b, cross, ha, hb, cand[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(cand[lo])


def bottleneck(d1, d2, dim):
    """Bottleneck distance between the ``dim`` parts of two diagrams."""
    if d1.T != d2.T:
        raise SublandscapeError("T-mismatch", f"{d1.T} vs {d2.T}")
    return bottleneck_points(d1.in_dim(dim), d2.in_dim(dim))

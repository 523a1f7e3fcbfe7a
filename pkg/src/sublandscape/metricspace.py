"""Point clouds, Hausdorff distance, and samplers.

A :class:`PointCloud` is either a set of coordinates in R^D with the
euclidean metric or an explicit distance matrix.  Subsets are represented
by integer index arrays into the parent cloud.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .errors import SublandscapeError

DEFAULT_CACHE_CAP = 4096
SHAPE_KINDS = ("circle", "sphere", "torus", "uniform-cube")


def stream_rng(seed, *key):
    """Counter-based generator for the stream identified by ``(seed, *key)``.

    Streams with different keys are statistically independent and do not
    depend on the order in which they are created.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


class PointCloud:
    """Immutable finite metric space.

    Parameters
    ----------
    points : (N, D) array, optional
        Coordinates; the metric is euclidean.
    matrix : (N, N) array, optional
        Explicit distance matrix.  Exactly one of ``points``/``matrix``
        must be given.
    """

    __slots__ = ("points", "matrix", "metric", "cache_cap", "_dist")

    def __init__(self, points=None, matrix=None, *, cache_cap=DEFAULT_CACHE_CAP,
                 validate=True, full_check=False):
        if (points is None) == (matrix is None):
            raise SublandscapeError("bad-cloud", "give exactly one of points / matrix")
        self.cache_cap = int(cache_cap)
        self._dist = None
        if points is not None:
            pts = np.array(points, dtype=np.float64)
            if pts.ndim == 1:
                pts = pts[:, None]
            if pts.ndim != 2 or pts.shape[0] < 1:
                raise SublandscapeError("empty-set", "point cloud must contain at least one point")
            if not np.all(np.isfinite(pts)):
                raise SublandscapeError("non-finite", "coordinates must be finite")
            pts.setflags(write=False)
            self.points = pts
            self.matrix = None
            self.metric = "euclidean"
        else:
            mat = np.array(matrix, dtype=np.float64)
            if validate:
                validate_matrix(mat, full=full_check)
            mat.setflags(write=False)
            self.points = None
            self.matrix = mat
            self.metric = "explicit-matrix"
            self._dist = mat

    def __len__(self):
        return self.points.shape[0] if self.points is not None else self.matrix.shape[0]

    def __repr__(self):
        return f"PointCloud(N={len(self)}, metric={self.metric!r})"

    @property
    def dim(self):
        """Ambient dimension, or None for an explicit matrix."""
        return None if self.points is None else self.points.shape[1]

    def distances(self, rows=None, cols=None):
        """Distance block between index sets ``rows`` and ``cols`` (all if None)."""
        if self.matrix is not None:
            m = self.matrix
            if rows is not None:
                m = m[np.asarray(rows)]
            if cols is not None:
                m = m[:, np.asarray(cols)]
            return m
        if self._dist is not None:
            m = self._dist
            if rows is not None:
                m = m[np.asarray(rows)]
            if cols is not None:
                m = m[:, np.asarray(cols)]
            return m
        a = self.points if rows is None else self.points[np.asarray(rows)]
        b = self.points if cols is None else self.points[np.asarray(cols)]
        return cdist(a, b)

    def distance_matrix(self):
        """Full N x N matrix, cached when N is at most ``cache_cap``."""
        if self._dist is not None:
            return self._dist
        d = cdist(self.points, self.points)
        np.fill_diagonal(d, 0.0)
        if len(self) <= self.cache_cap:
            d.setflags(write=False)
            self._dist = d
        return d

    def subset_matrix(self, idx):
        """Distance matrix of the sub-cloud ``idx`` (duplicates allowed)."""
        idx = np.asarray(idx, dtype=np.int64)
        if self.points is not None and self._dist is None:
            d = cdist(self.points[idx], self.points[idx])
            np.fill_diagonal(d, 0.0)
            return d
        return np.ascontiguousarray(self.distances(idx, idx))

    def subset(self, idx):
        """New cloud made of the points ``idx``."""
        idx = np.asarray(idx, dtype=np.int64)
        if self.points is not None:
            return PointCloud(self.points[idx], cache_cap=self.cache_cap)
        return PointCloud(matrix=self.matrix[np.ix_(idx, idx)], validate=False)


def validate_matrix(mat, full=False, max_triples=100_000, seed=0):
    """Check that ``mat`` is a distance matrix.

    Zero diagonal, symmetry within 1e-12 and the triangle inequality within
    1e-9.  The triangle check samples ``min(N**3, max_triples)`` triples
    unless ``full`` is set.
    """
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
        raise SublandscapeError("bad-matrix", f"expected a nonempty square matrix, got {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise SublandscapeError("non-finite", "distance matrix has non-finite entries")
    if np.any(mat < 0):
        raise SublandscapeError("bad-matrix", "negative distance")
    if np.any(np.diag(mat) != 0):
        raise SublandscapeError("bad-matrix", "nonzero diagonal")
    if np.max(np.abs(mat - mat.T)) > 1e-12:
        raise SublandscapeError("bad-matrix", "matrix is not symmetric")
    n = mat.shape[0]
    if full or n ** 3 <= max_triples:
        # d(i,k) <= d(i,j) + d(j,k) for all j at once
        for j in range(n):
            viol = mat - (mat[:, j][:, None] + mat[j][None, :])
            if viol.max() > 1e-9:
                raise SublandscapeError("bad-matrix", "triangle inequality violated")
        return
    rng = np.random.default_rng(seed)
    i, j, k = rng.integers(0, n, size=(3, max_triples))
    if np.any(mat[i, k] > mat[i, j] + mat[j, k] + 1e-9):
        raise SublandscapeError("bad-matrix", "triangle inequality violated")


def _as_points(x):
    if isinstance(x, PointCloud):
        if x.points is None:
            raise SublandscapeError("bad-cloud", "use subset_hausdorff for explicit-matrix clouds")
        return x.points
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    return a


def directed_hausdorff(x, y):
    """max over x of the distance to the nearest point of y."""
    a, b = _as_points(x), _as_points(y)
    if len(a) == 0 or len(b) == 0:
        raise SublandscapeError("empty-set", "Hausdorff distance of an empty set")
    if a.shape[1] != b.shape[1]:
        raise SublandscapeError("dim-mismatch", f"{a.shape[1]} vs {b.shape[1]}")
    d, _ = cKDTree(b).query(a, k=1)
    return float(np.max(d))


def hausdorff(x, y):
    """Symmetric Hausdorff distance between two nonempty point sets."""
    return max(directed_hausdorff(x, y), directed_hausdorff(y, x))


def subset_hausdorff(cloud, a, b, chunk=2048):
    """Hausdorff distance between the index subsets ``a`` and ``b`` of ``cloud``."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        raise SublandscapeError("empty-set", "Hausdorff distance of an empty set")
    if cloud.points is not None:
        return hausdorff(cloud.points[a], cloud.points[b])
    ab = 0.0
    for s in range(0, a.size, chunk):
        ab = max(ab, float(cloud.distances(a[s:s + chunk], b).min(axis=1).max()))
    ba = 0.0
    for s in range(0, b.size, chunk):
        ba = max(ba, float(cloud.distances(b[s:s + chunk], a).min(axis=1).max()))
    return max(ab, ba)


def diameter(cloud, chunk=2048):
    """Largest pairwise distance; 0 for a singleton."""
    n = len(cloud)
    if n == 1:
        return 0.0
    if cloud.matrix is not None or cloud._dist is not None:
        return float(cloud.distance_matrix().max())
    best = 0.0
    for s in range(0, n, chunk):
        best = max(best, float(cloud.distances(np.arange(s, min(n, s + chunk))).max()))
    return best


@dataclass(frozen=True)
class SubsampleScheme:
    """n draws of m points each; ``replacement`` selects i.i.d. sampling."""

    m: int
    n: int
    seed: int = 0
    replacement: bool = True

    def __post_init__(self):
        if int(self.m) < 1:
            raise SublandscapeError("bad-scheme", f"m must be >= 1, got {self.m}")
        if int(self.n) < 1:
            raise SublandscapeError("bad-scheme", f"n must be >= 1, got {self.n}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise SublandscapeError("bad-scheme", "seed must fit in 64 unsigned bits")


def sample_iid(cloud, scheme, stream=0):
    """Index lists of the n subsamples.

    Subsample ``i`` is drawn from its own stream ``(seed, stream, i)``, so
    the result does not depend on evaluation order.  ``stream`` separates
    unrelated uses of one seed (e.g. the two arms of a comparison).
    """
    n_pts = len(cloud) if not isinstance(cloud, (int, np.integer)) else int(cloud)
    if n_pts < 1:
        raise SublandscapeError("empty-set", "cannot sample from an empty cloud")
    if not scheme.replacement and scheme.m > n_pts:
        raise SublandscapeError("bad-scheme", f"m={scheme.m} > N={n_pts} without replacement")
    out = []
    for i in range(scheme.n):
        rng = stream_rng(scheme.seed, stream, i)
        if scheme.replacement:
            idx = rng.integers(0, n_pts, size=scheme.m, dtype=np.int64)
        else:
            idx = np.sort(rng.choice(n_pts, size=scheme.m, replace=False)).astype(np.int64)
        out.append(idx)
    return out


@dataclass(frozen=True)
class SyntheticShape:
    """Parametric shape used to generate test clouds.

    ``radius`` is the circle/sphere radius or the torus ring radius,
    ``tube`` the torus tube radius, ``side`` the cube side length.
    """

    kind: str = "circle"
    radius: float = 1.0
    tube: float = 0.3
    side: float = 1.0
    dim: int = 3
    noise: float = 0.0

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise SublandscapeError("bad-shape", f"unknown shape {self.kind!r}")
        if self.radius <= 0 or self.tube <= 0 or self.side <= 0:
            raise SublandscapeError("bad-shape", "radii and side must be positive")
        if self.kind == "torus" and not self.tube < self.radius:
            raise SublandscapeError("bad-shape", "torus tube radius must be below ring radius")
        if self.noise < 0:
            raise SublandscapeError("bad-shape", "noise must be nonnegative")
        if self.dim < 1:
            raise SublandscapeError("bad-shape", "dim must be positive")


def sample_shape(shape, count, seed=0):
    """``count`` points drawn uniformly from ``shape`` plus gaussian noise."""
    if count < 1:
        raise SublandscapeError("bad-count", "count must be >= 1")
    rng = stream_rng(seed, 0x5A)
    if shape.kind == "circle":
        theta = rng.uniform(0.0, 2 * np.pi, count)
        pts = shape.radius * np.column_stack([np.cos(theta), np.sin(theta)])
    elif shape.kind == "sphere":
        g = rng.standard_normal((count, 3))
        pts = shape.radius * g / np.linalg.norm(g, axis=1, keepdims=True)
    elif shape.kind == "torus":
        # area element is proportional to R + r cos(phi): rejection on phi
        R, r = shape.radius, shape.tube
        phi = np.empty(0)
        while phi.size < count:
            cand = rng.uniform(0.0, 2 * np.pi, 2 * count)
            keep = rng.uniform(0.0, R + r, 2 * count) < R + r * np.cos(cand)
            phi = np.concatenate([phi, cand[keep]])
        phi = phi[:count]
        theta = rng.uniform(0.0, 2 * np.pi, count)
        pts = np.column_stack([
            (R + r * np.cos(phi)) * np.cos(theta),
            (R + r * np.cos(phi)) * np.sin(theta),
            r * np.sin(phi),
        ])
    else:
        pts = rng.uniform(0.0, shape.side, (count, shape.dim))
    if shape.noise > 0:
        pts = pts + rng.normal(0.0, shape.noise, pts.shape)
    return PointCloud(pts)


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_csv(path):
    """Rows of floats from a comma-separated file; a non-numeric first row is a header."""
    text = Path(path).read_text(encoding="utf-8")
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise SublandscapeError("empty-set", f"{path}: no data rows")
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise SublandscapeError("bad-csv", f"{path}: {exc}") from None
    return data


def load_points_csv(path):
    return PointCloud(read_csv(path))


def load_matrix_csv(path, full_check=False):
    return PointCloud(matrix=read_csv(path), full_check=full_check)


def write_points_csv(cloud, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(cloud.dim)])
        for p in cloud.points:
            w.writerow([format(float(v), ".17g") for v in p])

"""Density filtering and the circle-with-outlier robustness experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SublandscapeError
from .estimators import (PipelineParams, average_landscape, closest_sample_landscape,
                         cloud_landscape, resolve_T)
from .landscape import linf_distance
from .metricspace import PointCloud, SubsampleScheme, SyntheticShape, sample_shape

KERNELS = {
    "gaussian": lambda u: np.exp(-0.5 * u * u),
    "epanechnikov": lambda u: np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0),
}


def kde_scores(cloud, h, kernel="gaussian", normalized=False, chunk=2048):
    """(1/N) sum_j K(|x - X_j| / h) at every point, self term included.

    ``normalized`` divides by h^D (D the ambient dimension).
    """
    if not h > 0:
        raise SublandscapeError("bad-bandwidth", "h must be positive")
    if kernel not in KERNELS:
        raise SublandscapeError("bad-kernel", f"unknown kernel {kernel!r}")
    K = KERNELS[kernel]
    n = len(cloud)
    out = np.empty(n)
    for s in range(0, n, chunk):
        rows = np.arange(s, min(n, s + chunk))
        out[rows] = K(cloud.distances(rows) / h).sum(axis=1) / n
    if normalized:
        if cloud.dim is None:
            raise SublandscapeError("bad-cloud", "normalized KDE needs coordinates")
        out /= h ** cloud.dim
    return out


def knn_scores(cloud, k):
    """Minus the distance from each point to its k-th nearest other point."""
    n = len(cloud)
    if not 1 <= k < n:
        raise SublandscapeError("k-too-large", f"need 1 <= k < N={n}")
    out = np.empty(n)
    for i in range(n):
        d = np.array(cloud.distances([i])[0], dtype=np.float64)
        d = np.delete(d, i)
        out[i] = -np.partition(d, k - 1)[k - 1]
    return out


def kde_threshold_window(N, h, ambient_dim, a, b, normalized=False):
    """Thresholds separating isolated outliers from (a, b)-standard mass.

    An isolated point scores about 1/(N h^d); a point of the good set about
    a h^b / h^d.  Unnormalized scores are h^d times smaller.
    """
    lo = 1.0 / (N * h ** ambient_dim)
    hi = a / h ** (ambient_dim - b)
    if not normalized:
        lo *= h ** ambient_dim
        hi *= h ** ambient_dim
    return lo, hi


@dataclass(frozen=True)
class DensityFilter:
    """Keep points whose density score exceeds ``t``.

    knn scores are negated distances, so their thresholds are negative.
    """

    method: str = "kde"
    t: float = 0.01
    h: float = 0.2
    kernel: str = "gaussian"
    k: int = 5
    normalized: bool = False

    def __post_init__(self):
        if self.method not in ("kde", "knn"):
            raise SublandscapeError("bad-filter", f"unknown method {self.method!r}")
        if self.method == "kde" and not (self.h > 0 and self.t > 0):
            raise SublandscapeError("bad-filter", "kde filter needs h > 0 and t > 0")
        if self.method == "knn" and self.k < 1:
            raise SublandscapeError("bad-filter", "knn filter needs k >= 1")

    def scores(self, cloud):
        if self.method == "kde":
            return kde_scores(cloud, self.h, self.kernel, self.normalized)
        return knn_scores(cloud, self.k)


def filtered_cloud(cloud, density_filter):
    """(sub-cloud, kept indices) of the points scoring above the threshold."""
    s = density_filter.scores(cloud)
    keep = np.nonzero(s > density_filter.t)[0]
    if keep.size == 0:
        raise SublandscapeError("filter-too-aggressive",
                                f"t={density_filter.t} but scores range over [{s.min():.6g}, {s.max():.6g}]")
    return cloud.subset(keep), keep


def circle_with_outlier(N=500, seed=0, radius=1.0, noise=0.0):
    """(X_N, Y_N, G): Y_N replaces the first point of X_N by the origin, G = X_N minus it."""
    X = sample_shape(SyntheticShape("circle", radius=radius, noise=noise), N, seed)
    Y = X.points.copy()
    Y[0] = 0.0
    return X, PointCloud(Y), PointCloud(X.points[1:])


def _paired_stderr(a_lands, b_lands):
    """Stderr of mean(a) - mean(b) at the grid point where it peaks."""
    A = np.stack([x.values for x in a_lands])
    B = np.stack([x.values for x in b_lands])
    diff = A.mean(0) - B.mean(0)
    at = np.unravel_index(np.argmax(np.abs(diff)), diff.shape)
    n = len(a_lands)
    if n < 2:
        return float("nan"), float("nan"), float("nan")
    d = A[(slice(None),) + at] - B[(slice(None),) + at]
    se_x = float(A[(slice(None),) + at].std(ddof=1) / math.sqrt(n))
    se_y = float(B[(slice(None),) + at].std(ddof=1) / math.sqrt(n))
    return float(d.std(ddof=1) / math.sqrt(n)), se_x, se_y


def outlier_experiment(N=500, m=100, n=30, seed=0, params=PipelineParams(),
                       prefilter=None, noise=0.0):
    """Average vs closest-sample vs full landscape with one outlier at the origin.

    Both arms use the same subsample index draws, so the averages differ
    only through the subsamples that hit the swapped point.
    """
    params = params.validate()
    X, Y, G = circle_with_outlier(N, seed, noise=noise)
    T = resolve_T(params, X, Y)
    kept = {}
    if prefilter is not None:
        X, kept["X"] = filtered_cloud(X, prefilter)
        Y, kept["Y"] = filtered_cloud(Y, prefilter)
    scheme = SubsampleScheme(m, n, seed)
    full_x, _ = cloud_landscape(X, params, T)
    full_y, _ = cloud_landscape(Y, params, T)
    clean, _ = cloud_landscape(G, params, T)
    avg_x = average_landscape(X, scheme, params, T=T)
    avg_y = average_landscape(Y, scheme, params, T=T)
    close_x = closest_sample_landscape(X, None, scheme, params, T=T)
    close_y = closest_sample_landscape(Y, None, scheme, params, T=T)
    se, se_x, se_y = _paired_stderr(avg_x.landscapes, avg_y.landscapes)
    report = {
        "N": N, "m": m, "n": n, "seed": seed, "T": T,
        "cap_m_over_N": m / N,
        "full_gap": linf_distance(full_x, full_y),
        "average_gap": linf_distance(avg_x.estimate, avg_y.estimate),
        "closest_gap": linf_distance(close_x.estimate, close_y.estimate),
        "average_vs_clean": linf_distance(avg_y.estimate, clean),
        "closest_vs_clean": linf_distance(close_y.estimate, clean),
        "full_vs_clean": linf_distance(full_y, clean),
        "average_gap_stderr": se,
        "stderr_X": se_x,
        "stderr_Y": se_y,
        "closest_selected": {"X": close_x.selected, "Y": close_y.selected},
        "closest_hausdorff": {"X": close_x.diagnostics[close_x.selected]["hausdorff"],
                              "Y": close_y.diagnostics[close_y.selected]["hausdorff"]},
        "prefiltered": prefilter is not None,
    }
    if prefilter is not None:
        report["kept"] = {k: int(len(v)) for k, v in kept.items()}
    return report


def outlier_replications(R=20, N=500, m=100, n=30, seed=0, params=PipelineParams(), **kw):
    """Run the experiment on seeds seed..seed+R-1 and tally the votes."""
    runs = [outlier_experiment(N, m, n, seed + r, params, **kw) for r in range(R)]
    wins = sum(r["average_vs_clean"] < r["closest_vs_clean"] for r in runs)
    return {"replications": runs, "average_beats_closest": wins, "R": R,
            "majority": wins > R / 2}

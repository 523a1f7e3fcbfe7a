"""Subsampling estimators of the persistence landscape.

Two estimators are provided: the average of the landscapes of n random
subsamples, and the landscape of the subsample closest (in Hausdorff
distance) to a known reference set.  Also here: bootstrap confidence
bands, dissimilarity matrices and closed-form evaluators of the bias
bounds.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import SublandscapeError, SubsampleError
from .landscape import DEFAULT_G, DEFAULT_K, Landscape, average, build_landscape, linf_distance
from .metricspace import SubsampleScheme, diameter, sample_iid, stream_rng, subset_hausdorff
from .persistence import rips_diagram
from .rips import DEFAULT_BUDGET, MAX_DIM_CAP

BAND_METHOD = "nonparametric bootstrap of the sup-norm deviation of the mean"


@dataclass(frozen=True)
class PipelineParams:
    """Settings shared by every subsample -> Rips -> diagram -> landscape job.

    ``threshold=None`` uses each subsample's own diameter (the full Rips
    complex); ``T=None`` lets the caller pick the diameter of the data.
    """

    dim: int = 1
    max_dim: int | None = None
    threshold: float | None = None
    T: float | None = None
    K: int = DEFAULT_K
    G: int = DEFAULT_G
    budget: int = DEFAULT_BUDGET
    max_dim_cap: int = MAX_DIM_CAP
    threads: int = 1

    @property
    def homology_dim(self):
        return self.dim if self.max_dim is None else self.max_dim

    def validate(self):
        if self.dim < 0 or self.homology_dim < self.dim:
            raise SublandscapeError("bad-max-dim", "max_dim must be >= dim >= 0")
        if self.homology_dim > self.max_dim_cap:
            raise SublandscapeError("bad-max-dim", f"max_dim above cap {self.max_dim_cap}")
        if self.threshold is not None and not self.threshold > 0:
            raise SublandscapeError("bad-threshold", "threshold must be positive")
        if self.T is not None and not self.T > 0:
            raise SublandscapeError("bad-T", "T must be positive")
        if self.G < 2 or self.K < 1:
            raise SublandscapeError("bad-grid", "need G >= 2 and K >= 1")
        if self.threads < 1:
            raise SublandscapeError("bad-threads", "threads must be >= 1")
        return self


def resolve_T(params, *clouds):
    """Truncation bound: ``params.T`` or the largest diameter among ``clouds``."""
    if params.T is not None:
        return float(params.T)
    T = max(diameter(c) for c in clouds)
    return T if T > 0 else 1.0


def fan_out(fn, items, threads=1):
    """``[fn(x) for x in items]``, optionally on a thread pool; order kept."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def matrix_diagram(D, params, T):
    thr = params.threshold
    if thr is None:
        thr = float(D.max()) if D.size else 0.0
        if thr <= 0:
            thr = 1.0  # all points coincide; any positive scale gives the same complex
    return rips_diagram(D, params.homology_dim, thr, T, budget=params.budget,
                        max_dim_cap=params.max_dim_cap)


def cloud_landscape(cloud, params, T, idx=None):
    """(landscape, diagram) of ``cloud`` or of its index subset ``idx``."""
    D = cloud.distance_matrix() if idx is None else cloud.subset_matrix(idx)
    dgm = matrix_diagram(D, params, T)
    return build_landscape(dgm, params.dim, params.K, params.G), dgm


@dataclass
class EstimatorReport:
    estimate: Landscape
    diagnostics: list
    wall_time: float
    scheme: SubsampleScheme
    method: str
    selected: int | None = None
    landscapes: list = field(default_factory=list, repr=False)

    def to_dict(self, estimate_path=None):
        return {
            "method": self.method,
            "estimate_path": estimate_path,
            "T": self.estimate.T,
            "G": self.estimate.G,
            "K": self.estimate.K,
            "scheme": {"m": self.scheme.m, "n": self.scheme.n, "seed": self.scheme.seed,
                       "replacement": self.scheme.replacement},
            "selected": self.selected,
            "diagnostics": self.diagnostics,
            "wall_time": self.wall_time,
        }


def subsample_landscapes(cloud, scheme, params, T, stream=0):
    """Landscapes (and diagram sizes) of the n subsamples, in index order."""
    draws = sample_iid(cloud, scheme, stream=stream)

    def job(i):
        try:
            land, dgm = cloud_landscape(cloud, params, T, draws[i])
        except SublandscapeError as exc:
            raise SubsampleError(i, exc) from exc
        return land, len(dgm.in_dim(params.dim))

    return draws, fan_out(job, range(scheme.n), params.threads)


def average_landscape(cloud, scheme, params=PipelineParams(), stream=0, T=None):
    """Mean of the landscapes of n i.i.d. subsamples of size m."""
    params = params.validate()
    T = resolve_T(params, cloud) if T is None else T
    t0 = time.perf_counter()
    _, results = subsample_landscapes(cloud, scheme, params, T, stream)
    lands = [r[0] for r in results]
    est = average(lands)
    diag = [{"index": i, "hausdorff": None, "diagram_size": r[1]} for i, r in enumerate(results)]
    return EstimatorReport(est, diag, time.perf_counter() - t0, scheme, "average", None, lands)


def _reference_indices(cloud, reference):
    if reference is None:
        return np.arange(len(cloud))
    ref = np.asarray(reference)
    if ref.size == 0:
        raise SublandscapeError("empty-set", "reference set is empty")
    return ref.astype(np.int64)


def closest_sample_landscape(cloud, reference=None, scheme=None, params=PipelineParams(),
                             stream=0, T=None):
    """Landscape of the subsample nearest to ``reference`` in Hausdorff distance.

    ``reference`` indexes the known support inside ``cloud``; None means
    the whole cloud.  Ties go to the lowest subsample index.
    """
    params = params.validate()
    T = resolve_T(params, cloud) if T is None else T
    ref = _reference_indices(cloud, reference)
    t0 = time.perf_counter()
    draws = sample_iid(cloud, scheme, stream=stream)
    dists = fan_out(lambda idx: subset_hausdorff(cloud, idx, ref), draws, params.threads)
    best = int(np.argmin(dists))
    try:
        land, dgm = cloud_landscape(cloud, params, T, draws[best])
    except SublandscapeError as exc:
        raise SubsampleError(best, exc) from exc
    diag = [{"index": i, "hausdorff": float(h),
             "diagram_size": len(dgm.in_dim(params.dim)) if i == best else None}
            for i, h in enumerate(dists)]
    return EstimatorReport(land, diag, time.perf_counter() - t0, scheme, "closest", best, [land])


@dataclass(frozen=True)
class ConfidenceBand:
    center: Landscape
    half_width: float
    alpha: float
    B: int
    method: str = BAND_METHOD

    @property
    def lower(self):
        return Landscape(np.maximum(self.center.values - self.half_width, 0.0), self.center.T)

    @property
    def upper(self):
        return Landscape(self.center.values + self.half_width, self.center.T)

    def to_dict(self, center_path=None):
        return {"center_path": center_path, "half_width": self.half_width, "alpha": self.alpha,
                "B": self.B, "method": self.method}


def bootstrap_band(landscapes, alpha=0.05, B=1000, seed=0):
    """Uniform band: (1 - alpha) quantile of ||mean* - mean||_inf over B resamples."""
    landscapes = list(landscapes)
    if len(landscapes) < 2:
        raise SublandscapeError("insufficient-samples", "need at least two landscapes")
    if not 0 < alpha < 1:
        raise SublandscapeError("bad-alpha", "alpha must lie in (0, 1)")
    if B < 100:
        raise SublandscapeError("bad-B", "B must be >= 100")
    center = average(landscapes)
    n = len(landscapes)
    flat = np.stack([x.values.ravel() for x in landscapes])
    rng = stream_rng(seed, 0xB007)
    counts = rng.multinomial(n, np.full(n, 1.0 / n), size=B)
    # resampled means minus the mean, both taken relative to the first
    # landscape so that identical inputs give exactly zero
    rel = flat - flat[0]
    dev = (counts / n) @ rel - rel.mean(axis=0)[None, :]
    sup = np.max(np.abs(dev), axis=1)
    hw = float(np.quantile(sup, 1 - alpha, method="inverted_cdf"))
    return ConfidenceBand(center, hw, float(alpha), int(B))


def dissimilarity_matrix(clouds, scheme, params=PipelineParams()):
    """Pairwise sup-norm distances between average landscapes.

    Every cloud uses the same subsampling streams and the same grid, and
    each average is computed once.
    """
    clouds = list(clouds)
    if len(clouds) < 2:
        raise SublandscapeError("too-few-clouds", "need at least two clouds")
    params = params.validate()
    T = resolve_T(params, *clouds)
    avgs = [average_landscape(c, scheme, params, T=T).estimate for c in clouds]
    k = len(avgs)
    M = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            M[i, j] = M[j, i] = linf_distance(avgs[i], avgs[j])
    return M, avgs


def estimate_expected_hausdorff(cloud, reference=None, m=100, B=200, seed=0, stream=0x4A):
    """Monte-Carlo mean and standard error of H(X, reference), X an m-subsample."""
    if B < 1:
        raise SublandscapeError("bad-B", "B must be >= 1")
    ref = _reference_indices(cloud, reference)
    draws = sample_iid(cloud, SubsampleScheme(m, B, seed), stream=stream)
    h = np.array([subset_hausdorff(cloud, idx, ref) for idx in draws])
    se = float(h.std(ddof=1) / math.sqrt(B)) if B > 1 else None
    return float(h.mean()), se


def risk_curves(cloud, ms=(25, 100, 400), ns=(5, 20, 80), m_var=100, B=100, reps=20,
                ref_pool=200, params=PipelineParams(), seed=0):
    """Monte-Carlo bias and variance proxies.

    Bias proxy at each m: mean Hausdorff distance from an m-subsample to
    the cloud.  Variance proxy at each n: mean over ``reps`` replicates of
    ||average of n landscapes - reference mean||_inf at fixed ``m_var``,
    the reference mean being taken over an independent pool.
    """
    params = params.validate()
    T = resolve_T(params, cloud)
    bias = []
    for m in ms:
        mean, se = estimate_expected_hausdorff(cloud, None, m, B, seed)
        bias.append({"m": int(m), "mean_hausdorff": mean, "stderr": se})
    _, pool = subsample_landscapes(cloud, SubsampleScheme(m_var, ref_pool, seed), params, T,
                                   stream=0x7E)
    ref = average([r[0] for r in pool])
    total = reps * sum(ns)
    _, fresh = subsample_landscapes(cloud, SubsampleScheme(m_var, total, seed), params, T,
                                    stream=0x7F)
    fresh = [r[0] for r in fresh]
    variance = []
    start = 0
    for n in ns:
        gaps = []
        for _ in range(reps):
            gaps.append(linf_distance(average(fresh[start:start + n]), ref))
            start += n
        gaps = np.array(gaps)
        variance.append({"n": int(n), "mean_sup_deviation": float(gaps.mean()),
                         "stderr": float(gaps.std(ddof=1) / math.sqrt(reps)) if reps > 1 else None})
    return {"bias": bias, "variance": variance, "m_var": int(m_var), "T": T}


@dataclass(frozen=True)
class StandardAssumption:
    """mu(B(x, r)) >= min(1, a r^b) for every r > r0 and x in the support."""

    a: float
    b: float
    r0: float = 0.0

    def __post_init__(self):
        if not self.a > 0 or not self.b > 0 or not self.r0 >= 0:
            raise SublandscapeError("bad-assumption", "need a > 0, b > 0, r0 >= 0")


def bound_rm(assumption, m):
    """Rate term 2 (log m / (a m))^(1/b)."""
    if m < 2:
        raise SublandscapeError("m-too-small", "need m >= 2 so that log m > 0")
    return 2.0 * (math.log(m) / (assumption.a * m)) ** (1.0 / assumption.b)


def _indicator_term(r0, rm):
    return rm if rm > r0 else 0.0


def bound_average_bias(assumption, m, C1=1.0):
    """r0 + r_m 1{r_m > r0} + C1 r_m / (log m)^2."""
    rm = bound_rm(assumption, m)
    return assumption.r0 + _indicator_term(assumption.r0, rm) + C1 * rm / math.log(m) ** 2


def bound_closest(assumption, m, n, C2=1.0):
    """Closest-sample bound, with its own r_m = 2 (log(2^b m) / (a m))^(1/b)."""
    if n < 1:
        raise SublandscapeError("bad-n", "n must be >= 1")
    L = math.log(2.0 ** assumption.b * m)
    if m < 1 or L <= 0:
        raise SublandscapeError("m-too-small", "need log(2^b m) > 0")
    rm = 2.0 * (L / (assumption.a * m)) ** (1.0 / assumption.b)
    return assumption.r0 + _indicator_term(assumption.r0, rm) + C2 * rm / (n * L ** (n + 1))


def bound_stability_hausdorff(assumption, m, hausdorff_supports, C1=1.0):
    """H(supports) + 2 r0 + 2 r_m 1{r_m > r0} + 2 C1 r_m / (log m)^2."""
    rm = bound_rm(assumption, m)
    return (hausdorff_supports + 2 * assumption.r0 + 2 * _indicator_term(assumption.r0, rm)
            + 2 * C1 * rm / math.log(m) ** 2)


def compute_r0_discrete(Kconst, vc_dim, a_prime, b, N):
    """(K v / a' * log N / N)^(1/b).

    ``Kconst`` is the universal constant of the relative VC deviation
    inequality and must be supplied by the caller.
    """
    if N < 2:
        raise SublandscapeError("N-too-small", "need N >= 2")
    if min(Kconst, vc_dim, a_prime, b) <= 0:
        raise SublandscapeError("bad-constants", "constants must be positive")
    return (Kconst * vc_dim / a_prime * math.log(N) / N) ** (1.0 / b)

"""Exact Wasserstein distances between finitely supported measures."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import BudgetError, SublandscapeError
from .estimators import PipelineParams, bound_stability_hausdorff, cloud_landscape, fan_out
from .metricspace import PointCloud, SubsampleScheme, diameter, hausdorff, stream_rng

DEFAULT_SUPPORT_CAP = 512
FIXED_POINT = 10 ** 9


@dataclass(frozen=True)
class DiscreteMeasure:
    support: PointCloud
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or len(w) != len(self.support):
            raise SublandscapeError("bad-measure", "one weight per support point required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise SublandscapeError("bad-measure", "weights must be nonnegative and sum to 1")
        if self.support.points is None:
            raise SublandscapeError("bad-measure", "measures need coordinate supports")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points):
        cloud = points if isinstance(points, PointCloud) else PointCloud(points)
        return cls(cloud, np.full(len(cloud), 1.0 / len(cloud)))

    def sample(self, m, rng):
        return rng.choice(len(self.weights), size=m, replace=True, p=self.weights)


def integer_masses(weights_a, weights_b):
    """Scale two weight vectors to integer vectors of equal total.

    Uses the least common denominator when every weight is (to double
    precision) a fraction with denominator <= 1e6, otherwise 1e9
    fixed-point rounding with the residue put on the largest atom.
    Returns (a, b, scale).
    """
    fa = [Fraction(float(w)).limit_denominator(10 ** 6) for w in weights_a]
    fb = [Fraction(float(w)).limit_denominator(10 ** 6) for w in weights_b]
    exact = all(abs(float(f) - float(w)) <= 1e-15 for f, w in zip(fa, weights_a)) and \
        all(abs(float(f) - float(w)) <= 1e-15 for f, w in zip(fb, weights_b))
    if exact and sum(fa) == sum(fb):
        lcd = 1
        for f in fa + fb:
            lcd = lcd * f.denominator // math.gcd(lcd, f.denominator)
        if lcd <= 10 ** 12:
            a = np.array([int(f * lcd) for f in fa], dtype=np.int64)
            b = np.array([int(f * lcd) for f in fb], dtype=np.int64)
            return a, b, lcd
    a = np.rint(np.asarray(weights_a) * FIXED_POINT).astype(np.int64)
    b = np.rint(np.asarray(weights_b) * FIXED_POINT).astype(np.int64)
    a[np.argmax(a)] += FIXED_POINT - a.sum()
    b[np.argmax(b)] += FIXED_POINT - b.sum()
    if a.sum() != b.sum() or np.any(a < 0) or np.any(b < 0):
        raise RuntimeError("integer mass scaling broke mass balance")
    return a, b, FIXED_POINT


@njit(cache=True)
def min_cost_flow(C, supply, demand):
    """Transportation problem by successive shortest paths with potentials.

    Dense Dijkstra on the residual bipartite graph; returns the integer
    flow matrix.
    """
    n, m = C.shape
    V = n + m
    F = np.zeros((n, m), dtype=np.int64)
    sa = supply.copy()
    db = demand.copy()
    pot = np.zeros(V)
    dist = np.empty(V)
    pred = np.empty(V, dtype=np.int64)
    done = np.empty(V, dtype=np.bool_)
    while sa.sum() > 0:
        dist[:] = np.inf
        pred[:] = -1
        done[:] = False
        for i in range(n):
            if sa[i] > 0:
                dist[i] = 0.0
        for _ in range(V):
            u = -1
            best = np.inf
            for x in range(V):
                if not done[x] and dist[x] < best:
                    best = dist[x]
                    u = x
            if u < 0:
                break
            done[u] = True
            if u < n:
                for j in range(m):
                    nd = dist[u] + C[u, j] + pot[u] - pot[n + j]
                    if nd < dist[n + j] and not done[n + j]:
                        dist[n + j] = nd
                        pred[n + j] = u
            else:
                j = u - n
                for i in range(n):
                    if F[i, j] > 0 and not done[i]:
                        nd = dist[u] - C[i, j] + pot[u] - pot[i]
                        if nd < dist[i]:
                            dist[i] = nd
                            pred[i] = u
        t = -1
        best = np.inf
        for j in range(m):
            if db[j] > 0 and dist[n + j] < best:
                best = dist[n + j]
                t = j
        for x in range(V):
            pot[x] += min(dist[x], best)
        amt = db[t]
        x = n + t
        while True:
            p = pred[x]
            if p < 0:
                amt = min(amt, sa[x])
                break
            if x < n:
                amt = min(amt, F[x, p - n])
            x = p
        x = n + t
        while True:
            p = pred[x]
            if p < 0:
                sa[x] -= amt
                break
            if x >= n:
                F[p, x - n] += amt
            else:
                F[x, p - n] -= amt
            x = p
        db[t] -= amt
    return F


def _distinct_support(a, b):
    return len(np.unique(np.vstack([a, b]), axis=0))


def wasserstein(mu, nu, p=1.0, *, cap=DEFAULT_SUPPORT_CAP, method="auto"):
    """p-Wasserstein distance with ground cost rho(x, y)^p.

    ``method`` is "flow" (min-cost flow), "assignment" (only for two
    uniform measures of equal size) or "auto" (assignment when possible).
    ``cap`` bounds the number of distinct points in the union of supports.
    """
    if p < 1:
        raise SublandscapeError("bad-p", "p must be >= 1")
    A, B = mu.support.points, nu.support.points
    if A.shape[1] != B.shape[1]:
        raise SublandscapeError("dim-mismatch", "supports live in different spaces")
    size = _distinct_support(A, B)
    if size > cap:
        raise BudgetError("transport-too-large", f"{size} distinct support points > cap {cap}")
    C = cdist(A, B) ** p
    uniform = (len(A) == len(B) and np.all(mu.weights == mu.weights[0])
               and np.all(nu.weights == nu.weights[0]))
    if method == "assignment" or (method == "auto" and uniform):
        if not uniform:
            raise SublandscapeError("bad-method", "assignment needs equal-size uniform measures")
        r, c = linear_sum_assignment(C)
        cost = C[r, c].sum() / len(A)
    elif method in ("auto", "flow"):
        a, b, scale = integer_masses(mu.weights, nu.weights)
        keep_a, keep_b = a > 0, b > 0
        F = min_cost_flow(np.ascontiguousarray(C[np.ix_(keep_a, keep_b)]), a[keep_a], b[keep_b])
        cost = float((F * C[np.ix_(keep_a, keep_b)]).sum()) / scale
    else:
        raise SublandscapeError("bad-method", f"unknown method {method!r}")
    return max(cost, 0.0) ** (1.0 / p)


@dataclass
class StabilityReport:
    m: int
    p: float
    trials: int
    seed: int
    lhs: float
    stderr: float
    rhs: float
    wasserstein: float
    grid_error: float
    T: float

    @property
    def margin(self):
        return self.rhs - self.lhs

    @property
    def violated(self):
        return self.lhs > self.rhs + 3 * self.stderr + self.grid_error

    def to_dict(self):
        return {
            "inputs": {"m": self.m, "p": self.p, "trials": self.trials, "seed": self.seed, "T": self.T},
            "lhs": self.lhs,
            "stderr": self.stderr,
            "rhs": self.rhs,
            "wasserstein": self.wasserstein,
            "grid_error": self.grid_error,
            "margin": self.margin,
            "violated": self.violated,
        }


def _monte_carlo_gap(mu, nu, m, trials, seed, params):
    if trials < 100:
        raise SublandscapeError("bad-trials", "trials must be >= 100")
    SubsampleScheme(m, trials, seed)
    params = params.validate()
    if params.T is not None:
        T = params.T
    else:
        T = diameter(PointCloud(np.vstack([mu.support.points, nu.support.points])))
    LX = _measure_landscapes(mu, m, trials, seed, 1, params, T)
    LY = _measure_landscapes(nu, m, trials, seed, 2, params, T)
    diff = LX.mean(axis=0) - LY.mean(axis=0)
    at = np.unravel_index(np.argmax(np.abs(diff)), diff.shape)
    lhs = float(abs(diff[at]))
    se = float(math.sqrt(LX[(slice(None),) + at].var(ddof=1) / trials
                         + LY[(slice(None),) + at].var(ddof=1) / trials))
    return lhs, se, T, T / (params.G - 1)


def _measure_landscapes(measure, m, trials, seed, stream, params, T):
    cloud = measure.support

    def job(i):
        idx = measure.sample(m, stream_rng(seed, stream, i))
        return cloud_landscape(cloud, params, T, idx)[0].values

    return np.stack(fan_out(job, range(trials), params.threads))


def verify_stability_wasserstein(mu, nu, m, p=1.0, trials=2000, seed=0,
                                 params=PipelineParams(), *, wasserstein_kw=None):
    """Monte-Carlo check of ||E lambda_X - E lambda_Y||_inf <= m^(1/p) W_p(mu, nu).

    The stderr is that of the difference of the two means at the grid point
    where the sup is attained.
    """
    lhs, se, T, grid_err = _monte_carlo_gap(mu, nu, m, trials, seed, params)
    W = wasserstein(mu, nu, p, **(wasserstein_kw or {}))
    rhs = m ** (1.0 / p) * W
    return StabilityReport(int(m), float(p), int(trials), int(seed), lhs, se, rhs, W, grid_err, T)


def verify_stability_hausdorff(mu, nu, m, assumption, C1=1.0, trials=2000, seed=0,
                               params=PipelineParams()):
    """Same Monte-Carlo gap, compared with the support-Hausdorff bound.

    The right-hand side depends on the user-supplied (a, b, r0) and C1.
    The ``wasserstein`` field of the report holds H(supports).
    """
    lhs, se, T, grid_err = _monte_carlo_gap(mu, nu, m, trials, seed, params)
    H = hausdorff(mu.support.points[mu.weights > 0], nu.support.points[nu.weights > 0])
    rhs = bound_stability_hausdorff(assumption, m, H, C1)
    return StabilityReport(int(m), 1.0, int(trials), int(seed), lhs, se, rhs, H, grid_err, T)


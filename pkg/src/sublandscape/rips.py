"""Vietoris-Rips filtrations.

Filtration values use the diameter convention: a simplex enters at the
largest pairwise distance among its vertices.  Simplices are ordered by
(value, dim, vertex tuple).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import NamedTuple

import numpy as np

from .errors import BudgetError, SublandscapeError

DEFAULT_BUDGET = 50_000_000
MAX_DIM_CAP = 3


class Simplex(NamedTuple):
    vertices: tuple
    value: float

    @property
    def dim(self):
        return len(self.vertices) - 1


@dataclass(frozen=True)
class Filtration:
    simplices: tuple
    max_dim: int
    threshold: float

    def __len__(self):
        return len(self.simplices)

    def counts(self):
        out = [0] * (self.max_dim + 2)
        for s in self.simplices:
            out[s.dim] += 1
        return tuple(out)

    def dump(self, path):
        """Write one simplex per line as ``value dim v0 v1 ...``."""
        with open(path, "w", encoding="utf-8") as fh:
            for s in self.simplices:
                fh.write(" ".join([format(s.value, ".17g"), str(s.dim), *map(str, s.vertices)]) + "\n")


def _matrix(cloud_or_matrix):
    if hasattr(cloud_or_matrix, "distance_matrix"):
        return cloud_or_matrix.distance_matrix()
    return np.asarray(cloud_or_matrix, dtype=np.float64)


def _check_args(n, max_dim, threshold, max_dim_cap):
    if n < 1:
        raise SublandscapeError("empty-set", "empty point cloud")
    if max_dim < 0:
        raise SublandscapeError("bad-max-dim", "max_dim must be >= 0")
    if max_dim > max_dim_cap:
        raise SublandscapeError("bad-max-dim", f"max_dim {max_dim} above cap {max_dim_cap}")
    if not threshold > 0:
        raise SublandscapeError("bad-threshold", "threshold must be positive")


def _edges(D, threshold):
    iu, ju = np.nonzero(np.triu(D <= threshold, 1))
    return np.column_stack([iu, ju]).astype(np.int64), D[iu, ju]


def estimate_counts(D, top_dim, threshold):
    """Upper bounds on the number of simplices of each dim up to ``top_dim``.

    Dims 0 and 1 are exact.  A k-simplex is counted at its smallest vertex,
    which picks k of its larger-index neighbours, so sum_v C(up_deg(v), k)
    bounds the k-simplex count.
    """
    n = D.shape[0]
    adj = np.triu(D <= threshold, 1)
    up = adj.sum(axis=1)
    out = [n]
    if top_dim >= 1:
        out.append(int(up.sum()))
    for k in range(2, top_dim + 1):
        out.append(int(sum(comb(int(u), k) for u in up)))
    return tuple(out)


def check_budget(D, top_dim, threshold, budget=DEFAULT_BUDGET):
    est = estimate_counts(D, top_dim, threshold)
    for k, c in enumerate(est):
        if c > budget:
            raise BudgetError("complexity-budget",
                              f"dimension {k}: estimated {c} simplices exceeds budget {budget}")
    return est


def _expand(D, adj, verts, vals, chunk=4096):
    """All cofaces obtained by appending a larger common neighbour."""
    n = D.shape[0]
    above = np.arange(n)[None, :]
    new_v, new_x = [], []
    for s in range(0, len(verts), chunk):
        S = verts[s:s + chunk]
        mask = adj[S[:, 0]].copy()
        for c in range(1, S.shape[1]):
            mask &= adj[S[:, c]]
        mask &= above > S[:, -1][:, None]
        rows, w = np.nonzero(mask)
        if rows.size == 0:
            continue
        base = S[rows]
        val = vals[s:s + chunk][rows]
        for c in range(S.shape[1]):
            val = np.maximum(val, D[base[:, c], w])
        new_v.append(np.column_stack([base, w]))
        new_x.append(val)
    width = verts.shape[1] + 1
    if not new_v:
        return np.empty((0, width), dtype=np.int64), np.empty(0)
    return np.concatenate(new_v).astype(np.int64), np.concatenate(new_x)


def rips_arrays(D, top_dim, threshold):
    """Per-dimension (vertices, values) arrays for all simplices up to ``top_dim``."""
    n = D.shape[0]
    adj = D <= threshold
    np.fill_diagonal(adj, False)
    layers = [(np.arange(n, dtype=np.int64)[:, None], np.zeros(n))]
    if top_dim >= 1:
        layers.append(_edges(D, threshold))
    for _ in range(2, top_dim + 1):
        layers.append(_expand(D, adj, *layers[-1]))
    return layers


def build_rips(cloud, max_dim, threshold, *, budget=DEFAULT_BUDGET, max_dim_cap=MAX_DIM_CAP):
    """Rips filtration with simplices up to dimension ``max_dim + 1``.

    The extra dimension is what kills ``max_dim``-dimensional classes.
    """
    D = _matrix(cloud)
    _check_args(D.shape[0], max_dim, threshold, max_dim_cap)
    check_budget(D, max_dim + 1, threshold, budget)
    layers = rips_arrays(D, max_dim + 1, threshold)
    simplices = []
    for verts, vals in layers:
        simplices.extend(Simplex(tuple(int(v) for v in row), float(x)) for row, x in zip(verts, vals))
    simplices.sort(key=lambda s: (s.value, len(s.vertices), s.vertices))
    return Filtration(tuple(simplices), int(max_dim), float(threshold))


def count_simplices(cloud, max_dim, threshold, exact=False):
    """Number of simplices of each dimension 0..max_dim.

    Here ``max_dim`` is a simplex dimension: to match ``build_rips(c, d, t)``
    ask for ``count_simplices(c, d + 1, t, exact=True)``.  Without ``exact``
    dims >= 2 are the cheap upper bounds of :func:`estimate_counts`.
    """
    D = _matrix(cloud)
    if not exact:
        return estimate_counts(D, max_dim, threshold)
    n = D.shape[0]
    adj = D <= threshold
    np.fill_diagonal(adj, False)
    out = [n]
    if max_dim >= 1:
        verts, vals = _edges(D, threshold)
        out.append(len(verts))
        for _ in range(2, max_dim + 1):
            verts, vals = _expand(D, adj, verts, vals)
            out.append(len(verts))
    return tuple(out)

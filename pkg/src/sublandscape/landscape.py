"""Persistence landscapes sampled on a uniform grid over [0, T]."""

from __future__ import annotations

import numpy as np

from ._io import fmt
from .errors import SublandscapeError

DEFAULT_G = 1024
DEFAULT_K = 1


def grid(T, G):
    return np.linspace(0.0, float(T), int(G))


def tent(p, t):
    """Tent function of the diagram point ``p = (birth, death)`` at ``t``."""
    b, d = p
    t = np.asarray(t, dtype=np.float64)
    out = np.maximum(np.minimum(t - b, d - t), 0.0)
    return float(out) if out.ndim == 0 else out


class Landscape:
    """``values[k, g]`` is the (k+1)-th landscape function at ``t_g``."""

    __slots__ = ("T", "values")

    def __init__(self, values, T):
        v = np.array(values, dtype=np.float64)
        if v.ndim == 1:
            v = v[None, :]
        if v.shape[1] < 2:
            raise SublandscapeError("bad-grid", "grid size G must be >= 2")
        v.setflags(write=False)
        self.values = v
        self.T = float(T)

    @property
    def K(self):
        return self.values.shape[0]

    @property
    def G(self):
        return self.values.shape[1]

    @property
    def t(self):
        return grid(self.T, self.G)

    @property
    def spacing(self):
        return self.T / (self.G - 1)

    def __repr__(self):
        return f"Landscape(K={self.K}, G={self.G}, T={self.T})"

    def check(self, atol=1e-12):
        """Raise if ordering, nonnegativity or the Lipschitz bound fail."""
        v = self.values
        if np.any(v < 0):
            raise SublandscapeError("bad-landscape", "negative value")
        if np.any(v[:-1] < v[1:]):
            raise SublandscapeError("bad-landscape", "layers not ordered")
        if np.any(np.abs(np.diff(v, axis=1)) > self.spacing + atol):
            raise SublandscapeError("bad-landscape", "Lipschitz bound violated")

    def to_csv(self, path):
        header = ",".join(["t"] + [f"k{k + 1}" for k in range(self.K)])
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for g, tg in enumerate(self.t):
                fh.write(",".join([fmt(tg)] + [fmt(x) for x in self.values[:, g]]) + "\n")

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 1:].T, data[-1, 0])


def build_landscape(diagram, dim=1, K=DEFAULT_K, G=DEFAULT_G, T=None):
    """Landscape of the ``dim`` part of ``diagram`` on a G-point grid.

    Layer k at t is the k-th largest tent value there, 0 if fewer than k
    points exist.
    """
    if G < 2:
        raise SublandscapeError("bad-grid", "grid size G must be >= 2")
    if K < 1:
        raise SublandscapeError("bad-depth", "K must be >= 1")
    T = diagram.T if T is None else float(T)
    t = grid(T, G)
    pts = diagram.in_dim(dim)
    values = np.zeros((K, G))
    if len(pts):
        tents = np.maximum(np.minimum(t[None, :] - pts[:, :1], pts[:, 1:] - t[None, :]), 0.0)
        if len(pts) <= K:
            top = -np.sort(-tents, axis=0)
        else:
            part = -np.partition(-tents, K - 1, axis=0)[:K]
            top = -np.sort(-part, axis=0)
        values[:top.shape[0]] = top
    return Landscape(values, T)


def _check_grid(a, b):
    if a.T != b.T or a.values.shape != b.values.shape:
        raise SublandscapeError("grid-mismatch", f"{a!r} vs {b!r}")


def linf_distance(a, b):
    _check_grid(a, b)
    return float(np.max(np.abs(a.values - b.values)))


def average(landscapes):
    """Pointwise mean of landscapes on a common grid."""
    landscapes = list(landscapes)
    if not landscapes:
        raise SublandscapeError("empty-average", "cannot average zero landscapes")
    first = landscapes[0]
    for other in landscapes[1:]:
        _check_grid(first, other)
    stack = np.stack([x.values for x in landscapes])
    return Landscape(stack.mean(axis=0), first.T)


def zeros_like(a):
    return Landscape(np.zeros_like(a.values), a.T)

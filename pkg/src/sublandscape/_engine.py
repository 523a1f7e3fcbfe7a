"""Compiled Rips persistence kernel.

Simplices are never materialised above the column dimension: a k-simplex
is an integer in the combinatorial number system and its cofacets are
enumerated on the fly.  Dimension 0 is handled by union-find, higher
dimensions by reducing the coboundary matrix with clearing.  The resulting
pairs are the same as those of the boundary-matrix reduction for any
refinement of the diameter order.

Orders used throughout: simplices of one dimension are sorted by
(diameter, index) ascending; coboundary columns are processed in the
reverse of that order.
"""

import heapq

import numpy as np
from numba import njit, types
from numba.typed import Dict, List


@njit(cache=True)
def binomial_table(n, k):
    B = np.zeros((n + 1, k + 1), dtype=np.int64)
    for i in range(n + 1):
        B[i, 0] = 1
        for j in range(1, min(i, k) + 1):
            B[i, j] = B[i - 1, j - 1] + (B[i - 1, j] if j <= i - 1 else 0)
    return B


@njit(cache=True)
def decode(idx, k, n, B, out):
    """Vertices (ascending) of the k-simplex with colex index ``idx``."""
    v = n - 1
    for j in range(k, -1, -1):
        while B[v, j + 1] > idx:
            v -= 1
        out[j] = v
        idx -= B[v, j + 1]
        v -= 1


@njit(cache=True)
def decode_all(idx, k, n, B):
    out = np.empty((idx.shape[0], k + 1), dtype=np.int64)
    for r in range(idx.shape[0]):
        decode(idx[r], k, n, B, out[r])
    return out


@njit(cache=True)
def simplex_diam(D, verts, k):
    d = 0.0
    for a in range(k + 1):
        for b in range(a + 1, k + 1):
            x = D[verts[a], verts[b]]
            if x > d:
                d = x
    return d


@njit(cache=True, nogil=True)
def union_find_h0(n, eu, ev):
    """Kruskal pass over edges given in filtration order.

    Returns the positions of the merging edges.
    """
    parent = np.arange(n)
    merges = np.empty(max(n - 1, 0), dtype=np.int64)
    c = 0
    for e in range(eu.shape[0]):
        a = eu[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = ev[e]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            if a < b:
                parent[b] = a
            else:
                parent[a] = b
            merges[c] = e
            c += 1
            if c == n - 1:
                break
    return merges[:c]


@njit(cache=True, nogil=True)
def enumerate_cofaces_up(D, thr, verts, k, n, B):
    """All (k+1)-simplices obtained by appending a vertex above the last one.

    ``verts`` is an (M, k+1) ascending vertex array; returns (index, diam).
    """
    cap = 1024
    out_i = np.empty(cap, dtype=np.int64)
    out_d = np.empty(cap, dtype=np.float64)
    c = 0
    for r in range(verts.shape[0]):
        base = 0
        for j in range(k + 1):
            base += B[verts[r, j], j + 1]
        d0 = simplex_diam(D, verts[r], k)
        for w in range(verts[r, k] + 1, n):
            d = d0
            ok = True
            for j in range(k + 1):
                x = D[w, verts[r, j]]
                if x > thr:
                    ok = False
                    break
                if x > d:
                    d = x
            if not ok:
                continue
            if c == cap:
                cap *= 2
                ni = np.empty(cap, dtype=np.int64)
                nd = np.empty(cap, dtype=np.float64)
                ni[:c] = out_i[:c]
                nd[:c] = out_d[:c]
                out_i = ni
                out_d = nd
            out_i[c] = base + B[w, k + 2]
            out_d[c] = d
            c += 1
    return out_i[:c], out_d[:c]


@njit(cache=True)
def _push_coboundary(heap, D, thr, sidx, k, n, B, verts, low, high):
    decode(sidx, k, n, B, verts)
    d0 = simplex_diam(D, verts, k)
    # low[p]: contribution of the p smallest vertices, high[p]: shifted rest
    low[0] = 0
    for p in range(k + 1):
        low[p + 1] = low[p] + B[verts[p], p + 1]
    high[k + 1] = 0
    for p in range(k, -1, -1):
        high[p] = high[p + 1] + B[verts[p], p + 2]
    p = 0
    for w in range(n):
        if p <= k and verts[p] == w:
            p += 1
            continue
        d = d0
        ok = True
        for j in range(k + 1):
            x = D[w, verts[j]]
            if x > thr:
                ok = False
                break
            if x > d:
                d = x
        if ok:
            heapq.heappush(heap, (d, low[p] + B[w, p + 1] + high[p]))


@njit(cache=True)
def _min_cofacet(D, thr, sidx, k, n, B, verts, low, high):
    decode(sidx, k, n, B, verts)
    d0 = simplex_diam(D, verts, k)
    low[0] = 0
    for p in range(k + 1):
        low[p + 1] = low[p] + B[verts[p], p + 1]
    high[k + 1] = 0
    for p in range(k, -1, -1):
        high[p] = high[p + 1] + B[verts[p], p + 2]
    best_d = np.inf
    best_i = -1
    p = 0
    for w in range(n):
        if p <= k and verts[p] == w:
            p += 1
            continue
        d = d0
        ok = True
        for j in range(k + 1):
            x = D[w, verts[j]]
            if x > thr:
                ok = False
                break
            if x > d:
                d = x
        if ok:
            idx = low[p] + B[w, p + 1] + high[p]
            if d < best_d or (d == best_d and idx < best_i):
                best_d = d
                best_i = idx
    return best_d, best_i


@njit(cache=True)
def _pop_pivot(heap):
    while len(heap) > 0:
        top = heapq.heappop(heap)
        if len(heap) > 0 and heap[0][1] == top[1]:
            heapq.heappop(heap)
            continue
        return top
    return (np.inf, np.int64(-1))


@njit(cache=True, nogil=True)
def reduce_coboundary(D, thr, cols, col_diam, k, n, B):
    """Reduce the dimension-k coboundary matrix.

    ``cols`` are the k-simplex indices to reduce, already in processing
    order.  Returns (births, deaths, pivots) where ``deaths`` is inf for
    columns that reduce to zero and ``pivots`` lists every (k+1)-simplex
    index that became a pivot (used for clearing the next dimension).
    """
    ncol = cols.shape[0]
    births = np.empty(ncol, dtype=np.float64)
    deaths = np.empty(ncol, dtype=np.float64)
    pivots = np.empty(ncol, dtype=np.int64)
    npairs = 0
    nout = 0
    pivot_of = Dict.empty(key_type=types.int64, value_type=types.int64)
    v_start = np.zeros(ncol, dtype=np.int64)
    v_len = np.zeros(ncol, dtype=np.int64)
    v_data = List.empty_list(types.int64)
    verts = np.empty(k + 2, dtype=np.int64)
    low = np.empty(k + 2, dtype=np.int64)
    high = np.empty(k + 2, dtype=np.int64)
    for j in range(ncol):
        sidx = cols[j]
        pd, pi = _min_cofacet(D, thr, sidx, k, n, B, verts, low, high)
        if pi >= 0 and pi not in pivot_of:
            pivot_of[pi] = j
            pivots[npairs] = pi
            npairs += 1
            if pd > col_diam[j]:
                births[nout] = col_diam[j]
                deaths[nout] = pd
                nout += 1
            continue
        if pi < 0:
            births[nout] = col_diam[j]
            deaths[nout] = np.inf
            nout += 1
            continue
        heap = [(0.0, np.int64(0))]
        heap.pop()
        _push_coboundary(heap, D, thr, sidx, k, n, B, verts, low, high)
        added = List.empty_list(types.int64)
        while True:
            top = _pop_pivot(heap)
            if top[1] < 0:
                births[nout] = col_diam[j]
                deaths[nout] = np.inf
                nout += 1
                break
            heapq.heappush(heap, top)
            if top[1] not in pivot_of:
                pivot_of[top[1]] = j
                pivots[npairs] = top[1]
                npairs += 1
                if top[0] > col_diam[j]:
                    births[nout] = col_diam[j]
                    deaths[nout] = top[0]
                    nout += 1
                break
            o = pivot_of[top[1]]
            added.append(cols[o])
            _push_coboundary(heap, D, thr, cols[o], k, n, B, verts, low, high)
            for q in range(v_start[o], v_start[o] + v_len[o]):
                added.append(v_data[q])
                _push_coboundary(heap, D, thr, v_data[q], k, n, B, verts, low, high)
        if len(added) > 0:
            arr = np.empty(len(added), dtype=np.int64)
            for q in range(len(added)):
                arr[q] = added[q]
            arr.sort()
            v_start[j] = len(v_data)
            q = 0
            while q < arr.shape[0]:
                if q + 1 < arr.shape[0] and arr[q + 1] == arr[q]:
                    q += 2
                    continue
                v_data.append(arr[q])
                q += 1
            v_len[j] = len(v_data) - v_start[j]
    return births[:nout], deaths[:nout], pivots[:npairs]


def enclosing_radius(D):
    """Smallest r at which the Rips complex is a cone."""
    if D.shape[0] == 0:
        return 0.0
    return float(D.max(axis=1).min())


def rips_pairs(D, max_dim, threshold):
    """Persistence pairs of the Rips filtration of ``D``.

    Returns a list indexed by dimension of (births, deaths) arrays, with
    ``inf`` deaths for classes alive at ``threshold``.  Zero-length pairs
    are dropped.
    """
    D = np.ascontiguousarray(D, dtype=np.float64)
    n = D.shape[0]
    r_enc = enclosing_radius(D)
    # above the enclosing radius the complex is a cone: every class of
    # dim >= 1 has died, so truncating there changes no pair
    thr = min(float(threshold), r_enc) if n > 1 else float(threshold)
    B = binomial_table(n, max_dim + 2)
    out = []

    iu, ju = np.nonzero(np.triu(D <= thr, 1))
    e_diam = D[iu, ju]
    e_idx = ju.astype(np.int64) * (ju.astype(np.int64) - 1) // 2 + iu.astype(np.int64)
    order = np.lexsort((e_idx, e_diam))
    iu, ju, e_diam, e_idx = iu[order], ju[order], e_diam[order], e_idx[order]
    merges = union_find_h0(n, iu.astype(np.int64), ju.astype(np.int64))
    d0 = e_diam[merges]
    n_ess = n - len(merges)
    births0 = np.zeros(len(d0) + n_ess)
    deaths0 = np.concatenate([d0, np.full(n_ess, np.inf)])
    keep = deaths0 > births0
    out.append((births0[keep], deaths0[keep]))
    if max_dim == 0:
        return out

    # dimension-k simplices in ascending (diam, idx) order
    s_verts = np.column_stack([iu, ju]).astype(np.int64)
    s_idx, s_diam = e_idx, e_diam
    cleared = e_idx[merges]
    for k in range(1, max_dim + 1):
        mask = ~np.isin(s_idx, cleared)
        cols = np.ascontiguousarray(s_idx[mask][::-1])
        cdiam = np.ascontiguousarray(s_diam[mask][::-1])
        b, d, piv = reduce_coboundary(D, thr, cols, cdiam, k, n, B)
        out.append((b, d))
        if k == max_dim:
            break
        nxt_idx, nxt_diam = enumerate_cofaces_up(D, thr, np.ascontiguousarray(s_verts), k, n, B)
        order = np.lexsort((nxt_idx, nxt_diam))
        s_idx, s_diam = nxt_idx[order], nxt_diam[order]
        s_verts = decode_all(s_idx, k + 1, n, B)
        cleared = piv
    return out

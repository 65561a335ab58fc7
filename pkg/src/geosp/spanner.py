"""Path-greedy t-spanner construction.

Pairs are processed in nondecreasing length order; a pair gets an edge only
if the current graph distance exceeds t times its Euclidean length.  The
inner loop is compiled with numba and keeps three exactness-preserving
shortcuts:

* pairs joining different components are added outright (distance is
  infinite, as in Kruskal);
* a cached graph-distance upper bound per pair skips satisfied pairs
  (distances only shrink, so a cached bound stays valid);
* a bounded Dijkstra from one endpoint refreshes the bounds of all candidate
  pairs of that endpoint; if no edge has been added since an endpoint's last
  run that covered the current radius, the pair can be decided from the
  cache alone.

Above ``config.SPANNER_EXACT_N`` points, only pairs shorter than an adaptive
cutoff are considered; the result is then the greedy spanner restricted to
short pairs, components are merged by exact closest cross pairs, and the
stretch of sampled long pairs is audited (the cutoff doubles on failure).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit
from scipy.spatial import cKDTree

from . import config
from .graph import EuclideanGraph


@njit(cache=True, nogil=True)
def _greedy_loop(pts, pu, pv, plen, t, edge_cap):
    n = pts.shape[0]
    m = pu.shape[0]

    head = np.full(n, -1, np.int64)
    nxt = np.empty(2 * edge_cap, np.int64)
    eto = np.empty(2 * edge_cap, np.int64)
    elen = np.empty(2 * edge_cap, np.float64)
    out_u = np.empty(edge_cap, np.int64)
    out_v = np.empty(edge_cap, np.int64)
    n_edges = 0

    parent = np.arange(n)
    # candidate CSR: pair indices listed under both endpoints
    indptr = np.zeros(n + 1, np.int64)
    for i in range(m):
        indptr[pu[i] + 1] += 1
        indptr[pv[i] + 1] += 1
    for v in range(n):
        indptr[v + 1] += indptr[v]
    cand = np.empty(2 * m, np.int64)
    cursor = indptr[:-1].copy()
    for i in range(m):
        cand[cursor[pu[i]]] = i
        cursor[pu[i]] += 1
        cand[cursor[pv[i]]] = i
        cursor[pv[i]] += 1

    bound = np.full(m, np.inf)
    last_ver = np.full(n, -1, np.int64)
    last_rad = np.zeros(n, np.float64)

    dist = np.empty(n, np.float64)
    stamp = np.zeros(n, np.int64)
    cur_stamp = 0
    heap_cap = 2 * edge_cap + 16
    hk = np.empty(heap_cap, np.float64)
    hv = np.empty(heap_cap, np.int64)

    for i in range(m):
        a, b, length = pu[i], pv[i], plen[i]

        ra = a
        while parent[ra] != ra:
            parent[ra] = parent[parent[ra]]
            ra = parent[ra]
        rb = b
        while parent[rb] != rb:
            parent[rb] = parent[parent[rb]]
            rb = parent[rb]

        need_edge = False
        if ra != rb:
            need_edge = True
        else:
            lim = t * length
            if bound[i] <= lim:
                continue
            if last_ver[a] == n_edges and last_rad[a] >= lim:
                need_edge = True
            elif last_ver[b] == n_edges and last_rad[b] >= lim:
                need_edge = True
            else:
                # bounded Dijkstra from a, radius lim
                cur_stamp += 1
                dist[a] = 0.0
                stamp[a] = cur_stamp
                hn = 0
                hk[0] = 0.0
                hv[0] = a
                hn = 1
                while hn > 0:
                    top_k = hk[0]
                    top_v = hv[0]
                    hn -= 1
                    hk[0] = hk[hn]
                    hv[0] = hv[hn]
                    j = 0
                    while True:
                        l = 2 * j + 1
                        if l >= hn:
                            break
                        if l + 1 < hn and hk[l + 1] < hk[l]:
                            l += 1
                        if hk[l] < hk[j]:
                            hk[j], hk[l] = hk[l], hk[j]
                            hv[j], hv[l] = hv[l], hv[j]
                            j = l
                        else:
                            break
                    if top_k > dist[top_v]:
                        continue
                    # settle top_v
                    e = head[top_v]
                    while e != -1:
                        u = eto[e]
                        nd = top_k + elen[e]
                        if nd <= lim and (stamp[u] != cur_stamp or nd < dist[u]):
                            dist[u] = nd
                            stamp[u] = cur_stamp
                            hk[hn] = nd
                            hv[hn] = u
                            j = hn
                            hn += 1
                            while j > 0:
                                p = (j - 1) // 2
                                if hk[p] > hk[j]:
                                    hk[p], hk[j] = hk[j], hk[p]
                                    hv[p], hv[j] = hv[j], hv[p]
                                    j = p
                                else:
                                    break
                        e = nxt[e]
                # refresh cached bounds for a's candidate pairs
                for jj in range(indptr[a], indptr[a + 1]):
                    pi = cand[jj]
                    other = pv[pi] if pu[pi] == a else pu[pi]
                    if stamp[other] == cur_stamp and dist[other] < bound[pi]:
                        bound[pi] = dist[other]
                last_ver[a] = n_edges
                last_rad[a] = lim
                if bound[i] > lim:
                    need_edge = True

        if need_edge:
            if n_edges >= edge_cap:
                return -1, out_u, out_v
            out_u[n_edges] = a
            out_v[n_edges] = b
            eto[2 * n_edges] = b
            elen[2 * n_edges] = length
            nxt[2 * n_edges] = head[a]
            head[a] = 2 * n_edges
            eto[2 * n_edges + 1] = a
            elen[2 * n_edges + 1] = length
            nxt[2 * n_edges + 1] = head[b]
            head[b] = 2 * n_edges + 1
            parent[ra] = rb
            n_edges += 1
            bound[i] = length

    return n_edges, out_u, out_v


def _candidate_pairs(pts, cutoff):
    n = len(pts)
    if cutoff is None:
        iu, iv = np.triu_indices(n, k=1)
        pu, pv = iu.astype(np.int64), iv.astype(np.int64)
    else:
        tree = cKDTree(pts)
        pairs = tree.query_pairs(r=cutoff, output_type="ndarray")
        pu, pv = pairs[:, 0].astype(np.int64), pairs[:, 1].astype(np.int64)
    plen = np.linalg.norm(pts[pu] - pts[pv], axis=1)
    order = np.lexsort((pv, pu, plen))
    return pu[order], pv[order], plen[order]


def _run_greedy(pts, pu, pv, plen, t):
    cap = max(64, 8 * len(pts))
    while True:
        n_edges, out_u, out_v = _greedy_loop(pts, pu, pv, plen, t, cap)
        if n_edges >= 0:
            return out_u[:n_edges].copy(), out_v[:n_edges].copy()
        cap *= 2


def _merge_components(pts, eu, ev, t):
    """Join leftover components by exact closest cross pairs (Kruskal order)."""
    n = len(pts)
    parent = np.arange(n)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in zip(eu, ev):
        parent[find(u)] = find(v)
    roots = np.array([find(v) for v in range(n)])
    comps = np.unique(roots)
    extra_u, extra_v = [], []
    while len(comps) > 1:
        # closest pair between the smallest component and the rest
        sizes = {c: 0 for c in comps}
        for r in roots:
            sizes[r] += 1
        small = min(comps, key=lambda c: (sizes[c], c))
        inside = np.flatnonzero(roots == small)
        outside = np.flatnonzero(roots != small)
        tree = cKDTree(pts[outside])
        dd, jj = tree.query(pts[inside], k=1)
        best = int(np.lexsort((jj, inside, dd))[0])
        u = int(inside[best])
        v = int(outside[jj[best]])
        extra_u.append(u)
        extra_v.append(v)
        parent[find(u)] = find(v)
        roots = np.array([find(x) for x in range(n)])
        comps = np.unique(roots)
    return extra_u, extra_v


def _stretch_ok(g, pts, t, rng, n_sources):
    n = len(pts)
    if n < 2:
        return True
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import dijkstra as _sp_dijkstra

    src = np.unique(rng.integers(0, n, size=min(n_sources, n)))
    w = np.concatenate([g.ew, g.ew])
    rows = np.concatenate([g.eu, g.ev])
    cols = np.concatenate([g.ev, g.eu])
    mat = csr_matrix((w, (rows, cols)), shape=(n, n))
    dist = _sp_dijkstra(mat, directed=False, indices=src)
    for i, s in enumerate(src):
        direct = np.linalg.norm(pts - pts[s], axis=1)
        mask = np.arange(n) != s
        if np.any(dist[i][mask] > t * direct[mask] * (1 + 1e-9)):
            return False
    return True


def greedy_spanner(points, t: float, _audit_seed: int = 0) -> EuclideanGraph:
    """Greedy t-spanner of a distinct point set; edge weights are lengths."""
    if t <= 1:
        raise ValueError("stretch factor t must exceed 1")
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        pts = pts.reshape(len(pts), -1)
    n, d = pts.shape
    if n <= 1:
        return EuclideanGraph(pts, eu=np.empty(0, np.int64), ev=np.empty(0, np.int64))

    if n <= config.SPANNER_EXACT_N:
        cutoff = None
    else:
        extent = float((pts.max(axis=0) - pts.min(axis=0)).max())
        cutoff = config.SPANNER_CUTOFF * extent * (math.log(n) / n) ** (1.0 / d)

    rng = np.random.default_rng(np.random.SeedSequence((int(_audit_seed), 0xA0D17)))
    for _ in range(config.SPANNER_GROW_RETRIES + 1):
        pu, pv, plen = _candidate_pairs(pts, cutoff)
        eu, ev = _run_greedy(pts, pu, pv, plen, float(t))
        if cutoff is not None:
            xu, xv = _merge_components(pts, eu, ev, t)
            if xu:
                eu = np.concatenate([eu, np.asarray(xu, np.int64)])
                ev = np.concatenate([ev, np.asarray(xv, np.int64)])
        g = EuclideanGraph(pts, eu=eu, ev=ev, validate=False)
        if cutoff is None or _stretch_ok(g, pts, t, rng, 8):
            return g
        cutoff *= 2.0  # audit failed: widen the candidate set and rebuild
    return g

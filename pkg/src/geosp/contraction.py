"""Contraction phase: clustering, contracted graphs, representative graphs.

Contracted graphs are purely combinatorial (no coordinates).  Each level
keeps, per vertex, the cluster it came from (``cset``), the accumulated set
of pipeline-graph vertices (``conset``), the reverse map ``rev``, one
representative pipeline edge per level edge (``rep_of``), and the endpoint
sets ``gamma`` of those representative edges.  Base level 0 is the pipeline
graph itself with identity maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import config
from .graph import EuclideanGraph


@dataclass
class Schedule:
    z: list  # z_0 .. z_I
    alpha: list  # alpha_i = prod_{j<=i} z_j
    beta: list  # beta_i = z_i^(3d-2)
    r: list  # r_i = z_i^(3d-1) * prod_{j<i} z_j  (extended two past I)
    f_of_r: list  # boundary function values, aligned with r
    I: int
    d: int
    n: int

    def z_ext(self, i: int) -> int:
        """z_i extended past the stored list by the growth formula."""
        if i < len(self.z):
            return self.z[i]
        zc = self.z[-1]
        for _ in range(i - len(self.z) + 1):
            zc = math.ceil(7 ** (zc ** 0.2))
        return zc


def make_schedule(n: int, d: int) -> Schedule:
    """Contraction parameters z_i and the derived division parameters.

    z grows until the predicted contracted size n / prod(z) drops to
    n / log2(n); r and f are materialized two levels past I so the division
    validator can evaluate its inequality at the top level.
    """
    if n < 2 or d < 2:
        raise ValueError("need n >= 2 and d >= 2")
    target = math.log2(n)
    z = [2]
    prod = 2
    while prod < target:
        z.append(math.ceil(7 ** (z[-1] ** 0.2)))
        prod *= z[-1]
    I = len(z) - 1
    zx = list(z)
    for _ in range(2):
        zx.append(math.ceil(7 ** (zx[-1] ** 0.2)))
    alpha = []
    acc = 1
    for zi in z:
        acc *= zi
        alpha.append(acc)
    beta = [zi ** (3 * d - 2) for zi in z]
    r, f = [], []
    prefix = 1
    for i, zi in enumerate(zx):
        r.append(zi ** (3 * d - 1) * prefix)
        f.append(config.C_PRIME * zi ** (3 * d - 2) * prefix)
        prefix *= zi
    return Schedule(z=z, alpha=alpha, beta=beta, r=r, f_of_r=f, I=I, d=d, n=n)


class LevelGraph:
    """Combinatorial graph: n vertices, edge arrays, CSR adjacency."""

    __slots__ = ("n", "eu", "ev", "indptr", "adj_nbr", "adj_eid")

    def __init__(self, n, eu, ev):
        self.n = int(n)
        self.eu = np.asarray(eu, dtype=np.int64)
        self.ev = np.asarray(ev, dtype=np.int64)
        m = len(self.eu)
        ends = np.concatenate([self.eu, self.ev])
        eids = np.concatenate([np.arange(m), np.arange(m)]).astype(np.int64)
        nbrs = np.concatenate([self.ev, self.eu])
        order = np.argsort(ends, kind="stable")
        self.adj_nbr = nbrs[order]
        self.adj_eid = eids[order]
        self.indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(self.indptr, ends[order] + 1, 1)
        np.cumsum(self.indptr, out=self.indptr)

    @property
    def m(self) -> int:
        return len(self.eu)

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @classmethod
    def from_euclidean(cls, g: EuclideanGraph) -> "LevelGraph":
        return cls(g.n, g.eu, g.ev)


def csr_gather(indptr, data, ids):
    """Concatenate data[indptr[v]:indptr[v+1]] over ids (vectorized)."""
    ids = np.asarray(ids, dtype=np.int64)
    counts = indptr[ids + 1] - indptr[ids]
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=data.dtype)
    starts = np.repeat(indptr[ids], counts)
    out_starts = np.repeat(np.cumsum(counts) - counts, counts)
    return data[starts + np.arange(total) - out_starts]


def _lists_to_csr(lists, dtype=np.int64):
    indptr = np.zeros(len(lists) + 1, dtype=np.int64)
    for i, lst in enumerate(lists):
        indptr[i + 1] = indptr[i] + len(lst)
    data = np.empty(indptr[-1], dtype=dtype)
    for i, lst in enumerate(lists):
        data[indptr[i] : indptr[i + 1]] = lst
    return indptr, data


@dataclass
class ContractionLevel:
    level: int
    lg: LevelGraph
    z_used: int = 0  # z that produced this level (0 for the base)
    # cluster membership: this-level vertex -> previous-level vertex ids
    cset_indptr: np.ndarray = None
    cset_data: np.ndarray = None
    # accumulated membership: this-level vertex -> pipeline vertex ids
    conset_indptr: np.ndarray = None
    conset_data: np.ndarray = None
    rev: np.ndarray = None  # pipeline vertex -> this-level vertex
    rep_of: np.ndarray = None  # this-level edge -> pipeline edge id
    rep_graph: np.ndarray = None  # sorted unique pipeline edge ids
    gamma_indptr: np.ndarray = None
    gamma_data: np.ndarray = None
    _first_prev_edge: np.ndarray = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.lg.n

    def cset_of(self, ids):
        if self.cset_indptr is None:  # base level: identity
            return np.asarray(ids, dtype=np.int64)
        return csr_gather(self.cset_indptr, self.cset_data, ids)

    def conset_of(self, ids):
        if self.conset_indptr is None:
            return np.asarray(ids, dtype=np.int64)
        return csr_gather(self.conset_indptr, self.conset_data, ids)

    def gamma_of(self, ids):
        if self.gamma_indptr is None:  # base level: gamma(v) = {v}
            return np.asarray(ids, dtype=np.int64)
        return csr_gather(self.gamma_indptr, self.gamma_data, ids)

    @classmethod
    def base(cls, g: EuclideanGraph) -> "ContractionLevel":
        lg = LevelGraph.from_euclidean(g)
        return cls(
            level=0,
            lg=lg,
            rev=np.arange(g.n, dtype=np.int64),
            rep_of=np.arange(g.m, dtype=np.int64),
            rep_graph=np.arange(g.m, dtype=np.int64),
        )


def cluster(lg: LevelGraph, z: int):
    """Partition vertices into connected sets of size in [z, 3z).

    Requires maximum degree 3, which is what bounds the window at 3z.
    Component leftovers merge into an adjacent cluster; a whole component
    smaller than z stays as one undersized cluster.
    """
    if lg.n and int(lg.degrees().max()) > 3:
        raise ValueError("cluster requires maximum degree <= 3")
    return _split_spanning_tree(lg, z)


def _split_spanning_tree(lg: LevelGraph, z: int):
    """Tree splitter behind cluster(); also used on contracted graphs.

    Contracted graphs can exceed degree 3; there the window widens to
    [z, 1 + maxdeg * (z - 1)] but the cluster count stays at most n/z per
    component, which is what the contraction schedule needs.
    """
    if z < 1:
        raise ValueError("z must be >= 1")
    n = lg.n
    indptr, nbr = lg.indptr, lg.adj_nbr
    cluster_id = np.full(n, -1, dtype=np.int64)
    visited = np.zeros(n, dtype=bool)
    clusters = []
    parent = np.full(n, -1, dtype=np.int64)
    for root in range(n):
        if visited[root]:
            continue
        comp_start = len(clusters)
        seq = [root]
        visited[root] = True
        si = 0
        while si < len(seq):
            v = seq[si]
            si += 1
            for j in range(indptr[v], indptr[v + 1]):
                u = int(nbr[j])
                if not visited[u]:
                    visited[u] = True
                    parent[u] = v
                    seq.append(u)
        res = {}
        for v in reversed(seq):
            bag = res.pop(v, [])
            bag.append(v)
            if len(bag) >= z and v != root:
                cid = len(clusters)
                clusters.append(bag)
                for x in bag:
                    cluster_id[x] = cid
            elif v != root:
                p = int(parent[v])
                res.setdefault(p, []).extend(bag)
            else:
                if len(bag) >= z:
                    cid = len(clusters)
                    clusters.append(bag)
                    for x in bag:
                        cluster_id[x] = cid
                elif len(clusters) > comp_start:
                    target = -1
                    for x in bag:
                        for j in range(indptr[x], indptr[x + 1]):
                            cid = cluster_id[int(nbr[j])]
                            if cid >= 0:
                                target = int(cid)
                                break
                        if target >= 0:
                            break
                    clusters[target].extend(bag)
                    for x in bag:
                        cluster_id[x] = target
                else:
                    cid = len(clusters)
                    clusters.append(bag)
                    for x in bag:
                        cluster_id[x] = cid
    return [np.asarray(sorted(c), dtype=np.int64) for c in clusters]


def contract(prev: ContractionLevel, z: int) -> ContractionLevel:
    """Contract each cluster of the previous level into one vertex."""
    clusters = _split_spanning_tree(prev.lg, z)
    n_new = len(clusters)
    cluster_of = np.empty(prev.n, dtype=np.int64)
    for ci, members in enumerate(clusters):
        cluster_of[members] = ci
    cu = cluster_of[prev.lg.eu]
    cv = cluster_of[prev.lg.ev]
    cross = np.flatnonzero(cu != cv)
    if len(cross):
        lo = np.minimum(cu[cross], cv[cross])
        hi = np.maximum(cu[cross], cv[cross])
        _, first = np.unique(lo * n_new + hi, return_index=True)
        first.sort()  # construction order: first-encountered previous edge
        chosen = cross[first]
        new_eu, new_ev = cu[chosen], cv[chosen]
    else:
        chosen = np.empty(0, dtype=np.int64)
        new_eu = new_ev = np.empty(0, dtype=np.int64)
    lg = LevelGraph(n_new, new_eu, new_ev)
    cset_indptr, cset_data = _lists_to_csr(clusters)
    if prev.conset_indptr is None:
        conset_indptr, conset_data = cset_indptr.copy(), cset_data.copy()
    else:
        pieces = [prev.conset_of(members) for members in clusters]
        conset_indptr, conset_data = _lists_to_csr(pieces)
    return ContractionLevel(
        level=prev.level + 1,
        lg=lg,
        z_used=int(z),
        cset_indptr=cset_indptr,
        cset_data=cset_data,
        conset_indptr=conset_indptr,
        conset_data=conset_data,
        rev=cluster_of[prev.rev],
        _first_prev_edge=chosen,
    )


def build_representative(cur: ContractionLevel, prev: ContractionLevel, g: EuclideanGraph):
    """Fill rep_of / rep_graph / gamma of ``cur`` from the previous level."""
    if cur._first_prev_edge is None:
        raise ValueError("level was not produced by contract()")
    cur.rep_of = prev.rep_of[cur._first_prev_edge]
    cur.rep_graph = np.unique(cur.rep_of)
    ends = np.concatenate([g.eu[cur.rep_of], g.ev[cur.rep_of]])
    owners = cur.rev[ends]
    order = np.lexsort((ends, owners))
    gamma_lists = [[] for _ in range(cur.n)]
    prev_pair = None
    for idx in order:
        pair = (int(owners[idx]), int(ends[idx]))
        if pair != prev_pair:
            gamma_lists[pair[0]].append(pair[1])
            prev_pair = pair
    cur.gamma_indptr, cur.gamma_data = _lists_to_csr(gamma_lists)
    return cur


def build_levels(g: EuclideanGraph, schedule: Schedule, max_degree_check=True):
    """Run the contraction phase: levels [base, G_1, ..., G_{I+1}].

    Stops once the current level has at most n / log2(n) vertices, when the
    z list is exhausted, or when contraction stops making progress
    (pathologically disconnected inputs).
    """
    if max_degree_check and g.n and g.max_degree() > 3:
        raise ValueError("contraction pipeline requires maximum degree <= 3")
    levels = [ContractionLevel.base(g)]
    target = g.n / math.log2(max(g.n, 2))
    i = 0
    while levels[-1].n > target and i < len(schedule.z):
        nxt = contract(levels[-1], schedule.z[i])
        build_representative(nxt, levels[-1], g)
        if nxt.n >= levels[-1].n:
            break
        levels.append(nxt)
        i += 1
    return levels


def degeneracy(obj) -> int:
    """Graph degeneracy via bucketed core decomposition (O(n + m))."""
    if isinstance(obj, EuclideanGraph):
        lg = LevelGraph.from_euclidean(obj)
    else:
        lg = obj
    n = lg.n
    if n == 0:
        return 0
    deg = lg.degrees().copy()
    max_deg = int(deg.max()) if n else 0
    bins = [[] for _ in range(max_deg + 1)]
    for v in range(n):
        bins[deg[v]].append(v)
    removed = np.zeros(n, dtype=bool)
    result = 0
    cur = 0
    indptr, nbr = lg.indptr, lg.adj_nbr
    for _ in range(n):
        while cur <= max_deg and not bins[cur]:
            cur += 1
        while True:
            v = bins[cur].pop()
            if not removed[v] and deg[v] == cur:
                break
            while cur <= max_deg and not bins[cur]:
                cur += 1
        result = max(result, cur)
        removed[v] = True
        for j in range(indptr[v], indptr[v + 1]):
            u = int(nbr[j])
            if not removed[u] and deg[u] > 0:
                deg[u] -= 1
                bins[deg[u]].append(u)
                if deg[u] < cur:
                    cur = deg[u]
    return result

"""Euclidean graph data model, degree-3 transform, and the Dijkstra oracle.

Graphs are immutable after construction: vertex coordinates live in an
(n, d) float array, edges in three parallel arrays (u, v, w), and the
incidence structure in a CSR layout built once in the constructor.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .errors import FormatError

INF = math.inf


class EuclideanGraph:
    """Undirected weighted graph whose vertices carry coordinates in R^d."""

    __slots__ = ("points", "eu", "ev", "ew", "_indptr", "_adj_nbr", "_adj_eid")

    def __init__(self, points, edges=None, eu=None, ev=None, ew=None, validate=True):
        self.points = np.asarray(points, dtype=np.float64)
        if self.points.ndim != 2:
            self.points = self.points.reshape(len(self.points), -1)
        if edges is not None:
            if len(edges):
                arr = np.asarray([(e[0], e[1]) for e in edges], dtype=np.int64)
                eu, ev = arr[:, 0], arr[:, 1]
                ew = np.asarray([e[2] for e in edges], dtype=np.float64)
            else:
                eu = ev = np.empty(0, dtype=np.int64)
                ew = np.empty(0, dtype=np.float64)
        self.eu = np.asarray(eu, dtype=np.int64)
        self.ev = np.asarray(ev, dtype=np.int64)
        if ew is None:
            ew = np.linalg.norm(self.points[self.eu] - self.points[self.ev], axis=1)
        self.ew = np.asarray(ew, dtype=np.float64)
        if validate:
            self._validate()
        self._build_adjacency()

    def _validate(self):
        n, m = self.n, self.m
        if not np.all(np.isfinite(self.points)):
            raise ValueError("vertex coordinates must be finite")
        if m:
            if self.eu.min() < 0 or self.ev.min() < 0 or max(self.eu.max(), self.ev.max()) >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(self.eu == self.ev):
                raise ValueError("self-loops are not allowed")
            if not np.all(np.isfinite(self.ew)) or self.ew.min() < 0:
                raise ValueError("edge weights must be finite and nonnegative")
            lo = np.minimum(self.eu, self.ev)
            hi = np.maximum(self.eu, self.ev)
            keys = lo * n + hi
            if len(np.unique(keys)) != m:
                raise ValueError("duplicate undirected edges")

    def _build_adjacency(self):
        n, m = self.n, self.m
        ends = np.concatenate([self.eu, self.ev])
        eids = np.concatenate([np.arange(m), np.arange(m)]).astype(np.int64)
        order = np.argsort(ends, kind="stable")
        ends_sorted = ends[order]
        self._adj_eid = eids[order]
        other = np.concatenate([self.ev, self.eu])[order]
        self._adj_nbr = other
        self._indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self._indptr, ends_sorted + 1, 1)
        np.cumsum(self._indptr, out=self._indptr)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def m(self) -> int:
        return len(self.eu)

    @property
    def d(self) -> int:
        return self.points.shape[1] if self.points.size else self.points.shape[-1]

    def neighbors(self, v):
        """(neighbor ids, incident edge ids) for vertex v."""
        lo, hi = self._indptr[v], self._indptr[v + 1]
        return self._adj_nbr[lo:hi], self._adj_eid[lo:hi]

    def degree(self, v) -> int:
        return int(self._indptr[v + 1] - self._indptr[v])

    def degrees(self) -> np.ndarray:
        return np.diff(self._indptr)

    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.n else 0

    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.points[self.eu] - self.points[self.ev], axis=1)

    def edges(self):
        for i in range(self.m):
            yield int(self.eu[i]), int(self.ev[i]), float(self.ew[i])


@dataclass
class VertexMap:
    """Tracks the degree-3 expansion: original id <-> transformed ids."""

    forward: list  # original id -> list of transformed ids
    backward: np.ndarray  # transformed id -> original id

    @classmethod
    def identity(cls, n: int) -> "VertexMap":
        return cls([[i] for i in range(n)], np.arange(n, dtype=np.int64))


@dataclass
class DistanceLabels:
    dist: np.ndarray  # float64, +inf for unreachable
    parent: np.ndarray  # predecessor edge id, -1 for source/unreachable


def degree3_transform(g: EuclideanGraph):
    """Expand every vertex of degree > 3 into a cycle of zero-weight edges.

    Each incident edge is reattached to its own cycle vertex; cycle vertices
    reuse the original coordinates, so geometric edge lengths are unchanged
    and shortest-path distances are preserved exactly.  Original edges keep
    their ids (cycle edges are appended after them).
    """
    if g.n == 0 or g.max_degree() <= 3:
        return g, VertexMap.identity(g.n)

    degs = g.degrees()
    forward = []
    backward = []
    slot_of = {}  # (vertex, edge id) -> transformed id, for split vertices
    next_id = 0
    for v in range(g.n):
        if degs[v] <= 3:
            forward.append([next_id])
            backward.append(v)
            next_id += 1
            continue
        nbrs, eids = g.neighbors(v)
        p = g.points[v]
        if g.d >= 2:
            rel = g.points[nbrs][:, :2] - p[:2]
            ang = np.arctan2(rel[:, 1], rel[:, 0])
        else:
            ang = np.zeros(len(nbrs))
        order = np.lexsort((nbrs, ang))
        ids = list(range(next_id, next_id + len(order)))
        for slot, j in enumerate(order):
            slot_of[(v, int(eids[j]))] = ids[slot]
        forward.append(ids)
        backward.extend([v] * len(ids))
        next_id += len(ids)

    points = g.points[np.asarray(backward, dtype=np.int64)]
    m = g.m
    eu = np.empty(m, dtype=np.int64)
    ev = np.empty(m, dtype=np.int64)
    for i in range(m):
        u, v = int(g.eu[i]), int(g.ev[i])
        eu[i] = slot_of.get((u, i), forward[u][0])
        ev[i] = slot_of.get((v, i), forward[v][0])
    cyc_u, cyc_v = [], []
    for v in range(g.n):
        ids = forward[v]
        if len(ids) > 1:
            for a, b in zip(ids, ids[1:] + ids[:1]):
                cyc_u.append(a)
                cyc_v.append(b)
    eu = np.concatenate([eu, np.asarray(cyc_u, dtype=np.int64)])
    ev = np.concatenate([ev, np.asarray(cyc_v, dtype=np.int64)])
    ew = np.concatenate([g.ew, np.zeros(len(cyc_u))])
    out = EuclideanGraph(points, eu=eu, ev=ev, ew=ew, validate=False)
    return out, VertexMap(forward, np.asarray(backward, dtype=np.int64))


def induced_subgraph(g: EuclideanGraph, vs):
    """Subgraph induced on vertex set ``vs``; returns (graph, new->old id map)."""
    ids = np.asarray(sorted(set(int(v) for v in vs)), dtype=np.int64)
    if len(ids) and (ids[0] < 0 or ids[-1] >= g.n):
        raise ValueError("unknown vertex id in induced_subgraph")
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[ids] = np.arange(len(ids))
    if g.m:
        keep = (remap[g.eu] >= 0) & (remap[g.ev] >= 0)
        eu, ev, ew = remap[g.eu[keep]], remap[g.ev[keep]], g.ew[keep]
    else:
        eu = ev = np.empty(0, dtype=np.int64)
        ew = np.empty(0, dtype=np.float64)
    pts = g.points[ids] if len(ids) else g.points[:0]
    return EuclideanGraph(pts, eu=eu, ev=ev, ew=ew, validate=False), ids


def connected_components(g: EuclideanGraph):
    """Partition of vertex ids into connected components (list of sets)."""
    if g.n == 0:
        return []
    mat = csr_matrix(
        (np.ones(g.m, dtype=np.int8), (g.eu, g.ev)), shape=(g.n, g.n)
    )
    k, labels = _cc(mat, directed=False)
    comps = [set() for _ in range(k)]
    for v, lab in enumerate(labels):
        comps[lab].add(v)
    return comps


def dijkstra(g: EuclideanGraph, s: int) -> DistanceLabels:
    """Exact shortest-path labels from ``s`` (lazy-deletion binary heap)."""
    if not (0 <= s < g.n):
        raise ValueError(f"invalid source vertex {s}")
    dist = np.full(g.n, INF)
    parent = np.full(g.n, -1, dtype=np.int64)
    dist[s] = 0.0
    done = np.zeros(g.n, dtype=bool)
    heap = [(0.0, s)]
    indptr, nbr, eid, ew = g._indptr, g._adj_nbr, g._adj_eid, g.ew
    while heap:
        dv, v = heapq.heappop(heap)
        if done[v]:
            continue
        done[v] = True
        for j in range(indptr[v], indptr[v + 1]):
            u = nbr[j]
            nd = dv + ew[eid[j]]
            if nd < dist[u]:
                dist[u] = nd
                parent[u] = eid[j]
                heapq.heappush(heap, (nd, int(u)))
    return DistanceLabels(dist, parent)


def write_geograph(g: EuclideanGraph, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("geograph v1\n")
        fh.write(f"d {g.d}\n")
        fh.write(f"n {g.n}\n")
        fh.write(f"m {g.m}\n")
        for i in range(g.n):
            coords = " ".join(repr(float(x)) for x in g.points[i])
            fh.write(f"v {i} {coords}\n")
        for i in range(g.m):
            fh.write(f"e {g.eu[i]} {g.ev[i]} {repr(float(g.ew[i]))}\n")


def read_geograph(path) -> EuclideanGraph:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != "geograph v1":
        raise FormatError("missing 'geograph v1' header")
    try:
        d = int(lines[1].split()[1])
        n = int(lines[2].split()[1])
        m = int(lines[3].split()[1])
        pts = np.zeros((n, d))
        eu = np.zeros(m, dtype=np.int64)
        ev = np.zeros(m, dtype=np.int64)
        ew = np.zeros(m)
        vi = ei = 0
        for ln in lines[4:]:
            parts = ln.split()
            if parts[0] == "v":
                idx = int(parts[1])
                pts[idx] = [float(x) for x in parts[2 : 2 + d]]
                vi += 1
            elif parts[0] == "e":
                eu[ei], ev[ei], ew[ei] = int(parts[1]), int(parts[2]), float(parts[3])
                ei += 1
            else:
                raise FormatError(f"unexpected line {ln!r}")
        if vi != n or ei != m:
            raise FormatError(f"count mismatch: {vi}/{n} vertices, {ei}/{m} edges")
    except (IndexError, ValueError) as exc:
        raise FormatError(f"malformed geograph file: {exc}") from exc
    return EuclideanGraph(pts, eu=eu, ev=ev, ew=ew)

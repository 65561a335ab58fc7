"""Instance generators for the three Euclidean graph classes, plus audits.

Neighborhood systems are stored as center/extent arrays (``extent`` is the
radius for balls and the full side for cubes); ``objects`` materializes the
geom dataclasses on demand.  All generation is seeded and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import FormatError
from .geom import Ball, Cube
from .graph import EuclideanGraph
from .spanner import greedy_spanner  # noqa: F401  (re-exported class generator)


@dataclass
class NeighborhoodSystem:
    kind: str  # "ball" | "cube"
    centers: np.ndarray  # (n, d)
    extents: np.ndarray  # radius (ball) or side (cube)
    declared_ply: int

    def __post_init__(self):
        if self.kind not in ("ball", "cube"):
            raise ValueError(f"unknown system kind {self.kind!r}")
        self.centers = np.asarray(self.centers, dtype=np.float64)
        self.extents = np.asarray(self.extents, dtype=np.float64)
        if self.declared_ply < 1:
            raise ValueError("declared ply must be >= 1")

    @property
    def n(self) -> int:
        return len(self.centers)

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    @property
    def objects(self):
        if self.kind == "ball":
            return [Ball(c, float(r)) for c, r in zip(self.centers, self.extents)]
        return [
            Cube(c - s / 2.0, float(s)) for c, s in zip(self.centers, self.extents)
        ]


@dataclass
class LankyParams:
    tau: int
    eta: float
    d: int

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.eta <= 0:
            raise ValueError("eta must be positive")


def gen_points(n: int, d: int, distribution: str, seed: int) -> np.ndarray:
    """Seeded point cloud: 'uniform-cube' in [0,1]^d or well-separated clusters."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x9E37)))
    if distribution == "uniform-cube":
        return rng.random((n, d))
    if distribution == "clustered":
        nc = max(2, min(32, n // 32)) if n >= 64 else max(1, n // 8) or 1
        grid = math.ceil(nc ** (1.0 / d)) + 1
        cells = rng.choice(grid**d, size=nc, replace=False)
        centers = np.stack(
            [(cells // grid**j) % grid for j in range(d)], axis=1
        ).astype(np.float64)
        which = rng.integers(0, nc, size=n)
        # cluster radius well below spacing so clusters stay far apart
        return centers[which] + (rng.random((n, d)) - 0.5) * 0.06
    raise ValueError(f"unknown distribution {distribution!r}")


def _pair_candidates(sys: NeighborhoodSystem):
    """Candidate intersecting pairs via a KD-tree (superset, filtered exactly)."""
    p = 2.0 if sys.kind == "ball" else np.inf
    reach = sys.extents if sys.kind == "ball" else sys.extents / 2.0
    tree = cKDTree(sys.centers)
    rmax = float(reach.max()) if sys.n else 0.0
    neigh = tree.query_ball_point(sys.centers, reach + rmax, p=p)
    pu, pv = [], []
    for i, lst in enumerate(neigh):
        arr = np.asarray(lst, dtype=np.int64)
        arr = arr[arr > i]
        if not len(arr):
            continue
        if sys.kind == "ball":
            dist = np.linalg.norm(sys.centers[arr] - sys.centers[i], axis=1)
            ok = dist <= reach[arr] + reach[i]
        else:
            dist = np.abs(sys.centers[arr] - sys.centers[i]).max(axis=1)
            ok = dist <= reach[arr] + reach[i]
        arr = arr[ok]
        pu.extend([i] * len(arr))
        pv.extend(arr.tolist())
    return np.asarray(pu, dtype=np.int64), np.asarray(pv, dtype=np.int64)


def intersection_graph(sys: NeighborhoodSystem) -> EuclideanGraph:
    """One vertex per object center; edges join objects with closed intersection."""
    pu, pv = _pair_candidates(sys)
    w = np.linalg.norm(sys.centers[pu] - sys.centers[pv], axis=1)
    return EuclideanGraph(sys.centers, eu=pu, ev=pv, ew=w, validate=False)


def _pair_witness_points(sys: NeighborhoodSystem, pu, pv):
    """One point inside each intersecting pair (radical point / box center)."""
    if not len(pu):
        return np.empty((0, sys.d))
    ca, cb = sys.centers[pu], sys.centers[pv]
    if sys.kind == "ball":
        ra, rb = sys.extents[pu], sys.extents[pv]
        delta = cb - ca
        dist = np.linalg.norm(delta, axis=1)
        h = np.where(dist > 0, (dist**2 + ra**2 - rb**2) / (2 * np.maximum(dist, 1e-300)), 0.0)
        scale = np.where(dist > 0, h / np.maximum(dist, 1e-300), 0.0)
        return ca + delta * scale[:, None]
    ha, hb = sys.extents[pu, None] / 2.0, sys.extents[pv, None] / 2.0
    lo = np.maximum(ca - ha, cb - hb)
    hi = np.minimum(ca + ha, cb + hb)
    return (lo + hi) / 2.0


def _depth_at(sys: NeighborhoodSystem, points: np.ndarray) -> np.ndarray:
    """Coverage depth (closed containment) of each query point."""
    if not len(points):
        return np.zeros(0, dtype=np.int64)
    p = 2.0 if sys.kind == "ball" else np.inf
    reach = sys.extents if sys.kind == "ball" else sys.extents / 2.0
    rmax = float(reach.max())
    tree = cKDTree(sys.centers)
    neigh = tree.query_ball_point(points, rmax, p=p)
    out = np.zeros(len(points), dtype=np.int64)
    for i, lst in enumerate(neigh):
        if not lst:
            continue
        arr = np.asarray(lst, dtype=np.int64)
        if sys.kind == "ball":
            dist = np.linalg.norm(sys.centers[arr] - points[i], axis=1)
        else:
            dist = np.abs(sys.centers[arr] - points[i]).max(axis=1)
        out[i] = int(np.sum(dist <= reach[arr]))
    return out


def audit_ply(sys: NeighborhoodSystem, extra_samples: int = 2000, seed: int = 0) -> int:
    """Lower-bound estimate of the system ply (max depth over witness points)."""
    if sys.n == 0:
        return 0
    pu, pv = _pair_candidates(sys)
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0xB117)))
    lo = sys.centers.min(axis=0) - sys.extents.max()
    hi = sys.centers.max(axis=0) + sys.extents.max()
    samples = lo + rng.random((int(extra_samples), sys.d)) * (hi - lo)
    cand = np.vstack([sys.centers, _pair_witness_points(sys, pu, pv), samples])
    return int(_depth_at(sys, cand).max())


def _gen_system(kind, n, d, ply, seed):
    if n < 1 or ply < 1:
        raise ValueError("n and ply must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0xC4BE)))
    centers = rng.random((n, d))
    p = 2.0 if kind == "ball" else np.inf
    if n == 1:
        extents = np.array([0.25])
    else:
        k_nn = min(n - 1, max(1, math.ceil(ply / 2)))
        tree = cKDTree(centers)
        dd, _ = tree.query(centers, k=k_nn + 1, p=p)
        nn = dd[:, -1]
        factor = 0.49 if ply == 1 else 0.75
        extents = factor * nn
    if kind == "cube":
        extents = extents * 2.0  # extent stores the full side
    sys = NeighborhoodSystem(kind, centers, extents, ply)

    # repair: shrink the largest offender at any witness deeper than the target
    reach_div = 1.0 if kind == "ball" else 2.0
    for _ in range(64):
        pu, pv = _pair_candidates(sys)
        witnesses = np.vstack([sys.centers, _pair_witness_points(sys, pu, pv)])
        depth = _depth_at(sys, witnesses)
        bad = np.flatnonzero(depth > ply)
        if not len(bad):
            break
        reach = sys.extents / reach_div
        shrink = set()
        for w in witnesses[bad]:
            if kind == "ball":
                dist = np.linalg.norm(sys.centers - w, axis=1)
            else:
                dist = np.abs(sys.centers - w).max(axis=1)
            covering = np.flatnonzero(dist <= reach)
            order = covering[np.lexsort((covering, -sys.extents[covering]))]
            shrink.update(int(x) for x in order[: max(1, len(order) - ply)])
        sys.extents[sorted(shrink)] *= 0.7
    return sys


def gen_kply(n: int, d: int, k: int, seed: int) -> NeighborhoodSystem:
    """n balls whose audited ply stays at or below k; deterministic per seed."""
    return _gen_system("ball", n, d, k, seed)


def gen_cubes(n: int, d: int, kappa: int, seed: int) -> NeighborhoodSystem:
    """n iso-oriented cubes with audited thickness at most kappa."""
    return _gen_system("cube", n, d, kappa, seed)


def audit_lanky(g: EuclideanGraph, samples: int = 512, seed: int = 0) -> int:
    """Lower-bound estimate of tau: max count of long edges cut by a sampled ball."""
    if g.m == 0:
        return 0
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x7A11)))
    lengths = g.edge_lengths()
    pts = g.points
    n_vertex = min(g.n, samples // 2 + 1)
    vidx = rng.choice(g.n, size=n_vertex, replace=False)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    rand_centers = lo + rng.random((samples - n_vertex, g.d)) * (hi - lo)
    centers = np.vstack([pts[vidx], rand_centers])
    radii = lengths[rng.integers(0, g.m, size=len(centers))]
    best = 0
    for c, r in zip(centers, radii):
        if r <= 0:
            continue
        din_u = np.linalg.norm(pts[g.eu] - c, axis=1) < r
        din_v = np.linalg.norm(pts[g.ev] - c, axis=1) < r
        cut = (din_u != din_v) & (lengths >= r)
        best = max(best, int(cut.sum()))
    return best


def write_geosys(sys: NeighborhoodSystem, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"geosys v1 {sys.kind}\n")
        fh.write(f"d {sys.d}\n")
        fh.write(f"n {sys.n}\n")
        for i in range(sys.n):
            if sys.kind == "ball":
                coords = sys.centers[i]
            else:
                coords = sys.centers[i] - sys.extents[i] / 2.0  # minimum corner
            txt = " ".join(repr(float(x)) for x in coords)
            fh.write(f"o {i} {txt} {repr(float(sys.extents[i]))}\n")


def read_geosys(path, declared_ply: int = 1) -> NeighborhoodSystem:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    head = lines[0].split() if lines else []
    if len(head) != 3 or head[0] != "geosys" or head[1] != "v1":
        raise FormatError("missing 'geosys v1 <ball|cube>' header")
    kind = head[2]
    try:
        d = int(lines[1].split()[1])
        n = int(lines[2].split()[1])
        centers = np.zeros((n, d))
        extents = np.zeros(n)
        for ln in lines[3:]:
            parts = ln.split()
            if parts[0] != "o":
                raise FormatError(f"unexpected line {ln!r}")
            i = int(parts[1])
            coords = np.array([float(x) for x in parts[2 : 2 + d]])
            extents[i] = float(parts[2 + d])
            centers[i] = coords if kind == "ball" else coords + extents[i] / 2.0
    except (IndexError, ValueError) as exc:
        raise FormatError(f"malformed geosys file: {exc}") from exc
    return NeighborhoodSystem(kind, centers, extents, declared_ply)

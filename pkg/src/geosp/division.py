"""Division phase: recursive divisions of the contracted-graph hierarchy.

A region at level i holds vertex ids of the contracted graph G_i; dividing a
region runs the class separator on the representative subgraph of its
induced contracted subgraph, then classifies contracted vertices by the
endpoint sets of their representative edges.  Subregions are expanded one
level down via the cluster maps until they reach the pipeline graph.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import config
from .contraction import (
    ContractionLevel,
    Schedule,
    build_levels,
    csr_gather,
    make_schedule,
)
from .errors import DivisionError
from .generators import LankyParams, NeighborhoodSystem
from .geom import points_strictly_inside
from .graph import EuclideanGraph, VertexMap, degree3_transform
from .generators import audit_lanky
from .separators import BallBackend, CubeBackend, LankyBackend


@dataclass
class Region:
    level: int
    verts: np.ndarray
    boundary: np.ndarray
    children: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.verts)

    def leaves(self):
        if not self.children:
            yield self
            return
        for c in self.children:
            yield from c.leaves()


@dataclass
class DivisionTree:
    root: Region
    schedule: Schedule
    levels: list
    graph: EuclideanGraph  # pipeline graph the division lives on
    vmap: VertexMap  # pipeline <-> input graph vertices
    per_level_stats: list
    flags: dict
    seed: int

    def leaves(self):
        return list(self.root.leaves())

    def regions_at(self, level: int):
        out = []

        def walk(node):
            if node.level == level:
                out.append(node)
                return
            for c in node.children:
                walk(c)

        walk(self.root)
        return out


def _induced_edges(lvl: ContractionLevel, verts: np.ndarray) -> np.ndarray:
    """Edge ids of lvl.lg with both endpoints in ``verts`` (piece-local cost)."""
    lg = lvl.lg
    mask = np.zeros(lg.n, dtype=bool)
    mask[verts] = True
    inc_eids = csr_gather(lg.indptr, lg.adj_eid, verts)
    inc_nbrs = csr_gather(lg.indptr, lg.adj_nbr, verts)
    return np.unique(inc_eids[mask[inc_nbrs]])


def separator_contracted(H_verts, lvl: ContractionLevel, backend, g: EuclideanGraph, seed):
    """Separator of the contracted subgraph induced on ``H_verts`` (Lemma-1 style).

    Returns (S, A, B, surface, attempts) in level-vertex ids.  Raises
    :class:`DivisionError` when the classified sides are joined by an edge,
    which would indicate an inconsistent surface.
    """
    H = np.asarray(sorted(int(v) for v in H_verts), dtype=np.int64)
    k = len(H)
    if k == 0:
        raise ValueError("empty subgraph")
    if lvl.level > 0 and lvl.z_used:
        beta_floor = lvl.z_used ** (3 * (g.d) - 2)
        if k < min(beta_floor, lvl.n):
            raise DivisionError(
                f"subgraph below the level-{lvl.level} separator domain "
                f"({k} < {beta_floor})",
                level=lvl.level,
            )
    eids = _induced_edges(lvl, H)
    rep_eids = lvl.rep_of[eids]
    if len(rep_eids):
        rh_vids = np.unique(np.concatenate([g.eu[rep_eids], g.ev[rep_eids]]))
    else:
        rh_vids = np.unique(lvl.conset_of(H[:1]))[:1]
    surface, anchors, attempts = backend.separate(rh_vids, rep_eids, seed)

    # step 1: vertices owning a cut geometric object
    s1 = np.unique(lvl.rev[anchors]) if len(anchors) else np.empty(0, dtype=np.int64)

    # step 2: classify by gamma point sets against the surface
    if lvl.gamma_indptr is not None:
        counts = lvl.gamma_indptr[H + 1] - lvl.gamma_indptr[H]
        gdata = csr_gather(lvl.gamma_indptr, lvl.gamma_data, H)
    else:  # base level: gamma(v) = {v}
        counts = np.ones(k, dtype=np.int64)
        gdata = H
    inside_pts = points_strictly_inside(surface, g.points[gdata]).astype(np.int64)
    seg = np.repeat(np.arange(k), counts)
    in_counts = np.bincount(seg, weights=inside_pts, minlength=k).astype(np.int64)
    side = np.full(k, -1, dtype=np.int8)  # 0 = inside group, 1 = outside, 2 = mixed
    nonempty = counts > 0
    side[nonempty & (in_counts == counts)] = 0
    side[nonempty & (in_counts == 0)] = 1
    side[nonempty & (in_counts > 0) & (in_counts < counts)] = 2
    empty = np.flatnonzero(~nonempty)
    if len(empty):  # isolated contracted vertices: classify by an anchor point
        anchor_pts = np.asarray([lvl.conset_of(H[e : e + 1])[0] for e in empty])
        inside_e = points_strictly_inside(surface, g.points[anchor_pts])
        side[empty] = np.where(inside_e, 0, 1)
    s1_local = np.searchsorted(H, s1)
    side[s1_local] = 2
    S = H[side == 2]
    A = H[side == 0]
    B = H[side == 1]

    # A-B edges indicate an inconsistent cut; never return one silently
    if len(eids):
        lu = np.searchsorted(H, lvl.lg.eu[eids])
        lv = np.searchsorted(H, lvl.lg.ev[eids])
        if np.any(side[lu] + side[lv] == 1):
            raise DivisionError(
                "separator_contracted produced an A-B edge", level=lvl.level
            )
    return S, A, B, surface, attempts


def divide(verts, boundary, r, lvl, backend, g, seed, _flags=None, _counter=None):
    """Split a region of lvl's graph into subregions of at most ``r`` vertices.

    Returns a list of (verts, boundary) pairs.  Separator vertices join both
    sides and both boundaries; pieces at or below ``r`` are emitted, with
    oversized boundaries flagged rather than split further (Lemma-1 domain).
    """
    flags = _flags if _flags is not None else {}
    counter = _counter if _counter is not None else [0]
    d = g.d
    bound_cap = config.C_BOUNDARY * r ** (1.0 - 1.0 / (3 * d - 2))
    out = []
    stack = [(np.asarray(sorted(verts), dtype=np.int64), np.asarray(sorted(boundary), dtype=np.int64))]
    while stack:
        pv, pb = stack.pop()
        if len(pv) <= r:
            if len(pb) > bound_cap:
                flags["oversized_boundary"] = flags.get("oversized_boundary", 0) + 1
            out.append((pv, pb))
            continue
        last_err = None
        for _attempt in range(config.RETRY_OUTER):
            call_seed = (int(seed) * 1_000_003 + counter[0]) & 0x7FFFFFFF
            counter[0] += 1
            S, A, B, _surface, _att = separator_contracted(
                pv, lvl, backend, g, call_seed
            )
            if len(A) and len(B):
                break
            last_err = DivisionError(
                f"degenerate split (|A|={len(A)}, |B|={len(B)}, |S|={len(S)}) "
                f"on a piece of {len(pv)}",
                level=lvl.level,
            )
        else:
            # geometrically unsplittable piece: accept slightly oversized
            # regions with a flag rather than fail the whole build
            if len(pv) <= 4 * r:
                flags["unsplit_piece"] = flags.get("unsplit_piece", 0) + 1
                out.append((pv, pb))
                continue
            raise last_err
        wa = np.union1d(A, S)
        wb = np.union1d(B, S)
        ba = np.union1d(np.intersect1d(pb, wa), S)
        bb = np.union1d(np.intersect1d(pb, wb), S)
        stack.append((wa, ba))
        stack.append((wb, bb))
    return out


def expand(region: Region, lvl: ContractionLevel) -> Region:
    """Map a region over G_{i} down to G_{i-1} via the cluster sets."""
    return Region(
        level=region.level - 1,
        verts=np.sort(lvl.cset_of(region.verts)),
        boundary=np.sort(lvl.cset_of(region.boundary)),
    )


def make_backend(klass, g_pipeline, vmap, sys=None, lanky_params=None, delta=None, eps=None, seed=0):
    if klass == "lanky":
        if lanky_params is None:
            tau = max(1, audit_lanky(g_pipeline, samples=64, seed=seed))
            lanky_params = LankyParams(tau=tau, eta=config.packing_eta(g_pipeline.d), d=g_pipeline.d)
        return LankyBackend(g_pipeline, lanky_params)
    if sys is None:
        raise ValueError(f"class {klass!r} needs the generating neighborhood system")
    if klass == "kply":
        return BallBackend(sys, vmap.backward, delta)
    if klass == "cubes":
        return CubeBackend(sys, vmap.backward, eps)
    raise ValueError(f"unknown graph class {klass!r}")


def build_recursive_division(
    g: EuclideanGraph,
    klass: str,
    seed: int,
    sys: NeighborhoodSystem = None,
    lanky_params: LankyParams = None,
    delta: float = None,
    eps: float = None,
) -> DivisionTree:
    """Contraction phase then division phase, producing the full tree."""
    if g.n == 0:
        raise ValueError("empty graph")
    if g.max_degree() > 3:
        gp, vmap = degree3_transform(g)
    else:
        gp, vmap = g, VertexMap.identity(g.n)
    backend = make_backend(
        klass, gp, vmap, sys=sys, lanky_params=lanky_params, delta=delta, eps=eps, seed=seed
    )
    if gp.n < 2:
        root = Region(0, np.arange(gp.n, dtype=np.int64), np.empty(0, dtype=np.int64))
        sched = Schedule(z=[2], alpha=[2], beta=[2 ** (3 * gp.d - 2)], r=[2 ** (3 * gp.d - 1)],
                         f_of_r=[config.C_PRIME * 2 ** (3 * gp.d - 2)], I=0, d=gp.d, n=gp.n)
        return DivisionTree(root, sched, [ContractionLevel.base(gp)], gp, vmap,
                            per_level_stats=[], flags={}, seed=int(seed))
    schedule = make_schedule(gp.n, gp.d)
    levels = build_levels(gp, schedule)
    top = len(levels) - 1
    d = gp.d
    root = Region(top, np.arange(levels[top].n, dtype=np.int64), np.empty(0, dtype=np.int64))
    flags = {}
    counter = [0]
    frontier = [root]
    for lev in range(top, 0, -1):
        lvl = levels[lev]
        beta = lvl.z_used ** (3 * d - 2)
        nxt = []
        for node in frontier:
            pieces = divide(
                node.verts, node.boundary, beta, lvl, backend, gp, seed,
                _flags=flags, _counter=counter,
            )
            for pv, pb in pieces:
                piece_region = Region(lev, pv, pb)
                node.children.append(expand(piece_region, lvl))
            nxt.extend(node.children)
        frontier = nxt
    stats = _collect_stats(root, levels, schedule)
    return DivisionTree(root, schedule, levels, gp, vmap, stats, flags, int(seed))


def _collect_stats(root, levels, schedule):
    by_level = {}

    def walk(node):
        by_level.setdefault(node.level, []).append(node)
        for c in node.children:
            walk(c)

    walk(root)
    stats = []
    for lev in sorted(by_level, reverse=True):
        regions = by_level[lev]
        lvl = levels[lev]
        sizes = np.array([r.size for r in regions])
        bsizes = np.array([len(r.boundary) for r in regions])
        gsizes = np.array([len(lvl.conset_of(r.verts)) for r in regions])
        gbounds = np.array([len(lvl.conset_of(r.boundary)) for r in regions])
        stats.append(
            {
                "level": lev,
                "n_level": int(lvl.n),
                "regions": len(regions),
                "max_size": int(sizes.max()),
                "sum_size": int(sizes.sum()),
                "max_boundary": int(bsizes.max()) if len(bsizes) else 0,
                "max_size_g": int(gsizes.max()),
                "max_boundary_g": int(gbounds.max()) if len(gbounds) else 0,
            }
        )
    return stats


def validate_division(tree: DivisionTree, schedule: Schedule = None) -> dict:
    """Structural and numeric checks; returns a report, never raises."""
    sched = schedule or tree.schedule
    issues = []
    levels = tree.levels
    gp = tree.graph
    by_level = {}

    def walk(node, parent):
        by_level.setdefault(node.level, []).append(node)
        if node.boundary.size and not np.all(np.isin(node.boundary, node.verts)):
            issues.append(f"level {node.level}: boundary not a subset of vertices")
        if parent is not None and node.level != parent.level - 1:
            issues.append("child level is not parent level minus one")
        for c in node.children:
            walk(c, node)

    walk(tree.root, None)

    # children cover the parent's expansion
    def check_cover(node):
        if not node.children:
            return
        lvl = levels[node.level]
        expanded = np.sort(lvl.cset_of(node.verts))
        union = np.unique(np.concatenate([c.verts for c in node.children]))
        if not np.array_equal(expanded, union):
            issues.append(f"level {node.level}: children do not cover the region")
        for c in node.children:
            check_cover(c)

    check_cover(tree.root)

    # boundary iff rule per level: in >= 2 regions, or inherited from parent
    parent_of = {}

    def link(node):
        for c in node.children:
            parent_of[id(c)] = node
            link(c)

    link(tree.root)
    for lev, regions in by_level.items():
        if lev == tree.root.level:
            continue
        count = np.zeros(levels[lev].n, dtype=np.int32)
        for reg in regions:
            count[reg.verts] += 1
        for reg in regions:
            shared = count[reg.verts] >= 2
            par = parent_of[id(reg)]
            par_boundary = levels[par.level].cset_of(par.boundary)
            inherited = np.isin(reg.verts, par_boundary)
            expected = reg.verts[shared | inherited]
            if not np.array_equal(np.sort(expected), reg.boundary):
                issues.append(f"level {lev}: boundary rule violated")
                break

    # every pipeline edge must live inside at least one leaf region
    leaf_of = [[] for _ in range(gp.n)]
    for li, leaf in enumerate(tree.leaves()):
        for v in leaf.verts:
            leaf_of[v].append(li)
    for i in range(gp.m):
        a, b = int(gp.eu[i]), int(gp.ev[i])
        if not set(leaf_of[a]) & set(leaf_of[b]):
            issues.append("edge not covered by any leaf region")
            break

    d = sched.d
    per_level = []
    f_meas = {}
    for lev in sorted(by_level, reverse=True):
        regions = by_level[lev]
        lvl = levels[lev]
        sizes = np.array([r.size for r in regions])
        gsizes = np.array([len(lvl.conset_of(r.verts)) for r in regions])
        gbounds = np.array(
            [len(lvl.conset_of(r.boundary)) for r in regions]
        ) if regions else np.zeros(0)
        f_meas[lev] = max(1.0, float(gbounds.max()) if len(gbounds) else 0.0)
        entry = {"level": lev, "regions": len(regions), "n_level": int(lvl.n)}
        if lev < len(sched.z):
            cap = config.C_REGIONS * max(1.0, lvl.n / sched.z[lev] ** (3 * d - 1))
            entry["region_cap"] = cap
            if len(regions) > cap:
                issues.append(f"level {lev}: too many regions ({len(regions)} > {cap:.1f})")
        if int(sizes.sum()) > config.C_SUM_SIZES * max(lvl.n, 1):
            issues.append(f"level {lev}: region sizes sum to more than {config.C_SUM_SIZES}x n_i")
        if lev < len(sched.r):
            size_cap = config.C_REGION_SIZE * sched.r[lev] ** 2
            if gsizes.max() > size_cap:
                issues.append(f"level {lev}: region of {gsizes.max()} vertices exceeds C*r_i^2")
            if len(gbounds) and gbounds.max() > sched.f_of_r[lev]:
                issues.append(
                    f"level {lev}: boundary {int(gbounds.max())} exceeds f(r_i)={sched.f_of_r[lev]:.1f}"
                )
        entry["sum_size"] = int(sizes.sum())
        entry["max_size_g"] = int(gsizes.max())
        entry["max_boundary_g"] = int(gbounds.max()) if len(gbounds) else 0
        per_level.append(entry)

    # numeric margins of the division inequality, with measured f values
    margins = []
    max_lev = max(by_level)
    for lev in range(1, max_lev + 1):
        r_i = sched.r[lev] if lev < len(sched.r) else None
        r_next = sched.r[lev + 1] if lev + 1 < len(sched.r) else None
        if r_i is None or r_next is None:
            continue
        fm_i = f_meas.get(lev, 1.0)
        fm_prev = f_meas.get(lev - 1, 1.0)
        log_sum = sum(math.log2(sched.r[j]) for j in range(1, lev + 2) if j < len(sched.r))
        rhs = 8**lev * fm_prev * math.log2(r_next) * log_sum
        margin = r_i / fm_i - rhs
        margins.append({"level": lev, "r_i": r_i, "margin": margin})
        if r_i > config.C_HAT and margin <= 0:
            issues.append(f"level {lev}: division inequality violated above C_HAT")

    return {
        "valid": not issues,
        "issues": issues,
        "per_level": per_level,
        "margins": margins,
        "flags": dict(tree.flags),
    }


def _region_to_json(node: Region):
    return {
        "level": int(node.level),
        "vertices": node.verts.tolist(),
        "boundary": node.boundary.tolist(),
        "children": [_region_to_json(c) for c in node.children],
    }


def tree_to_json(tree: DivisionTree) -> str:
    payload = {
        "prng": config.PRNG_NAME,
        "seed": int(tree.seed),
        "schedule": {"z": list(tree.schedule.z), "I": tree.schedule.I, "d": tree.schedule.d},
        "per_level_stats": tree.per_level_stats,
        "flags": dict(tree.flags),
        "root": _region_to_json(tree.root),
    }
    return json.dumps(payload, sort_keys=True)

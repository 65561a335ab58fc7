"""Randomized sublinear separators behind a common cut interface.

Three algorithms, one per graph class:

* ``lanky_separator`` — grow a ball around a random vertex until it holds a
  guaranteed fraction of the graph, inflate its radius by a random factor in
  (1, 2], and cut the edges crossing the inflated ball;
* ``mttv_separator`` — stereographically lift ball centers to the unit
  sphere, recenter so the sphere center approximates a centerpoint of the
  lifted set, draw a random great circle and pull it back to a sphere;
* ``sw_separator`` — find a separating annulus of concentric axis-aligned
  cubes from a sample and draw a random intermediate rectangle.

Every algorithm is Las Vegas: surfaces are redrawn until the size/balance
conditions hold, and exhausting the retry budget raises
:class:`~geosp.errors.SeparatorError` with diagnostics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import config
from .errors import SeparatorError
from .geom import Ball, Rect, Sphere, great_circle_preimage, lift_points
from .generators import LankyParams, NeighborhoodSystem
from .graph import EuclideanGraph


@dataclass
class SeparatorCut:
    surface: object  # Ball | Sphere | Rect
    cut_object_ids: np.ndarray  # edge ids (lanky) or object ids (ball/cube)
    S: np.ndarray
    A: np.ndarray
    B: np.ndarray
    attempts: int


@dataclass
class SeparatorReport:
    sep_size: int
    balance: float
    cut_count: int
    valid: bool


def _sorted_ids(mask_or_ids):
    arr = np.asarray(mask_or_ids)
    if arr.dtype == bool:
        return np.flatnonzero(arr).astype(np.int64)
    return np.sort(arr.astype(np.int64))


# ---------------------------------------------------------------------------
# lanky graphs: random inflated ball


def _lanky_core(pts, eu, ev, params: LankyParams, rng, enforce_balance=True):
    """Returns (ball, cut edge mask, strict-inside vertex mask, attempts)."""
    n = len(pts)
    d = pts.shape[1]
    eta = params.eta
    m_theorem = max(2, math.ceil(n / (eta * 2 ** (d + 1))))
    cap = config.C_REJ * params.tau * eta * 8**d * n ** (1.0 - 1.0 / d)
    balance_cap = (1.0 - 1.0 / (eta * 2 ** (d + 1))) * n
    attempts = 0
    diag = {"step1_rejects": 0, "size_rejects": 0, "balance_rejects": 0}

    for _outer in range(config.RETRY_OUTER):
        # an extra floor on the inside count keeps S from swallowing the whole
        # inside on small subgraphs; it decays when step 1 keeps failing
        floor = min(n // 4, 8 >> min(_outer, 2))
        m_min = max(m_theorem, floor)
        v = int(rng.integers(n))
        dists = np.linalg.norm(pts - pts[v], axis=1)
        if n <= m_min:
            r = float(dists.max())
        else:
            r = float(np.partition(dists, m_min - 1)[m_min - 1])
        if r <= 0.0:
            positive = dists[dists > 0]
            if not len(positive):
                diag["step1_rejects"] += 1
                continue  # all points coincident with v
            r = float(positive.min())
        if n > 2 and int(np.sum(dists <= 2 * r)) > n / 2:
            diag["step1_rejects"] += 1
            continue
        for _inner in range(config.RETRY_INNER):
            attempts += 1
            sigma = 1.0 - rng.random()  # uniform in (0, 1]
            r_star = (1.0 + sigma) * r
            inside = dists < r_star
            cut = inside[eu] != inside[ev]
            n_cut = int(cut.sum())
            if n_cut > cap:
                diag["size_rejects"] += 1
                continue
            if n > 2:
                if n_cut:
                    s_ids = np.unique(np.concatenate([eu[cut], ev[cut]]))
                else:
                    s_ids = np.empty(0, dtype=np.int64)
                in_s = np.zeros(n, dtype=bool)
                in_s[s_ids] = True
                na = int(np.sum(inside & ~in_s))
                nb = n - len(s_ids) - na
                if na == 0 or nb == 0:
                    diag["balance_rejects"] += 1
                    continue
                if enforce_balance and max(na, nb) > balance_cap:
                    diag["balance_rejects"] += 1
                    continue
            return Ball(pts[v], r_star), cut, inside, attempts
    raise SeparatorError("lanky separator: retry budget exhausted", diag)


def lanky_separator(g: EuclideanGraph, params: LankyParams, seed: int) -> SeparatorCut:
    if g.n == 0:
        raise ValueError("graph is empty")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x1A9C)))
    ball, cut, inside, attempts = _lanky_core(g.points, g.eu, g.ev, params, rng)
    s_ids = (
        np.unique(np.concatenate([g.eu[cut], g.ev[cut]]))
        if cut.any()
        else np.empty(0, dtype=np.int64)
    )
    in_s = np.zeros(g.n, dtype=bool)
    in_s[s_ids] = True
    return SeparatorCut(
        surface=ball,
        cut_object_ids=_sorted_ids(cut),
        S=s_ids,
        A=np.flatnonzero(inside & ~in_s),
        B=np.flatnonzero(~inside & ~in_s),
        attempts=attempts,
    )


# ---------------------------------------------------------------------------
# centerpoint approximation (iterated Radon reduction + hyperplane audit)


def _radon_point(pts):
    k = len(pts)
    a = np.vstack([pts.T, np.ones(k)])
    _, _, vh = np.linalg.svd(a)
    lam = vh[-1]
    pos = lam > 0
    total = lam[pos].sum()
    if total <= 1e-300 or not pos.any() or pos.all():
        return pts.mean(axis=0)
    return (lam[pos, None] * pts[pos]).sum(axis=0) / total


def _audit_centerpoint(pts, c, delta, rng, n_planes):
    m, dim = pts.shape
    allowed = delta * m + max(2.0, 0.01 * m)
    x = pts - c
    for start in range(0, n_planes, 128):
        normals = rng.normal(size=(min(128, n_planes - start), dim))
        dots = x @ normals.T
        if max(int((dots > 0).sum(axis=0).max()), int((dots < 0).sum(axis=0).max())) > allowed:
            return False
    return True


def centerpoint_approx(points, delta: float, seed: int) -> np.ndarray:
    """Approximate delta-centerpoint via iterated Radon points, audited."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        pts = pts.reshape(len(pts), -1)
    m, dim = pts.shape
    if not (dim / (dim + 1) < delta < 1):
        raise ValueError(f"delta must lie in ({dim}/{dim + 1}, 1)")
    if m == 1:
        return pts[0].copy()
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0xCE27)))
    group = dim + 2
    for _attempt in range(config.RETRY_OUTER):
        size = min(m, config.CENTERPOINT_SAMPLE)
        pool = pts[rng.choice(m, size=size, replace=False)]
        while len(pool) >= group:
            order = rng.permutation(len(pool))
            n_groups = len(pool) // group
            pool = np.asarray(
                [
                    _radon_point(pool[order[i * group : (i + 1) * group]])
                    for i in range(n_groups)
                ]
            )
        c = pool.mean(axis=0)
        if _audit_centerpoint(pts, c, delta, rng, config.CENTERPOINT_AUDIT_PLANES):
            return c
    raise SeparatorError("centerpoint audit failed after retries", {"m": m, "delta": delta})


# ---------------------------------------------------------------------------
# k-ply ball systems: random great circle through a centered conformal lift


def _mttv_core(centers, radii, delta, rng, pick_best=False):
    """``pick_best`` scans the whole inner budget and keeps the valid draw
    cutting the fewest balls (used inside the division, where cut quality
    controls fragmentation); the default returns the first valid draw, which
    is what the retry-count statistics of the theorem refer to."""
    n, d = centers.shape
    if n == 1:
        sph = Sphere(centers[0], max(float(radii[0]) / 2.0, 1e-9))
        return sph, np.ones(1, dtype=bool), np.zeros(1, dtype=bool), 0
    attempts = 0
    best = None
    diag = {"side_rejects": 0, "centerpoint_failures": 0}
    for _outer in range(config.RETRY_OUTER):
        origin = np.median(centers, axis=0)
        dist0 = np.linalg.norm(centers - origin, axis=1)
        scale = float(np.median(dist0))
        if scale <= 0:
            scale = max(float(np.mean(radii)), 1e-9)
        # recenter the lift so the sphere center approximates a centerpoint
        for _ in range(2):
            lifted = lift_points(centers, origin, scale)
            try:
                c_hat = centerpoint_approx(
                    lifted, delta, int(rng.integers(2**62))
                )
            except SeparatorError:
                diag["centerpoint_failures"] += 1
                break
            if float(np.linalg.norm(c_hat)) < 0.05:
                break
            h = float(c_hat[-1])
            if h >= 0.999:
                break
            origin = origin + scale * (c_hat[:-1] / (1.0 - h))
            dist0 = np.linalg.norm(centers - origin, axis=1)
            new_scale = float(np.median(dist0))
            if new_scale > 0:
                scale = new_scale
        for _inner in range(config.RETRY_INNER):
            attempts += 1
            normal = rng.normal(size=d + 1)
            norm = float(np.linalg.norm(normal))
            if norm == 0:
                continue
            sph = great_circle_preimage(normal / norm, origin, scale)
            if sph is None:
                continue
            dist = np.linalg.norm(centers - sph.center, axis=1)
            cut = np.abs(dist - sph.radius) < radii
            inside = ~cut & (dist < sph.radius)
            n_in = int(inside.sum())
            n_ex = n - int(cut.sum()) - n_in
            nonempty = n <= 2 or (n_in >= 1 and n_ex >= 1)
            if nonempty and n_in <= delta * n and n_ex <= delta * n:
                if not pick_best:
                    return sph, cut, inside, attempts
                n_cut = int(cut.sum())
                if best is None or n_cut < best[0]:
                    best = (n_cut, sph, cut, inside)
            else:
                diag["side_rejects"] += 1
        if best is not None:
            _, sph, cut, inside = best
            return sph, cut, inside, attempts
    if n == 2:  # tiny instances: construct the cut directly
        gap = float(np.linalg.norm(centers[0] - centers[1])) - float(radii.sum())
        if gap > 0:
            sph = Sphere(centers[0], float(radii[0]) + gap / 2.0)
            cut = np.zeros(2, dtype=bool)
            inside = np.array([True, False])
        else:
            w = _lens_point(centers, radii)
            sph = Sphere(w, max(float(radii.min()) / 2.0, 1e-12))
            cut = np.ones(2, dtype=bool)
            inside = np.zeros(2, dtype=bool)
        return sph, cut, inside, attempts
    raise SeparatorError("sphere separator: retry budget exhausted", diag)


def _lens_point(centers, radii):
    delta = centers[1] - centers[0]
    dist = float(np.linalg.norm(delta))
    if dist == 0:
        return centers[0].copy()
    h = (dist**2 + radii[0] ** 2 - radii[1] ** 2) / (2 * dist)
    return centers[0] + delta * (h / dist)


def mttv_separator(sys: NeighborhoodSystem, delta: float, seed: int) -> SeparatorCut:
    if sys.kind != "ball":
        raise ValueError("mttv_separator expects a ball system")
    d = sys.d
    if not ((d + 1) / (d + 2) < delta < 1):
        raise ValueError(f"delta must lie in ({d + 1}/{d + 2}, 1)")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x55E9)))
    sph, cut, inside, attempts = _mttv_core(sys.centers, sys.extents, delta, rng)
    return SeparatorCut(
        surface=sph,
        cut_object_ids=_sorted_ids(cut),
        S=_sorted_ids(cut),
        A=np.flatnonzero(inside),
        B=np.flatnonzero(~cut & ~inside),
        attempts=attempts,
    )


# ---------------------------------------------------------------------------
# kappa-thick cube systems: random rectangle inside a separating annulus


def _sw_core(centers, sides, eps, rng):
    n, d = centers.shape
    if n == 1:
        half = float(sides[0]) / 2.0
        rect = Rect(centers[0] - 2 * half, centers[0] + 2 * half)
        return rect, np.zeros(1, dtype=bool), np.ones(1, dtype=bool), 0
    attempts = 0
    diag = {"no_annulus": 0, "side_rejects": 0}
    size_cap = (2.0 / 3.0 + eps) * n
    frac_req = config.SW_SIDE_FRACTION - eps / 2.0
    q = min(
        n,
        max(
            32,
            int(
                config.SW_SAMPLE_CONST
                * eps**-2
                * d**3
                * math.log(d / eps)
            ),
        ),
    )
    for _outer in range(config.RETRY_OUTER):
        idx = rng.choice(n, size=q, replace=False)
        sc, sh = centers[idx], sides[idx] / 2.0
        mid = np.median(sc, axis=0)
        off = np.abs(sc - mid)
        s_in = (off + sh[:, None]).max(axis=1)  # contained iff scale >= s_in
        s_out = (off - sh[:, None]).max(axis=1)  # outside iff scale <= s_out
        lo = max(float(s_in.min()), 1e-12)
        hi = float(s_in.max())
        if hi <= lo:
            hi = lo * 2.0
        scales = np.geomspace(lo, hi, config.SW_SCALES)
        frac_inside = (s_in[:, None] <= scales[None, :]).mean(axis=0)
        frac_outside = (s_out[:, None] >= scales[None, :]).mean(axis=0)
        ok_in = np.flatnonzero(frac_inside >= frac_req)
        ok_out = np.flatnonzero(frac_outside >= frac_req)
        if not len(ok_in) or not len(ok_out) or scales[ok_in[0]] >= scales[ok_out[-1]]:
            diag["no_annulus"] += 1
            continue
        inner, outer = float(scales[ok_in[0]]), float(scales[ok_out[-1]])
        off_all = np.abs(centers - mid)
        all_in = (off_all + sides[:, None] / 2.0).max(axis=1)
        all_out = (off_all - sides[:, None] / 2.0).max(axis=1)
        for _inner_try in range(config.RETRY_INNER):
            attempts += 1
            s_star = inner + rng.random() * (outer - inner)
            contained = all_in <= s_star
            disjoint = all_out >= s_star
            cut = ~contained & ~disjoint
            na, nb = int(contained.sum()), int(disjoint.sum())
            if n <= 2 or (1 <= na <= size_cap and 1 <= nb <= size_cap):
                rect = Rect(mid - s_star, mid + s_star)
                return rect, cut, contained, attempts
            diag["side_rejects"] += 1
    if n == 2:  # tiny instances: construct the cut directly
        gap = float(np.abs(centers[0] - centers[1]).max()) - float(sides.sum()) / 2.0
        if gap > 0:
            half = sides[0] / 2.0 + gap / 4.0
            rect = Rect(centers[0] - half, centers[0] + half)
            return rect, np.zeros(2, dtype=bool), np.array([True, False]), attempts
        lo = np.maximum(centers[0] - sides[0] / 2.0, centers[1] - sides[1] / 2.0)
        hi = np.minimum(centers[0] + sides[0] / 2.0, centers[1] + sides[1] / 2.0)
        w = (lo + hi) / 2.0
        half = float(sides.min()) / 4.0
        rect = Rect(w - half, w + half)
        return rect, np.ones(2, dtype=bool), np.zeros(2, dtype=bool), attempts
    raise SeparatorError("cube separator: retry budget exhausted", diag)


def sw_separator(sys: NeighborhoodSystem, eps: float, seed: int) -> SeparatorCut:
    if sys.kind != "cube":
        raise ValueError("sw_separator expects a cube system")
    if not (0 < eps < 1.0 / 3.0):
        raise ValueError("epsilon must lie in (0, 1/3)")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x5337)))
    rect, cut, contained, attempts = _sw_core(sys.centers, sys.extents, eps, rng)
    return SeparatorCut(
        surface=rect,
        cut_object_ids=_sorted_ids(cut),
        S=_sorted_ids(cut),
        A=np.flatnonzero(contained),
        B=np.flatnonzero(~cut & ~contained),
        attempts=attempts,
    )


# ---------------------------------------------------------------------------
# validation and serialization


def validate_separator(g: EuclideanGraph, cut: SeparatorCut, rho: float) -> SeparatorReport:
    n = g.n
    side = np.full(n, -1, dtype=np.int8)
    for label, ids in ((0, cut.A), (1, cut.B), (2, cut.S)):
        ids = np.asarray(ids, dtype=np.int64)
        if len(ids) and (ids.min() < 0 or ids.max() >= n):
            raise ValueError("cut refers to unknown vertex ids")
        if np.any(side[ids] >= 0):
            raise ValueError("cut sets are not disjoint")
        side[ids] = label
    if np.any(side < 0):
        raise ValueError("cut sets do not cover the vertex set")
    crossing = (side[g.eu] + side[g.ev]) == 1  # one endpoint A, one B
    na, nb = int((side == 0).sum()), int((side == 1).sum())
    valid = not bool(crossing.any()) and max(na, nb) <= rho * n
    return SeparatorReport(
        sep_size=int((side == 2).sum()),
        balance=(max(na, nb) / n) if n else 0.0,
        cut_count=len(cut.cut_object_ids),
        valid=valid,
    )


def _surface_to_json(surface):
    if isinstance(surface, Ball):
        return {"kind": "ball", "center": surface.center.tolist(), "radius": surface.radius}
    if isinstance(surface, Sphere):
        return {"kind": "sphere", "center": surface.center.tolist(), "radius": surface.radius}
    if isinstance(surface, Rect):
        return {"kind": "rect", "lo": surface.lo.tolist(), "hi": surface.hi.tolist()}
    raise TypeError(f"unsupported surface {type(surface)!r}")


def _surface_from_json(obj):
    if obj["kind"] == "ball":
        return Ball(np.asarray(obj["center"]), float(obj["radius"]))
    if obj["kind"] == "sphere":
        return Sphere(np.asarray(obj["center"]), float(obj["radius"]))
    if obj["kind"] == "rect":
        return Rect(np.asarray(obj["lo"]), np.asarray(obj["hi"]))
    raise ValueError(f"unknown surface kind {obj['kind']!r}")


def cut_to_json(cut: SeparatorCut, seed=None) -> str:
    payload = {
        "surface": _surface_to_json(cut.surface),
        "cut": np.asarray(cut.cut_object_ids).tolist(),
        "S": np.asarray(cut.S).tolist(),
        "A": np.asarray(cut.A).tolist(),
        "B": np.asarray(cut.B).tolist(),
        "attempts": int(cut.attempts),
        "prng": config.PRNG_NAME,
    }
    if seed is not None:
        payload["seed"] = int(seed)
    return json.dumps(payload, sort_keys=True)


def cut_from_json(text: str) -> SeparatorCut:
    obj = json.loads(text)
    return SeparatorCut(
        surface=_surface_from_json(obj["surface"]),
        cut_object_ids=np.asarray(obj["cut"], dtype=np.int64),
        S=np.asarray(obj["S"], dtype=np.int64),
        A=np.asarray(obj["A"], dtype=np.int64),
        B=np.asarray(obj["B"], dtype=np.int64),
        attempts=int(obj["attempts"]),
    )


# ---------------------------------------------------------------------------
# class backends: run a separator on a representative subgraph and report
# which original vertices anchor the cut geometric objects


class LankyBackend:
    """Cut objects are edges; anchors are both endpoints of each cut edge."""

    def __init__(self, g: EuclideanGraph, params: LankyParams):
        self.g = g
        self.params = params

    def separate(self, rh_vids, rh_eids, seed):
        pts = self.g.points[rh_vids]
        local = {int(v): i for i, v in enumerate(rh_vids)}
        leu = np.asarray([local[int(u)] for u in self.g.eu[rh_eids]], dtype=np.int64)
        lev = np.asarray([local[int(v)] for v in self.g.ev[rh_eids]], dtype=np.int64)
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x1A9C)))
        ball, cut, _inside, attempts = _lanky_core(
            pts, leu, lev, self.params, rng, enforce_balance=False
        )
        if cut.any():
            anchors = np.unique(np.concatenate([rh_vids[leu[cut]], rh_vids[lev[cut]]]))
        else:
            anchors = np.empty(0, dtype=np.int64)
        return ball, anchors, attempts


class BallBackend:
    """Cut objects are balls keyed by vertex id (pipeline id -> object)."""

    def __init__(self, sys: NeighborhoodSystem, vertex_to_object, delta=None):
        self.centers = sys.centers[vertex_to_object]
        self.radii = sys.extents[vertex_to_object]
        d = sys.d
        self.delta = delta if delta is not None else (d + 1) / (d + 2) + config.DELTA_MARGIN

    def separate(self, rh_vids, rh_eids, seed):
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x55E9)))
        sph, cut, _inside, attempts = _mttv_core(
            self.centers[rh_vids], self.radii[rh_vids], self.delta, rng
        )
        return sph, rh_vids[cut], attempts


class CubeBackend:
    """Cut objects are cubes keyed by vertex id."""

    def __init__(self, sys: NeighborhoodSystem, vertex_to_object, eps=None):
        self.centers = sys.centers[vertex_to_object]
        self.sides = sys.extents[vertex_to_object]
        self.eps = eps if eps is not None else config.SW_EPSILON

    def separate(self, rh_vids, rh_eids, seed):
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x5337)))
        rect, cut, _contained, attempts = _sw_core(
            self.centers[rh_vids], self.sides[rh_vids], self.eps, rng
        )
        return rect, rh_vids[cut], attempts

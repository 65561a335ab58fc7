"""Dimension-generic geometric primitives and cut predicates.

Conventions used throughout the package:

* points are 1-d float arrays (any sequence is coerced);
* "inside" always means strict inequality — a point exactly on a ball,
  sphere or rectangle surface counts as outside;
* predicates compare floats exactly, with no epsilon.  Degenerate
  tangencies are avoided by the randomized generators, not hidden here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def as_point(p) -> np.ndarray:
    q = np.asarray(p, dtype=np.float64)
    if q.ndim != 1:
        raise ValueError(f"point must be one-dimensional, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("point has non-finite coordinates")
    return q


def _check_same_dim(*points):
    dims = {len(p) for p in points}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch: {sorted(dims)}")


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if self.radius < 0:
            raise ValueError("ball radius must be nonnegative")


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")


@dataclass(frozen=True)
class Cube:
    corner: np.ndarray  # minimum corner
    side: float

    def __post_init__(self):
        object.__setattr__(self, "corner", as_point(self.corner))
        if self.side <= 0:
            raise ValueError("cube side must be positive")


@dataclass(frozen=True)
class Rect:
    lo: np.ndarray
    hi: np.ndarray
    aspect_ratio: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "lo", as_point(self.lo))
        object.__setattr__(self, "hi", as_point(self.hi))
        _check_same_dim(self.lo, self.hi)
        sides = self.hi - self.lo
        if not np.all(sides > 0):
            raise ValueError("rect must satisfy lo < hi on every axis")
        object.__setattr__(self, "aspect_ratio", float(sides.max() / sides.min()))


def distance(p, q) -> float:
    p, q = as_point(p), as_point(q)
    _check_same_dim(p, q)
    return float(np.linalg.norm(p - q))


def ball_cuts_segment(b: Ball, p, q) -> bool:
    """True iff exactly one endpoint of the segment is strictly inside b."""
    p, q = as_point(p), as_point(q)
    _check_same_dim(b.center, p, q)
    pin = float(np.linalg.norm(p - b.center)) < b.radius
    qin = float(np.linalg.norm(q - b.center)) < b.radius
    return pin != qin


def sphere_cuts_ball(s: Sphere, b: Ball) -> bool:
    """True iff b meets both the open interior and open exterior of s."""
    _check_same_dim(s.center, b.center)
    dist = float(np.linalg.norm(s.center - b.center))
    return abs(dist - s.radius) < b.radius


def rect_cuts_cube(r: Rect, c: Cube) -> bool:
    """True iff c is neither inside the closed rect nor disjoint from its open interior."""
    _check_same_dim(r.lo, c.corner)
    clo, chi = c.corner, c.corner + c.side
    contained = bool(np.all(clo >= r.lo) and np.all(chi <= r.hi))
    disjoint = bool(np.any(chi <= r.lo) or np.any(clo >= r.hi))
    return not contained and not disjoint


def point_strictly_inside(surface, p) -> bool:
    """Strict interior test for a point against any cut surface."""
    p = as_point(p)
    if isinstance(surface, (Ball, Sphere)):
        _check_same_dim(surface.center, p)
        return float(np.linalg.norm(p - surface.center)) < surface.radius
    if isinstance(surface, Rect):
        _check_same_dim(surface.lo, p)
        return bool(np.all(p > surface.lo) and np.all(p < surface.hi))
    raise TypeError(f"unsupported surface type {type(surface)!r}")


def points_strictly_inside(surface, pts: np.ndarray) -> np.ndarray:
    """Vectorized strict interior test; ``pts`` has shape (m, d)."""
    pts = np.asarray(pts, dtype=np.float64)
    if isinstance(surface, (Ball, Sphere)):
        return np.linalg.norm(pts - surface.center, axis=1) < surface.radius
    if isinstance(surface, Rect):
        return np.all(pts > surface.lo, axis=1) & np.all(pts < surface.hi, axis=1)
    raise TypeError(f"unsupported surface type {type(surface)!r}")


def stereographic_lift(p, origin, scale: float) -> np.ndarray:
    """Map a point of R^d onto the unit sphere in R^(d+1).

    The point is translated by ``origin`` and divided by ``scale`` before the
    standard inverse stereographic projection (from the north pole), so the
    origin itself lands on the south pole (0, ..., 0, -1).
    """
    p, origin = as_point(p), as_point(origin)
    _check_same_dim(p, origin)
    if scale <= 0:
        raise ValueError("scale must be positive")
    y = (p - origin) / scale
    n2 = float(np.dot(y, y))
    out = np.empty(len(y) + 1)
    out[:-1] = 2.0 * y / (n2 + 1.0)
    out[-1] = (n2 - 1.0) / (n2 + 1.0)
    return out


def stereographic_unlift(x, origin, scale: float) -> np.ndarray:
    """Inverse of :func:`stereographic_lift` for points not at the north pole."""
    x = as_point(x)
    origin = as_point(origin)
    if scale <= 0:
        raise ValueError("scale must be positive")
    h = float(x[-1])
    if h >= 1.0:
        raise ValueError("north pole has no finite preimage")
    y = x[:-1] / (1.0 - h)
    return origin + scale * y


def lift_points(pts: np.ndarray, origin, scale: float) -> np.ndarray:
    """Vectorized :func:`stereographic_lift` for an (m, d) array."""
    pts = np.asarray(pts, dtype=np.float64)
    y = (pts - np.asarray(origin, dtype=np.float64)) / scale
    n2 = np.einsum("ij,ij->i", y, y)
    out = np.empty((pts.shape[0], pts.shape[1] + 1))
    out[:, :-1] = 2.0 * y / (n2 + 1.0)[:, None]
    out[:, -1] = (n2 - 1.0) / (n2 + 1.0)
    return out


def great_circle_preimage(normal, origin, scale: float):
    """Preimage in R^d of the great circle {x on U_d : normal . x = 0}.

    Returns a :class:`Sphere` in original coordinates, or ``None`` when the
    circle passes through the north pole (preimage is a hyperplane, a
    measure-zero draw that callers simply redraw).
    """
    normal = as_point(normal)
    origin = as_point(origin)
    a, u_last = normal[:-1], float(normal[-1])
    if u_last == 0.0 or not math.isfinite(1.0 / u_last):
        return None
    m = -a / u_last
    r2 = 1.0 + float(np.dot(a, a)) / (u_last * u_last)
    center = origin + scale * m
    radius = scale * math.sqrt(r2)
    if not math.isfinite(radius) or radius <= 0:
        return None
    return Sphere(center, radius)

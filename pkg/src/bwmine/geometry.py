"""2D convex-hull helpers for battle footprints.

Hulls are tuples of (x, y) vertices in counter-clockwise order starting
from the lexicographically smallest vertex. Degenerate hulls (a single
point or a collinear segment) are first-class: they arise whenever a
battle has seen fewer than three distinct death positions.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

Point = tuple[float, float]


def _cross(o: Point, a: Point, b: Point) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Iterable[Point]) -> tuple[Point, ...]:
    """Monotone-chain hull; collinear interior points are dropped."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return tuple(pts)
    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) <= 1:        # all points collinear: keep the extreme pair
        return (pts[0], pts[-1])
    return tuple(hull)


def hull_insert(hull: Sequence[Point], p: Point) -> tuple[Point, ...]:
    """Hull of the existing vertices plus one new point."""
    return convex_hull(tuple(hull) + (p,))


def _segment_distance(a: Point, b: Point, p: Point) -> float:
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    seg_len2 = dx * dx + dy * dy
    if seg_len2 == 0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / seg_len2
    t = max(0.0, min(1.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def point_in_hull(hull: Sequence[Point], p: Point) -> bool:
    """True when p lies inside or on the hull boundary."""
    n = len(hull)
    if n == 0:
        return False
    if n == 1:
        return p == tuple(hull[0])
    if n == 2:
        return _segment_distance(hull[0], hull[1], p) == 0.0
    for i in range(n):
        if _cross(hull[i], hull[(i + 1) % n], p) < 0:
            return False
    return True


def distance_to_hull(hull: Sequence[Point], p: Point) -> float:
    """Euclidean distance from p to the hull; 0 when inside."""
    n = len(hull)
    if n == 0:
        return math.inf
    if n == 1:
        return math.hypot(p[0] - hull[0][0], p[1] - hull[0][1])
    if n == 2:
        return _segment_distance(hull[0], hull[1], p)
    if point_in_hull(hull, p):
        return 0.0
    return min(_segment_distance(hull[i], hull[(i + 1) % n], p) for i in range(n))


def hull_area(hull: Sequence[Point]) -> float:
    if len(hull) < 3:
        return 0.0
    s = 0.0
    for i in range(len(hull)):
        x0, y0 = hull[i]
        x1, y1 = hull[(i + 1) % len(hull)]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2.0


def hull_centroid(hull: Sequence[Point]) -> Point:
    """Area centroid; falls back to the vertex mean for degenerate hulls."""
    n = len(hull)
    if n == 0:
        raise ValueError("empty hull")
    area2 = 0.0
    cx = cy = 0.0
    if n >= 3:
        for i in range(n):
            x0, y0 = hull[i]
            x1, y1 = hull[(i + 1) % n]
            w = x0 * y1 - x1 * y0
            area2 += w
            cx += (x0 + x1) * w
            cy += (y0 + y1) * w
    if area2 == 0.0:
        return (sum(p[0] for p in hull) / n, sum(p[1] for p in hull) / n)
    return (cx / (3.0 * area2), cy / (3.0 * area2))

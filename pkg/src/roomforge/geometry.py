"""2D oriented-rectangle and rectilinear-polygon geometry in the floor plane."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .scene import ModelCatalog, PlacedInstance, Point

# Penetration below this depth (m) is treated as contact, not overlap.
EPS = 1e-7
PARALLEL_TOL_DEG = 2.0
DEFAULT_GAP_TOL = 0.02
DEFAULT_MIN_OVERLAP = 0.5


@dataclass(frozen=True)
class OrientedRect:
    """Rectangle with center ``(cx, cz)``, half extents and yaw.

    ``hx`` runs along the local front axis ``(cos yaw, sin yaw)`` and ``hz``
    along the lateral axis ``(-sin yaw, cos yaw)``.  The lateral axis points
    to the object's right.
    """

    cx: float
    cz: float
    hx: float
    hz: float
    yaw: float = 0.0

    def __post_init__(self) -> None:
        if not (self.hx > 0 and self.hz > 0):
            raise ValueError("half extents must be > 0")

    @property
    def axes(self) -> tuple[Point, Point]:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return (c, s), (-s, c)

    def corners(self) -> list[Point]:
        (ax, az), (bx, bz) = self.axes
        out = []
        for su, sv in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
            u, v = su * self.hx, sv * self.hz
            out.append((self.cx + u * ax + v * bx, self.cz + u * az + v * bz))
        return out

    def area(self) -> float:
        return 4.0 * self.hx * self.hz

    def aabb(self) -> tuple[float, float, float, float]:
        c, s = abs(math.cos(self.yaw)), abs(math.sin(self.yaw))
        ex = self.hx * c + self.hz * s
        ez = self.hx * s + self.hz * c
        return self.cx - ex, self.cz - ez, self.cx + ex, self.cz + ez

    def contains_point(self, x: float, z: float, tol: float = 0.0) -> bool:
        (ax, az), (bx, bz) = self.axes
        dx, dz = x - self.cx, z - self.cz
        return abs(dx * ax + dz * az) <= self.hx + tol and abs(dx * bx + dz * bz) <= self.hz + tol

    def to_local(self, x: float, z: float) -> Point:
        (ax, az), (bx, bz) = self.axes
        dx, dz = x - self.cx, z - self.cz
        return dx * ax + dz * az, dx * bx + dz * bz

    def edges(self) -> list[tuple[Point, Point, Point]]:
        """Edges as ``(start, end, outward normal)``."""
        (ax, az), (bx, bz) = self.axes
        cs = self.corners()
        normals = [(bx, bz), (-ax, -az), (-bx, -bz), (ax, az)]
        return [(cs[i], cs[(i + 1) % 4], normals[i]) for i in range(4)]


def local_to_world(cx: float, cz: float, yaw: float, u: float, v: float) -> Point:
    """Map a point given along (front, lateral) of a frame into world x/z."""
    c, s = math.cos(yaw), math.sin(yaw)
    return cx + u * c - v * s, cz + u * s + v * c


def world_to_local(cx: float, cz: float, yaw: float, x: float, z: float) -> Point:
    c, s = math.cos(yaw), math.sin(yaw)
    dx, dz = x - cx, z - cz
    return dx * c + dz * s, -dx * s + dz * c


def footprint(instance: PlacedInstance, catalog: ModelCatalog) -> OrientedRect:
    rec = catalog[instance.model_id]
    return OrientedRect(instance.position[0], instance.position[2], rec.depth / 2.0, rec.width / 2.0, instance.yaw)


def padded(rect: OrientedRect, padding: Sequence[float]) -> OrientedRect:
    """Grow ``rect`` by (front, back, left, right) clearances in its own frame."""
    front, back, left, right = padding
    du = (front - back) / 2.0
    dv = (right - left) / 2.0
    cx, cz = local_to_world(rect.cx, rect.cz, rect.yaw, du, dv)
    return OrientedRect(cx, cz, rect.hx + (front + back) / 2.0, rect.hz + (left + right) / 2.0, rect.yaw)


def padded_footprint(instance: PlacedInstance, catalog: ModelCatalog) -> OrientedRect:
    return padded(footprint(instance, catalog), instance.padding)


def _project(corners: list[Point], axis: Point) -> tuple[float, float]:
    vals = [x * axis[0] + z * axis[1] for x, z in corners]
    return min(vals), max(vals)


def overlap_depth(a: OrientedRect, b: OrientedRect) -> float:
    """Minimum interval overlap over the separating axes (negative if apart)."""
    ca, cb = a.corners(), b.corners()
    best = math.inf
    for axis in (*a.axes, *b.axes):
        a0, a1 = _project(ca, axis)
        b0, b1 = _project(cb, axis)
        best = min(best, min(a1, b1) - max(a0, b0))
    return best


def rects_intersect(a: OrientedRect, b: OrientedRect) -> bool:
    """True iff the interiors overlap; shared edges do not count."""
    # cheap circle rejection
    ra = math.hypot(a.hx, a.hz)
    rb = math.hypot(b.hx, b.hz)
    if math.hypot(a.cx - b.cx, a.cz - b.cz) >= ra + rb:
        return False
    return overlap_depth(a, b) > EPS


def abutting(
    a: OrientedRect,
    b: OrientedRect,
    gap_tol: float = DEFAULT_GAP_TOL,
    min_overlap: float = DEFAULT_MIN_OVERLAP,
) -> bool:
    """True iff an edge of ``a`` faces an edge of ``b`` across a gap of at most ``gap_tol``.

    The edges must be parallel within 2 degrees, and their overlap along the
    edge direction must cover at least ``min_overlap`` of the shorter edge.
    """
    if gap_tol < 0 or not (0 < min_overlap <= 1):
        raise ValueError("need gap_tol >= 0 and 0 < min_overlap <= 1")
    reach = math.hypot(a.hx, a.hz) + math.hypot(b.hx, b.hz) + gap_tol
    if math.hypot(a.cx - b.cx, a.cz - b.cz) > reach:
        return False
    sin_tol = math.sin(math.radians(PARALLEL_TOL_DEG))
    sep_tol = max(gap_tol, EPS)
    for pa, qa, na in a.edges():
        da = (qa[0] - pa[0], qa[1] - pa[1])
        la = math.hypot(*da)
        ua = (da[0] / la, da[1] / la)
        for pb, qb, nb in b.edges():
            # outward normals must oppose each other
            if na[0] * nb[0] + na[1] * nb[1] > -math.cos(math.radians(PARALLEL_TOL_DEG)):
                continue
            db = (qb[0] - pb[0], qb[1] - pb[1])
            lb = math.hypot(*db)
            if abs(ua[0] * db[1] - ua[1] * db[0]) / lb > sin_tol:
                continue
            ta0, ta1 = 0.0, la
            tb = sorted(((pb[0] - pa[0]) * ua[0] + (pb[1] - pa[1]) * ua[1],
                         (qb[0] - pa[0]) * ua[0] + (qb[1] - pa[1]) * ua[1]))
            lo, hi = max(ta0, tb[0]), min(ta1, tb[1])
            if hi - lo < min_overlap * min(la, lb) - EPS:
                continue
            # separation of b's edge line from a's edge, at both ends of the overlap
            ok = True
            for t in (lo, hi):
                # point on b's edge whose projection on a's edge is t
                span = (qb[0] - pb[0]) * ua[0] + (qb[1] - pb[1]) * ua[1]
                f = 0.0 if abs(span) < 1e-12 else ((t - ((pb[0] - pa[0]) * ua[0] + (pb[1] - pa[1]) * ua[1])) / span)
                px, pz = pb[0] + f * db[0], pb[1] + f * db[1]
                sep = (px - pa[0]) * na[0] + (pz - pa[1]) * na[1]
                if abs(sep) > sep_tol:
                    ok = False
                    break
            if ok:
                return True
    return False


# --- polygons -------------------------------------------------------------


def polygon_area(poly: Sequence[Point]) -> float:
    s = 0.0
    n = len(poly)
    for i in range(n):
        x0, z0 = poly[i]
        x1, z1 = poly[(i + 1) % n]
        s += x0 * z1 - x1 * z0
    return abs(s) / 2.0


def polygon_edges(poly: Sequence[Point]) -> list[tuple[Point, Point]]:
    n = len(poly)
    return [(poly[i], poly[(i + 1) % n]) for i in range(n)]


def is_rectilinear(poly: Sequence[Point], tol: float = 1e-9) -> bool:
    if len(poly) < 4:
        return False
    for (x0, z0), (x1, z1) in polygon_edges(poly):
        horiz = abs(z0 - z1) <= tol
        vert = abs(x0 - x1) <= tol
        if horiz == vert:  # diagonal or zero-length
            return False
    return True


def _segments_cross(p: Point, q: Point, r: Point, s: Point) -> bool:
    def orient(a: Point, b: Point, c: Point) -> float:
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_seg(a: Point, b: Point, c: Point) -> bool:
        return min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12 and \
            min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12

    o1, o2, o3, o4 = orient(p, q, r), orient(p, q, s), orient(r, s, p), orient(r, s, q)
    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)) and o1 and o2 and o3 and o4:
        return True
    if o1 == 0 and on_seg(p, q, r):
        return True
    if o2 == 0 and on_seg(p, q, s):
        return True
    if o3 == 0 and on_seg(r, s, p):
        return True
    if o4 == 0 and on_seg(r, s, q):
        return True
    return False


def is_simple(poly: Sequence[Point]) -> bool:
    """No two non-adjacent edges touch; adjacent edges meet only at their shared vertex."""
    n = len(poly)
    if n < 3 or polygon_area(poly) <= 0:
        return False
    edges = polygon_edges(poly)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(*edges[i], *edges[j]):
                return False
    return True


def point_in_polygon(x: float, z: float, poly: Sequence[Point], tol: float = 1e-9) -> bool:
    """Closed point-membership (boundary counts as inside)."""
    inside = False
    n = len(poly)
    for i in range(n):
        x0, z0 = poly[i]
        x1, z1 = poly[(i + 1) % n]
        # on-edge test
        if min(x0, x1) - tol <= x <= max(x0, x1) + tol and min(z0, z1) - tol <= z <= max(z0, z1) + tol:
            cross = (x1 - x0) * (z - z0) - (z1 - z0) * (x - x0)
            seg = math.hypot(x1 - x0, z1 - z0)
            if seg > 0 and abs(cross) / seg <= tol:
                return True
        if (z0 > z) != (z1 > z):
            xi = x0 + (z - z0) * (x1 - x0) / (z1 - z0)
            if x < xi:
                inside = not inside
    return inside


def segment_hits_box(p: Point, q: Point, rect: OrientedRect, shrink: float = 0.0) -> bool:
    """True iff segment ``pq`` passes through the open interior of ``rect`` shrunk by ``shrink``."""
    hx, hz = rect.hx - shrink, rect.hz - shrink
    if hx <= 0 or hz <= 0:
        return False
    u0, v0 = rect.to_local(*p)
    u1, v1 = rect.to_local(*q)
    t0, t1 = 0.0, 1.0
    du, dv = u1 - u0, v1 - v0
    # Liang-Barsky clipping against |u| < hx, |v| < hz
    for d, a, lim in ((du, u0, hx), (dv, v0, hz)):
        if abs(d) < 1e-15:
            if abs(a) >= lim:
                return False
            continue
        ta, tb = (-lim - a) / d, (lim - a) / d
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 >= t1:
            return False
    return True


def rect_inside_polygon(rect: OrientedRect, poly: Sequence[Point], tol: float = 1e-6) -> bool:
    """Containment of a convex rectangle in a simple polygon (boundary contact allowed)."""
    for x, z in rect.corners():
        if not point_in_polygon(x, z, poly, tol):
            return False
    for p, q in polygon_edges(poly):
        if segment_hits_box(p, q, rect, shrink=tol):
            return False
    return True


def opening_segment(boundary: Sequence[Point], wall: int, offset: float, width: float) -> tuple[Point, Point, Point]:
    """Endpoints of an opening on boundary edge ``wall`` and the inward unit normal.

    The boundary is assumed clockwise in the x-east/z-south frame (as produced
    by :func:`roomforge.scene.rect_boundary`); the inward normal is computed
    from the polygon orientation so either winding works.
    """
    edges = polygon_edges(boundary)
    if not 0 <= wall < len(edges):
        raise ValueError(f"wall index {wall} out of range")
    (x0, z0), (x1, z1) = edges[wall]
    length = math.hypot(x1 - x0, z1 - z0)
    ux, uz = (x1 - x0) / length, (z1 - z0) / length
    a = offset - width / 2.0
    b = offset + width / 2.0
    p = (x0 + ux * a, z0 + uz * a)
    q = (x0 + ux * b, z0 + uz * b)
    # signed area decides which side of the edge is the interior
    s = 0.0
    for (px, pz), (qx, qz) in edges:
        s += px * qz - qx * pz
    # s > 0: counter-clockwise in (x, z) → interior on the left of travel
    nx, nz = (-uz, ux) if s > 0 else (uz, -ux)
    return p, q, (nx, nz)


def wall_length(boundary: Sequence[Point], wall: int) -> float:
    (x0, z0), (x1, z1) = polygon_edges(boundary)[wall]
    return math.hypot(x1 - x0, z1 - z0)


def apron_rect(boundary: Sequence[Point], wall: int, offset: float, width: float, depth: float) -> OrientedRect:
    """Rectangle of ``width`` x ``depth`` in front of an opening, on the interior side."""
    p, q, (nx, nz) = opening_segment(boundary, wall, offset, width)
    mx, mz = (p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0
    cx, cz = mx + nx * depth / 2.0, mz + nz * depth / 2.0
    yaw = math.atan2(nz, nx)
    return OrientedRect(cx, cz, depth / 2.0, width / 2.0, yaw)

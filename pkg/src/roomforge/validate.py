"""Independent layout checker.

Everything here is recomputed from the stored layout with shapely geometry
and a plain breadth-first flood fill, sharing no predicate code with the
sampler or the rejection loop, so it can audit their output.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon, box

from .constraints import ConstraintSpec
from .scene import PADDING_SIDES, Category, Layout, ModelCatalog, Opening, PlacedInstance

TOLERANCE = 1e-3


@dataclass
class Report:
    """Violations found in one layout; empty means the layout is valid."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, msg: str) -> None:
        self.violations.append(msg)


def instance_polygon(inst: PlacedInstance, catalog: ModelCatalog, padding: Sequence[float] | None = None) -> Polygon:
    """Footprint (optionally grown by front/back/left/right clearances) as a shapely polygon."""
    rec = catalog[inst.model_id]
    front, back, left, right = padding if padding is not None else (0.0, 0.0, 0.0, 0.0)
    u0, u1 = -rec.depth / 2 - back, rec.depth / 2 + front
    v0, v1 = -rec.width / 2 - left, rec.width / 2 + right
    fx, fz = math.cos(inst.yaw), math.sin(inst.yaw)
    rx, rz = -fz, fx
    pts = [(inst.x + u * fx + v * rx, inst.z + u * fz + v * rz) for u, v in ((u0, v0), (u1, v0), (u1, v1), (u0, v1))]
    return Polygon(pts)


def side_strip(inst: PlacedInstance, catalog: ModelCatalog, side: str, depth: float) -> Polygon:
    """The band of ``depth`` directly beyond one side of an instance's footprint."""
    pads = [0.0, 0.0, 0.0, 0.0]
    pads[PADDING_SIDES.index(side)] = depth
    grown = instance_polygon(inst, catalog, pads)
    return grown.difference(instance_polygon(inst, catalog))


def _wall(boundary: Polygon, wall: int) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(boundary.exterior.coords)
    return pts[wall], pts[wall + 1]


def opening_region(layout: Layout, op: Opening, depth: float) -> Polygon | None:
    """Rectangle ``op.width`` wide and ``depth`` deep on the room side of an opening."""
    room = Polygon(layout.boundary)
    n = len(layout.boundary)
    if not 0 <= op.wall < n:
        return None
    a, b = np.asarray(layout.boundary[op.wall], float), np.asarray(layout.boundary[(op.wall + 1) % n], float)
    length = float(np.linalg.norm(b - a))
    t = (b - a) / length
    p = a + t * (op.offset - op.width / 2)
    q = a + t * (op.offset + op.width / 2)
    normal = np.array([-t[1], t[0]])
    mid = (p + q) / 2
    if not room.contains(shapely.Point(*(mid + normal * 1e-4))):
        normal = -normal
    return Polygon([tuple(p), tuple(q), tuple(q + normal * depth), tuple(p + normal * depth)])


# --- raster and flood fill ------------------------------------------------------------------


def _raster(layout: Layout, catalog: ModelCatalog, resolution: float):
    room = Polygon(layout.boundary)
    x0, z0, x1, z1 = room.bounds
    nx = max(1, math.ceil((x1 - x0) / resolution - 1e-9))
    nz = max(1, math.ceil((z1 - z0) / resolution - 1e-9))
    xs = x0 + (np.arange(nx) + 0.5) * resolution
    zs = z0 + (np.arange(nz) + 0.5) * resolution
    X, Z = np.meshgrid(xs, zs)
    free = shapely.contains_xy(room, X, Z)
    for inst in layout.instances:
        if catalog.category_of(inst.model_id) == Category.FURNITURE:
            free &= ~shapely.contains_xy(instance_polygon(inst, catalog), X, Z)
    return free, X, Z


def _shift_and(grid: np.ndarray, radius: float, resolution: float) -> np.ndarray:
    """Erosion written as an AND over shifted copies, one per disk offset."""
    r = int(math.floor(radius / resolution + 1e-9))
    out = grid.copy()
    nz, nx = grid.shape
    for di in range(-r, r + 1):
        for dj in range(-r, r + 1):
            if (di * di + dj * dj) * resolution * resolution > radius * radius + 1e-12:
                continue
            shifted = np.zeros_like(grid)
            src = grid[max(di, 0):nz + min(di, 0), max(dj, 0):nx + min(dj, 0)]
            shifted[max(-di, 0):nz + min(-di, 0), max(-dj, 0):nx + min(-dj, 0)] = src
            out &= shifted
    return out


def _components(mask: np.ndarray) -> np.ndarray:
    """4-connected labels by breadth-first search; 0 means unset."""
    nz, nx = mask.shape
    labels = np.zeros(mask.shape, dtype=int)
    current = 0
    for i in range(nz):
        for j in range(nx):
            if not mask[i, j] or labels[i, j]:
                continue
            current += 1
            labels[i, j] = current
            queue = deque([(i, j)])
            while queue:
                a, b = queue.popleft()
                for c, d in ((a + 1, b), (a - 1, b), (a, b + 1), (a, b - 1)):
                    if 0 <= c < nz and 0 <= d < nx and mask[c, d] and not labels[c, d]:
                        labels[c, d] = current
                        queue.append((c, d))
    return labels


def flood_fill_traversable(
    layout: Layout,
    catalog: ModelCatalog,
    resolution: float = 0.05,
    r_pass: float = 0.25,
    r_access: float = 0.35,
) -> bool:
    """Reference answer for traversability: access and door cells share one component."""
    free, X, Z = _raster(layout, catalog, resolution)
    passable = _shift_and(free, r_pass, resolution)
    access = _shift_and(free, r_access, resolution)
    need = access.copy()
    union = passable | access
    for op in layout.openings:
        if op.kind != "door":
            continue
        region = opening_region(layout, op, 2 * r_pass)
        cells = shapely.contains_xy(region, X, Z) & free if region is not None else np.zeros_like(free)
        if not cells.any():
            return False
        need |= cells
        union |= cells
    if not need.any():
        return True
    labels = _components(union)
    return len(set(labels[need].tolist())) == 1


# --- full audit ------------------------------------------------------------------------------


def validate_layout(
    layout: Layout,
    catalog: ModelCatalog,
    spec: ConstraintSpec | None = None,
    resolution: float = 0.05,
    r_pass: float = 0.25,
    r_access: float = 0.35,
    tol: float = TOLERANCE,
) -> Report:
    """Audit geometry and, when ``spec`` is given, every constraint it states."""
    rep = Report()
    room = Polygon(layout.boundary)
    if not room.is_valid:
        rep.add("boundary is not a simple polygon")
        return rep
    grown_room = room.buffer(tol)
    furn = [i for i in layout.instances if catalog.category_of(i.model_id) == Category.FURNITURE]
    bodies = [instance_polygon(i, catalog) for i in furn]
    padded = [instance_polygon(i, catalog, i.padding) for i in furn]

    for inst, poly in zip(furn, padded):
        if not grown_room.contains(poly):
            rep.add(f"{inst.model_id} at ({inst.x:.3f}, {inst.z:.3f}) leaves the room")
    shrunk = [p.buffer(-tol / 2) for p in padded]
    for a in range(len(furn)):
        for b in range(a + 1, len(furn)):
            if shrunk[a].intersects(shrunk[b]):
                rep.add(f"{furn[a].model_id} and {furn[b].model_id} overlap")

    if spec is None:
        return rep

    if spec.room_type is not None and layout.room_type.value != spec.room_type:
        rep.add(f"room type {layout.room_type.value} != {spec.room_type}")
    if spec.size is not None:
        x0, z0, x1, z1 = room.bounds
        for got, want, axis in ((x1 - x0, spec.size[0], "width"), (z1 - z0, spec.size[1], "depth")):
            if abs(got - want) > spec.size_tolerance * want + 1e-9:
                rep.add(f"{axis} {got:.3f} outside {want} +/- {spec.size_tolerance:.0%}")
    if spec.boundary is not None and not room.equals(Polygon(spec.boundary)):
        rep.add("boundary differs from the requested one")

    for p in spec.placements:
        hits = [
            i for i in layout.instances
            if i.model_id == p.what or (i.model_id in catalog and catalog.class_of(i.model_id) == p.what)
        ]
        if not any(math.dist((i.x, i.z), p.target) <= p.tolerance + 1e-9 for i in hits):
            rep.add(f"no {p.what} within {p.tolerance} m of {p.target}")

    for g in spec.gaps:
        (sx, sz), (tx, tz) = g.size, g.target
        rect = box(tx - sx / 2, tz - sz / 2, tx + sx / 2, tz + sz / 2)
        if not grown_room.contains(rect):
            rep.add(f"gap at {g.target} leaves the room")
        inner = rect.buffer(-tol / 2)
        if any(inner.intersects(b) for b in bodies):
            rep.add(f"gap at {g.target} is occupied")

    for c in spec.clearances:
        for inst in furn:
            if catalog.class_of(inst.model_id) != c.cls or c.minimum <= tol:
                continue
            strip = side_strip(inst, catalog, c.side, c.minimum - tol)
            blocked = not grown_room.contains(strip) or any(
                strip.intersection(b).area > tol * tol for j, b in zip(furn, bodies) if j is not inst
            )
            if blocked:
                rep.add(f"{inst.model_id} has less than {c.minimum} m on its {c.side}")

    for inst in layout.instances:
        if inst.model_id in catalog and catalog.class_of(inst.model_id) in spec.excluded_classes:
            rep.add(f"excluded class present: {inst.model_id}")

    if set(spec.openings) - set(layout.openings):
        rep.add("requested openings missing from layout")
    for op in layout.openings:
        n = len(layout.boundary)
        a, b = layout.boundary[op.wall % n], layout.boundary[(op.wall + 1) % n]
        if not (0 <= op.wall < n) or op.offset - op.width / 2 < -tol or op.offset + op.width / 2 > math.dist(a, b) + tol:
            rep.add(f"{op.kind} on wall {op.wall} does not fit")
            continue
        if op.kind == "door":
            swing = opening_region(layout, op, op.width)
            if not grown_room.contains(swing):
                rep.add(f"door on wall {op.wall} swings outside the room")
            inner = swing.buffer(-tol / 2)
            if any(inner.intersects(b) for b in bodies):
                rep.add(f"door on wall {op.wall} is blocked")

    if spec.traversability and not flood_fill_traversable(layout, catalog, resolution, r_pass, r_access):
        rep.add("free space is not traversable")
    return rep

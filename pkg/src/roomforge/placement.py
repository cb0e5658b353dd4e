"""Deterministic realization of pending furniture into a room.

A rectangular region is split into nine cells: four corners, four wall edges
and one interior cell.  Wall-cell contents stand with their back to the wall
and are laid along it in sampling order; interior contents are packed in
shelf rows.  Without a fixed boundary the room is sized to the largest of
the three parallel bands on each axis; with one, leftover space along each
wall or row is shared out evenly between and around the objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .geometry import is_rectilinear, is_simple, local_to_world, polygon_area, polygon_edges
from .scene import CELLS, Layout, Opening, PlacedInstance, Point, RoomType, normalize_yaw, rect_boundary

HALF_PI = math.pi / 2
# Yaw that puts an object's back to the wall of its cell.
CELL_YAW = {
    "N": HALF_PI, "E": math.pi, "S": 3 * HALF_PI, "W": 0.0,
    "NW": HALF_PI, "NE": HALF_PI, "SW": 3 * HALF_PI, "SE": 3 * HALF_PI,
}
# Padding sides (indices into front, back, left, right) that face a wall.
WALL_FACING = {
    "N": (1,), "E": (1,), "S": (1,), "W": (1,),
    "NW": (1, 3), "NE": (1, 2), "SW": (1, 2), "SE": (1, 3),
}
EDGES = ("N", "E", "S", "W")
CORNERS = ("NW", "NE", "SW", "SE")

Rect = tuple[float, float, float, float]  # x0, z0, x1, z1


class Overflow(Exception):
    """The contents do not fit the fixed boundary."""


class NotRectilinear(ValueError):
    pass


@dataclass(frozen=True)
class PlacementConfig:
    min_width: float = 2.0
    min_depth: float = 2.0
    interior_row_width: float = 3.0


@dataclass(frozen=True)
class Member:
    """One model of a pending unit, posed in the unit frame (front, lateral)."""

    model_id: str
    offset: tuple[float, float] = (0.0, 0.0)
    rel_yaw: float = 0.0
    depth: float = 0.0
    width: float = 0.0


@dataclass(frozen=True)
class PendingInstance:
    """A unit awaiting placement: a model, a rigid group, or an empty gap.

    ``hard`` marks padding sides that must be kept even against a wall.
    ``target`` pins the unit's center (within its cell's freedom); ``gap``
    gives ``(depth, width)`` of a reserved rectangle that yields no
    instances.
    """

    unit: str
    members: tuple[Member, ...]
    cell: str
    yaw: float = 0.0
    padding: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    hard: tuple[bool, bool, bool, bool] = (False, False, False, False)
    target: tuple[float, float] | None = None
    gap: tuple[float, float] | None = None
    group: str | None = None

    def __post_init__(self) -> None:
        if self.cell not in CELLS:
            raise ValueError(f"invalid cell id {self.cell!r}")
        if any(p < 0 for p in self.padding):
            raise ValueError("padding must be >= 0")
        if not self.members and self.gap is None:
            raise ValueError("a pending unit needs members or gap dimensions")

    def effective_yaw(self) -> float:
        return CELL_YAW.get(self.cell, self.yaw)

    def effective_padding(self) -> tuple[float, float, float, float]:
        pad = list(self.padding)
        for side in WALL_FACING.get(self.cell, ()):
            if not self.hard[side]:
                pad[side] = 0.0
        return tuple(pad)

    def local_box(self) -> Rect:
        """Unpadded bounds ``(u0, v0, u1, v1)`` in the unit frame."""
        if not self.members:
            d, w = self.gap
            return -d / 2, -w / 2, d / 2, w / 2
        us, vs = [], []
        for m in self.members:
            c, s = math.cos(m.rel_yaw), math.sin(m.rel_yaw)
            for su, sv in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                du, dv = su * m.depth / 2, sv * m.width / 2
                us.append(m.offset[0] + du * c - dv * s)
                vs.append(m.offset[1] + du * s + dv * c)
        return min(us), min(vs), max(us), max(vs)

    def world_extent(self) -> Rect:
        """Padded bounds relative to the unit origin, in world axes."""
        u0, v0, u1, v1 = self.local_box()
        front, back, left, right = self.effective_padding()
        u0, u1, v0, v1 = u0 - back, u1 + front, v0 - left, v1 + right
        yaw = self.effective_yaw()
        pts = [local_to_world(0.0, 0.0, yaw, u, v) for u in (u0, u1) for v in (v0, v1)]
        xs, zs = [p[0] for p in pts], [p[1] for p in pts]
        return min(xs), min(zs), max(xs), max(zs)


@dataclass
class _Sized:
    unit: PendingInstance
    ext: Rect
    w: float = field(init=False)
    d: float = field(init=False)

    def __post_init__(self) -> None:
        self.w = self.ext[2] - self.ext[0]
        self.d = self.ext[3] - self.ext[1]


@dataclass(frozen=True)
class PlacedUnit:
    unit: PendingInstance
    box: Rect  # padded world bounds
    origin: Point
    yaw: float


# --- 1D layout along a wall ---------------------------------------------------------------


def line_positions(lengths: Sequence[float], pins: Sequence[float | None], start: float, end: float) -> list[float]:
    """Lower coordinates of items laid in order on ``[start, end]``.

    Unpinned items share the free space evenly between and around them;
    a pinned item is centered on its pin where the items around it allow.
    """
    n = len(lengths)
    lo: list[float | None] = [None] * n
    suffix = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + lengths[i]
    prefix_end = start
    run = 0.0
    for i in range(n):
        if pins[i] is None:
            run += lengths[i]
            continue
        want = pins[i] - lengths[i] / 2
        lo_min = prefix_end + run
        lo_max = end - suffix[i]
        lo[i] = min(max(want, lo_min), max(lo_max, lo_min))
        prefix_end = lo[i] + lengths[i]
        run = 0.0
    # spread each run of unpinned items across its segment
    i = 0
    seg_start = start
    while i < n:
        j = i
        while j < n and pins[j] is None:
            j += 1
        seg_end = lo[j] if j < n else end
        total = sum(lengths[i:j])
        gap = max(seg_end - seg_start - total, 0.0) / (j - i + 1) if j > i else 0.0
        x = seg_start + gap
        for k in range(i, j):
            lo[k] = x
            x += lengths[k] + gap
        if j < n:
            seg_start = lo[j] + lengths[j]
        i = j + 1
    return [float(v) for v in lo]


def shelf_rows(items: Sequence[_Sized], limit: float) -> list[list[_Sized]]:
    rows: list[list[_Sized]] = []
    width = 0.0
    for it in items:
        if rows and width + it.w <= limit + 1e-9:
            rows[-1].append(it)
            width += it.w
        else:
            rows.append([it])
            width = it.w
    return rows


# --- the cell grid ------------------------------------------------------------------------


@dataclass
class CellGrid:
    """Cell contents and derived extents for one rectangular region."""

    cells: dict[str, list[_Sized]]
    config: PlacementConfig

    @classmethod
    def build(cls, pending: Sequence[PendingInstance], config: PlacementConfig) -> "CellGrid":
        cells: dict[str, list[_Sized]] = {c: [] for c in CELLS}
        for p in pending:
            cells[p.cell].append(_Sized(p, p.world_extent()))
        return cls(cells, config)

    def along(self, cell: str) -> float:
        """Total length along the wall of an edge or corner cell."""
        key = "w" if cell in ("N", "S") or cell in CORNERS else "d"
        return sum(getattr(s, key) for s in self.cells[cell])

    def across(self, cell: str) -> float:
        key = "d" if cell in ("N", "S") or cell in CORNERS else "w"
        return max((getattr(s, key) for s in self.cells[cell]), default=0.0)

    def strips(self) -> tuple[float, float, float, float]:
        """Thickness of the west, east, north and south wall strips."""
        west = max(self.along("NW"), self.along("SW"), self.across("W"))
        east = max(self.along("NE"), self.along("SE"), self.across("E"))
        north = max(self.across("NW"), self.across("NE"), self.across("N"))
        south = max(self.across("SW"), self.across("SE"), self.across("S"))
        return west, east, north, south

    def row_limit(self) -> float:
        return max([self.config.interior_row_width] + [s.w for s in self.cells["interior"]])

    def required_size(self) -> tuple[float, float]:
        """Smallest room, anchored at the origin, that holds every cell.

        Free interior rows are budgeted below the lowest pinned unit, and the
        room grows until every pinned target can be reached.
        """
        west, east, north, south = self.strips()
        interior = self.cells["interior"]
        free = [s for s in interior if s.unit.target is None]
        pinned = [s for s in interior if s.unit.target is not None]
        rows = shelf_rows(free, self.row_limit())
        iw = max([sum(s.w for s in r) for r in rows] + [s.w for s in pinned], default=0.0)
        # free rows must fit below the lowest pinned block
        pin_bottom = max((max(s.unit.target[1] + s.ext[1] - north, 0.0) + s.d for s in pinned), default=0.0)
        idp = sum(max(s.d for s in r) for r in rows) + pin_bottom
        width = west + east + max(self.along("N"), self.along("S"), iw)
        depth = north + south + max(self.along("W"), self.along("E"), idp)
        for cell, items in self.cells.items():
            for s in items:
                if s.unit.target is None:
                    continue
                tx, tz = s.unit.target
                if cell in ("N", "S", "interior"):
                    width = max(width, tx + s.ext[2] + east)
                if cell in ("E", "W", "interior"):
                    depth = max(depth, tz + s.ext[3] + south)
        return max(width, self.config.min_width), max(depth, self.config.min_depth)

    def place(self, region: Rect, tol: float = 1e-9, row_limit: float | None = None) -> list[PlacedUnit]:
        """Position every unit inside ``region``.

        ``row_limit`` caps interior row width; it defaults to the interior
        width, and sizing passes its own limit so rows match the sizing.
        """
        x0, z0, x1, z1 = region
        W, D = x1 - x0, z1 - z0
        west, east, north, south = self.strips()
        if west + east + max(self.along("N"), self.along("S")) > W + tol or north + south + max(self.along("W"), self.along("E")) > D + tol:
            raise Overflow(f"wall contents need more than the {W:.2f} x {D:.2f} m region")
        out: list[PlacedUnit] = []

        def put(s: _Sized, bx: float, bz: float) -> None:
            ex0, ez0, ex1, ez1 = s.ext
            out.append(PlacedUnit(s.unit, (bx, bz, bx + s.w, bz + s.d), (bx - ex0, bz - ez0), s.unit.effective_yaw()))

        # corners: packed from the corner along the north or south wall
        for cell in CORNERS:
            east_side = cell.endswith("E")
            pos = x1 if east_side else x0
            for s in self.cells[cell]:
                bz = z0 if cell.startswith("N") else z1 - s.d
                if east_side:
                    pos -= s.w
                    put(s, pos, bz)
                else:
                    put(s, pos, bz)
                    pos += s.w

        # edges: clockwise along each wall inside the corner strips
        spans = {
            "N": (x0 + west, x1 - east), "S": (x0 + west, x1 - east),
            "E": (z0 + north, z1 - south), "W": (z0 + north, z1 - south),
        }
        for cell in EDGES:
            items = self.cells[cell]
            if not items:
                continue
            a, b = spans[cell]
            horizontal = cell in ("N", "S")
            reverse = cell in ("S", "W")
            lengths = [s.w if horizontal else s.d for s in items]
            pins = []
            for s in items:
                t = s.unit.target
                if t is None:
                    pins.append(None)
                else:
                    # pins locate the padded box center that puts the origin on target
                    c = t[0] + (s.ext[0] + s.ext[2]) / 2 if horizontal else t[1] + (s.ext[1] + s.ext[3]) / 2
                    pins.append(a + b - c if reverse else c)
            lows = line_positions(lengths, pins, a, b)
            for s, lo, ln in zip(items, lows, lengths):
                along = a + b - lo - ln if reverse else lo
                if cell == "N":
                    put(s, along, z0)
                elif cell == "S":
                    put(s, along, z1 - s.d)
                elif cell == "E":
                    put(s, x1 - s.w, along)
                else:
                    put(s, x0, along)

        out.extend(self._place_interior((x0 + west, z0 + north, x1 - east, z1 - south), tol, row_limit))
        return out

    def _place_interior(self, region: Rect, tol: float, row_limit: float | None) -> list[PlacedUnit]:
        items = self.cells["interior"]
        if not items:
            return []
        ix0, iz0, ix1, iz1 = region
        iw, idp = ix1 - ix0, iz1 - iz0
        if iw <= 0 or idp <= 0 or any(s.w > iw + tol or s.d > idp + tol for s in items):
            raise Overflow("interior cell is too narrow for its contents")
        out: list[PlacedUnit] = []

        def put(s: _Sized, bx: float, bz: float) -> None:
            ex0, ez0, _, _ = s.ext
            out.append(PlacedUnit(s.unit, (bx, bz, bx + s.w, bz + s.d), (bx - ex0, bz - ez0), s.unit.effective_yaw()))

        pinned = [s for s in items if s.unit.target is not None]
        free = [s for s in items if s.unit.target is None]
        if not pinned:
            rows = shelf_rows(free, min(iw, row_limit) if row_limit is not None else iw)
            depths = [max(s.d for s in r) for r in rows]
            if sum(depths) > idp + tol:
                raise Overflow("interior rows exceed the interior depth")
            gz = (idp - sum(depths)) / (len(rows) + 1)
            z = iz0 + gz
            for row, rd in zip(rows, depths):
                lows = line_positions([s.w for s in row], [None] * len(row), ix0, ix1)
                for s, lo in zip(row, lows):
                    put(s, lo, z + (rd - s.d) / 2)
                z += rd + gz
            return out

        blocks: list[Rect] = []
        for s in pinned:
            tx, tz = s.unit.target
            bx = min(max(tx + s.ext[0], ix0), ix1 - s.w)
            bz = min(max(tz + s.ext[1], iz0), iz1 - s.d)
            if any(_overlap((bx, bz, bx + s.w, bz + s.d), b) for b in blocks):
                raise Overflow("pinned interior units collide")
            blocks.append((bx, bz, bx + s.w, bz + s.d))
            put(s, bx, bz)
        # greedy rows around the pinned blocks
        x, z, row_d = ix0, iz0, 0.0
        for s in free:
            while True:
                if x + s.w > ix1 + tol:
                    z += row_d if row_d > 0 else _next_clear(blocks, z)
                    x, row_d = ix0, 0.0
                if z + s.d > iz1 + tol:
                    raise Overflow("interior contents do not fit around pinned units")
                box = (x, z, x + s.w, z + s.d)
                hit = [b for b in blocks if _overlap(box, b)]
                if not hit:
                    break
                x = max(b[2] for b in hit)
            put(s, x, z)
            x += s.w
            row_d = max(row_d, s.d)
        return out


def _overlap(a: Rect, b: Rect, tol: float = 1e-9) -> bool:
    return a[0] < b[2] - tol and b[0] < a[2] - tol and a[1] < b[3] - tol and b[1] < a[3] - tol


def _next_clear(blocks: Sequence[Rect], z: float) -> float:
    ends = [b[3] - z for b in blocks if b[3] > z + 1e-9]
    return min(ends) if ends else 0.01


# --- realization -------------------------------------------------------------------------


def instances_of(placed: PlacedUnit) -> list[PlacedInstance]:
    unit = placed.unit
    if not unit.members:
        return []
    single = len(unit.members) == 1 and unit.group is None
    pad = unit.effective_padding() if single else (0.0, 0.0, 0.0, 0.0)
    out = []
    for m in unit.members:
        x, z = local_to_world(placed.origin[0], placed.origin[1], placed.yaw, *m.offset)
        out.append(PlacedInstance(m.model_id, (x, 0.0, z), normalize_yaw(placed.yaw + m.rel_yaw), unit.cell, pad, unit.group))
    return out


def decompose_rectilinear(polygon: Sequence[Point]) -> list[Rect]:
    """Split a simple axis-aligned polygon into disjoint rectangles.

    Vertical cuts at every vertex x give slabs whose cross-sections are
    constant; runs of slabs with the same z-interval merge into one
    rectangle.  Output is sorted by ``(x0, z0)``.
    """
    poly = [(float(x), float(z)) for x, z in polygon]
    if len(poly) < 4 or not is_rectilinear(poly) or not is_simple(poly):
        raise NotRectilinear("polygon must be simple and axis-aligned")
    horizontal = [(p, q) for p, q in polygon_edges(poly) if p[1] == q[1] and p[0] != q[0]]
    xs = sorted({x for x, _ in poly})
    open_runs: dict[tuple[float, float], float] = {}
    rects: list[Rect] = []
    for a, b in zip(xs, xs[1:]):
        xm = (a + b) / 2
        zs = sorted(p[1] for p, q in horizontal if min(p[0], q[0]) < xm < max(p[0], q[0]))
        current = {(zs[i], zs[i + 1]) for i in range(0, len(zs) - 1, 2)}
        for iv in sorted(set(open_runs) - current):
            rects.append((open_runs.pop(iv), iv[0], a, iv[1]))
        for iv in sorted(current - set(open_runs)):
            open_runs[iv] = a
    for iv, start in open_runs.items():
        rects.append((start, iv[0], xs[-1], iv[1]))
    return sorted(rects, key=lambda r: (r[0], r[1]))


def _contains(r: Rect, p: Point) -> bool:
    return r[0] <= p[0] <= r[2] and r[1] <= p[1] <= r[3]


def assign_region(pending: Sequence[PendingInstance], regions: Sequence[Rect]) -> list[list[PendingInstance]]:
    """Share units between regions by area-weighted round robin.

    Pinned units go to the region holding their target (the nearest one if
    the target lies in none).
    """
    if not regions:
        raise ValueError("need at least one region")
    areas = [(r[2] - r[0]) * (r[3] - r[1]) for r in regions]
    total = sum(areas)
    credit = [0.0] * len(regions)
    out: list[list[PendingInstance]] = [[] for _ in regions]
    for p in pending:
        if p.target is not None:
            inside = [i for i, r in enumerate(regions) if _contains(r, p.target)]
            if inside:
                idx = inside[0]
            else:
                tx, tz = p.target
                idx = min(range(len(regions)), key=lambda i: math.hypot(
                    tx - min(max(tx, regions[i][0]), regions[i][2]), tz - min(max(tz, regions[i][1]), regions[i][3])))
        else:
            for i, a in enumerate(areas):
                credit[i] += a
            idx = max(range(len(regions)), key=lambda i: (credit[i], -i))
            credit[idx] -= total
        out[idx].append(p)
    return out


def place_units(
    pending: Sequence[PendingInstance],
    fixed_boundary: Sequence[Point] | None = None,
    config: PlacementConfig | None = None,
) -> tuple[tuple[Point, ...], list[PlacedUnit]]:
    """Boundary plus every unit's padded world box (gaps included)."""
    config = config or PlacementConfig()
    if fixed_boundary is None:
        grid = CellGrid.build(pending, config)
        W, D = grid.required_size()
        return rect_boundary(W, D), grid.place((0.0, 0.0, W, D), tol=1e-7, row_limit=grid.row_limit())
    boundary = tuple((float(x), float(z)) for x, z in fixed_boundary)
    if polygon_area(boundary) <= 0:
        raise NotRectilinear("boundary has no area")
    regions = decompose_rectilinear(boundary)
    placed: list[PlacedUnit] = []
    for region, units in zip(regions, assign_region(pending, regions)):
        placed.extend(CellGrid.build(units, config).place(region, tol=1e-7))
    return boundary, placed


def finalize_layout(
    pending: Sequence[PendingInstance],
    fixed_boundary: Sequence[Point] | None = None,
    room_type: RoomType | str = RoomType.OTHER,
    openings: Sequence[Opening] = (),
    config: PlacementConfig | None = None,
) -> Layout:
    """Place every pending unit; raises :class:`Overflow` if a fixed boundary is too small."""
    boundary, placed = place_units(pending, fixed_boundary, config)
    instances = [inst for p in placed for inst in instances_of(p)]
    return Layout(RoomType(room_type), boundary, tuple(instances), tuple(openings))

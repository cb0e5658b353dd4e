"""Constrained sampling: fast paths plus a seeded rejection loop."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

from .geometry import (
    OrientedRect,
    apron_rect,
    footprint,
    point_in_polygon,
    polygon_edges,
    rect_inside_polygon,
    rects_intersect,
    wall_length,
)
from .params import CountModel, LearnedParams, PaddingModel
from .placement import Overflow, PendingInstance
from .raster import DEFAULT_RESOLUTION, R_ACCESS, R_PASS, check_traversability
from .rng import Rng
from .sampler import _member, _pose, sample_layout, sample_room_type, tables_for
from .scene import PADDING_SIDES, Category, Layout, Opening, Point, RoomType, rect_boundary

DEFAULT_MAX_ATTEMPTS = 10_000
DEFAULT_PLACEMENT_TOL = 0.25
# one-sided 99th percentile of the standard normal
Z99 = 2.3263478740408408
PREDICATES = ("overflow", "size", "placement", "gap", "openings", "traversability")


class ConstraintError(ValueError):
    """Malformed constraint specification."""


class UnknownClassError(KeyError):
    pass


@dataclass(frozen=True)
class PlacementTarget:
    """Put a model (or any model of a class) with its center near ``target``."""

    what: str
    target: Point
    tolerance: float = DEFAULT_PLACEMENT_TOL


@dataclass(frozen=True)
class GapTarget:
    """Keep an axis-aligned ``size_x`` by ``size_z`` rectangle at ``target`` free."""

    size: tuple[float, float]
    target: Point


@dataclass(frozen=True)
class ClearanceOverride:
    cls: str
    side: str
    minimum: float


@dataclass(frozen=True)
class ConstraintSpec:
    room_type: str | None = None
    size: tuple[float, float] | None = None
    size_tolerance: float = 0.02
    boundary: tuple[Point, ...] | None = None
    placements: tuple[PlacementTarget, ...] = ()
    gaps: tuple[GapTarget, ...] = ()
    clearances: tuple[ClearanceOverride, ...] = ()
    excluded_classes: frozenset[str] = frozenset()
    openings: tuple[Opening, ...] = ()
    traversability: bool = False

    def __post_init__(self) -> None:
        if self.room_type is not None:
            object.__setattr__(self, "room_type", RoomType(self.room_type).value)
        if not 0 < self.size_tolerance <= 0.2:
            raise ConstraintError("size tolerance must lie in (0, 0.2]")
        if self.size is not None and (len(self.size) != 2 or min(self.size) <= 0):
            raise ConstraintError("size needs two positive dimensions")
        if self.boundary is not None:
            object.__setattr__(self, "boundary", tuple((float(x), float(z)) for x, z in self.boundary))
        object.__setattr__(self, "excluded_classes", frozenset(self.excluded_classes))
        for p in self.placements:
            if p.tolerance <= 0:
                raise ConstraintError("placement tolerance must be > 0")
        for g in self.gaps:
            if min(g.size) <= 0:
                raise ConstraintError("gap dimensions must be > 0")
        for c in self.clearances:
            if c.side not in PADDING_SIDES:
                raise ConstraintError(f"unknown side {c.side!r}")
            if c.minimum < 0:
                raise ConstraintError("clearance minimum must be >= 0")
        if self.boundary is not None:
            for t in [p.target for p in self.placements] + [g.target for g in self.gaps]:
                if not point_in_polygon(t[0], t[1], self.boundary):
                    raise ConstraintError(f"target {t} lies outside the boundary")

    def is_empty(self) -> bool:
        return self == ConstraintSpec()

    def to_doc(self) -> dict:
        return {
            "room_type": self.room_type,
            "size": list(self.size) if self.size else None,
            "size_tolerance": self.size_tolerance,
            "boundary": [list(p) for p in self.boundary] if self.boundary else None,
            "placements": [{"what": p.what, "target": list(p.target), "tolerance": p.tolerance} for p in self.placements],
            "gaps": [{"size": list(g.size), "target": list(g.target)} for g in self.gaps],
            "clearances": [{"class": c.cls, "side": c.side, "min": c.minimum} for c in self.clearances],
            "excluded_classes": sorted(self.excluded_classes),
            "openings": [opening_to_doc(o) for o in self.openings],
            "traversability": self.traversability,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "ConstraintSpec":
        try:
            return cls(
                room_type=doc.get("room_type"),
                size=tuple(doc["size"]) if doc.get("size") else None,
                size_tolerance=float(doc.get("size_tolerance", 0.02)),
                boundary=tuple(tuple(p) for p in doc["boundary"]) if doc.get("boundary") else None,
                placements=tuple(
                    PlacementTarget(p["what"], tuple(p["target"]), float(p.get("tolerance", DEFAULT_PLACEMENT_TOL)))
                    for p in doc.get("placements", ())
                ),
                gaps=tuple(GapTarget(tuple(g["size"]), tuple(g["target"])) for g in doc.get("gaps", ())),
                clearances=tuple(
                    ClearanceOverride(c["class"], c["side"], float(c["min"])) for c in doc.get("clearances", ())
                ),
                excluded_classes=frozenset(doc.get("excluded_classes", ())),
                openings=tuple(opening_from_doc(o) for o in doc.get("openings", ())),
                traversability=bool(doc.get("traversability", False)),
            )
        except (KeyError, TypeError) as exc:
            raise ConstraintError(f"bad constraint document: {exc}") from None


def opening_to_doc(o: Opening) -> dict:
    return {"kind": o.kind, "wall": o.wall, "offset": o.offset, "width": o.width, "sill": o.sill, "height": o.height}


def opening_from_doc(d: Mapping[str, Any]) -> Opening:
    return Opening(d["kind"], int(d["wall"]), float(d["offset"]), float(d["width"]),
                   float(d.get("sill", 0.0)), float(d.get("height", 2.1)))


# --- parameter edits -----------------------------------------------------------------------


def apply_clearance_override(params: LearnedParams, cls: str, side: str, minimum: float) -> LearnedParams:
    """Copy of ``params`` where every model of ``cls`` keeps at least ``minimum`` on ``side``.

    The mean becomes ``max(learned, minimum)``, the spread shrinks so that at
    most 1% of unclamped draws would fall short, and draws are clamped at
    ``minimum``.
    """
    if side not in PADDING_SIDES:
        raise ConstraintError(f"unknown side {side!r}")
    models = [m for m in params.catalog.models_of_class(cls) if params.catalog.category_of(m) == Category.FURNITURE]
    if not models:
        raise UnknownClassError(f"unknown furniture class {cls!r}")
    k = PADDING_SIDES.index(side)
    sigma_min = params.config.sigma_min
    paddings = dict(params.paddings)
    for m in models:
        pad = paddings.get(m, PaddingModel.zero(sigma_min))
        mean, var, floor = list(pad.mean), list(pad.var), list(pad.floor)
        mean[k] = max(mean[k], minimum)
        sd_cap = (mean[k] - minimum) / Z99
        var[k] = max(min(var[k], sd_cap**2), sigma_min**2)
        floor[k] = max(floor[k], minimum)
        paddings[m] = PaddingModel(tuple(mean), tuple(var), tuple(floor))
    return replace(params, paddings=paddings)


def exclude_classes(params: LearnedParams, classes: frozenset[str]) -> LearnedParams:
    """Zero the counts of every unit that would place a member of ``classes``."""
    cat = params.catalog

    def unit_classes(unit: str) -> set[str]:
        if unit in params.motifs:
            return set(params.motifs[unit].classes)
        if unit in params.abutments:
            return {cat.class_of(m) for m in params.abutments[unit].models}
        return {cat.class_of(unit)} if unit in cat else set()

    counts = {k: (CountModel.point(0) if unit_classes(k[0]) & classes else cm) for k, cm in params.counts.items()}
    return replace(params, counts=counts)


_DERIVED: dict[tuple, tuple[LearnedParams, LearnedParams]] = {}


def derived_params(params: LearnedParams, spec: ConstraintSpec) -> LearnedParams:
    """Parameters after the constraint spec's direct edits, cached per (bundle, edits)."""
    if not spec.clearances and not spec.excluded_classes:
        return params
    key = (id(params), spec.clearances, spec.excluded_classes)
    hit = _DERIVED.get(key)
    if hit is not None and hit[0] is params:
        return hit[1]
    out = params
    for c in spec.clearances:
        out = apply_clearance_override(out, c.cls, c.side, c.minimum)
    if spec.excluded_classes:
        out = exclude_classes(out, spec.excluded_classes)
    if len(_DERIVED) > 64:
        _DERIVED.clear()
    _DERIVED[key] = (params, out)
    return out


# --- injected units ------------------------------------------------------------------------


def nearest_cell(target: Point, room: tuple[float, float, float, float], extent: tuple[float, float], tol: float) -> str:
    """Cell whose natural position puts a unit of world ``extent`` on ``target``.

    A unit flush against a wall has its center half an extent away from it;
    when that matches the target within ``tol`` the wall cell is used.
    """
    x0, z0, x1, z1 = room
    tx, tz = target
    ex, ez = extent
    north = abs((tz - z0) - ez / 2) <= tol
    south = abs((z1 - tz) - ez / 2) <= tol
    west = abs((tx - x0) - ex / 2) <= tol
    east = abs((x1 - tx) - ex / 2) <= tol
    ns = "N" if north else "S" if south else ""
    we = "W" if west else "E" if east else ""
    if ns and we:
        return ns + we
    return ns or we or "interior"


def _room_box(params: LearnedParams, spec: ConstraintSpec, rt: str) -> tuple[float, float, float, float]:
    if spec.boundary is not None:
        xs = [p[0] for p in spec.boundary]
        zs = [p[1] for p in spec.boundary]
        return min(xs), min(zs), max(xs), max(zs)
    w, d = spec.size or params.room_sizes.get(rt, (4.0, 4.0))
    return 0.0, 0.0, w, d


def injected_units(params: LearnedParams, spec: ConstraintSpec, rt: str, rng: Rng) -> list[PendingInstance]:
    """Pinned units for object and gap placements, posed in the cell nearest each target."""
    tables = tables_for(params)
    cat = params.catalog
    room = _room_box(params, spec, rt)
    out: list[PendingInstance] = []
    for p in spec.placements:
        if p.what in cat:
            model = p.what
        else:
            models = sorted(m for m in cat.models_of_class(p.what) if cat.category_of(m) == Category.FURNITURE)
            if not models:
                raise UnknownClassError(f"unknown model or class {p.what!r}")
            model = models[rng.integer(len(models))]
        _, yaw, pad, hard = _pose(tables, model, rng)
        # a wall-facing unit spans its depth across the wall
        probe = PendingInstance(model, (_member(params, model),), "interior", 0.0)
        ext = probe.world_extent()
        d_across, w_along = ext[2] - ext[0], ext[3] - ext[1]
        cell = nearest_cell(p.target, room, (d_across, d_across), p.tolerance)
        if cell in ("N", "S"):
            cell = nearest_cell(p.target, room, (w_along, d_across), p.tolerance)
        out.append(PendingInstance(model, (_member(params, model),), cell, yaw, pad, hard, target=p.target))
    for g in spec.gaps:
        sx, sz = g.size
        cell = nearest_cell(g.target, room, (sx, sz), 0.05)
        # gaps are rectangles in world axes; the unit frame turns with the wall
        yaw = {"N": math.pi / 2, "S": 3 * math.pi / 2, "NW": math.pi / 2, "NE": math.pi / 2,
               "SW": 3 * math.pi / 2, "SE": 3 * math.pi / 2}.get(cell, 0.0)
        dims = (sz, sx) if yaw else (sx, sz)
        out.append(PendingInstance("gap", (), cell, 0.0, target=g.target, gap=dims))
    return out


# --- predicates ----------------------------------------------------------------------------


def _furniture(layout: Layout, params: LearnedParams) -> list[tuple[str, OrientedRect]]:
    cat = params.catalog
    return [(i.model_id, footprint(i, cat)) for i in layout.instances if cat.category_of(i.model_id) == Category.FURNITURE]


def size_ok(layout: Layout, spec: ConstraintSpec) -> bool:
    if spec.size is None:
        return True
    W, D = layout.size()
    w, d = spec.size
    tol = spec.size_tolerance
    return abs(W - w) <= tol * w + 1e-9 and abs(D - d) <= tol * d + 1e-9


def placements_ok(layout: Layout, spec: ConstraintSpec, params: LearnedParams) -> bool:
    cat = params.catalog
    for p in spec.placements:
        hit = False
        for inst in layout.instances:
            if inst.model_id == p.what or (inst.model_id in cat and cat.class_of(inst.model_id) == p.what):
                if math.hypot(inst.x - p.target[0], inst.z - p.target[1]) <= p.tolerance:
                    hit = True
                    break
        if not hit:
            return False
    return True


def gap_rect(g: GapTarget) -> OrientedRect:
    return OrientedRect(g.target[0], g.target[1], g.size[0] / 2, g.size[1] / 2, 0.0)


def gaps_ok(layout: Layout, spec: ConstraintSpec, params: LearnedParams) -> bool:
    if not spec.gaps:
        return True
    furn = _furniture(layout, params)
    for g in spec.gaps:
        r = gap_rect(g)
        if not rect_inside_polygon(r, layout.boundary) or any(rects_intersect(r, f) for _, f in furn):
            return False
    return True


def door_swing(layout: Layout, op: Opening) -> OrientedRect:
    return apron_rect(layout.boundary, op.wall, op.offset, op.width, op.width)


def opening_fits(layout: Layout, op: Opening) -> bool:
    if not 0 <= op.wall < len(polygon_edges(layout.boundary)):
        return False
    length = wall_length(layout.boundary, op.wall)
    return op.offset - op.width / 2 >= -1e-9 and op.offset + op.width / 2 <= length + 1e-9


def openings_ok(layout: Layout, params: LearnedParams) -> bool:
    if not layout.openings:
        return True
    furn = None
    for op in layout.openings:
        if not opening_fits(layout, op):
            return False
        if op.kind != "door":
            continue
        swing = door_swing(layout, op)
        if not rect_inside_polygon(swing, layout.boundary):
            return False
        if furn is None:
            furn = _furniture(layout, params)
        if any(rects_intersect(swing, f) for _, f in furn):
            return False
    return True


@dataclass(frozen=True)
class RejectionConfig:
    resolution: float = DEFAULT_RESOLUTION
    r_pass: float = R_PASS
    r_access: float = R_ACCESS


def first_failure(layout: Layout, spec: ConstraintSpec, params: LearnedParams, config: RejectionConfig) -> str | None:
    """Name of the first failing predicate (cheapest first), or ``None``."""
    if not size_ok(layout, spec):
        return "size"
    if not placements_ok(layout, spec, params):
        return "placement"
    if not gaps_ok(layout, spec, params):
        return "gap"
    if not openings_ok(layout, params):
        return "openings"
    if spec.traversability and not check_traversability(layout, params.catalog, config.resolution, config.r_pass, config.r_access):
        return "traversability"
    return None


# --- the rejection loop ---------------------------------------------------------------------


@dataclass
class ConstrainedResult:
    layout: Layout
    attempts: int
    tallies: dict[str, int] = field(default_factory=dict)


class Exhausted(RuntimeError):
    """No attempt satisfied the constraint spec; carries per-predicate rejection tallies."""

    def __init__(self, attempts: int, tallies: dict[str, int]) -> None:
        detail = ", ".join(f"{k}={v}" for k, v in sorted(tallies.items()) if v)
        super().__init__(f"exhausted after {attempts} attempts ({detail or 'no rejections recorded'})")
        self.attempts = attempts
        self.tallies = tallies


def attempt(params: LearnedParams, spec: ConstraintSpec, seed: int, index: int,
            config: RejectionConfig | None = None) -> tuple[Layout | None, str | None]:
    """One independent attempt on stream ``(seed, index)``; returns the layout or the failed predicate.

    A requested size without a boundary fixes the room to that rectangle,
    so the size check then only guards against drift.
    """
    config = config or RejectionConfig()
    rng = Rng(seed, index)
    work = derived_params(params, spec)
    rt = spec.room_type
    if rt is None:
        rt = sample_room_type(work, rng)
    boundary = spec.boundary
    if boundary is None and spec.size is not None:
        boundary = rect_boundary(*spec.size)
    try:
        prepend = injected_units(work, spec, rt, rng) if (spec.placements or spec.gaps) else []
        layout = sample_layout(work, rng, rt, boundary, spec.openings, prepend)
    except Overflow:
        return None, "overflow"
    failed = first_failure(layout, spec, work, config)
    return (None, failed) if failed else (layout, None)


def sample_constrained(
    params: LearnedParams,
    spec: ConstraintSpec,
    seed: int,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    threads: int = 1,
    config: RejectionConfig | None = None,
) -> ConstrainedResult:
    """Lowest-index accepted attempt; identical for every thread count.

    Attempts run in batches; rejections are tallied only below the
    accepted index so the result never depends on scheduling.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    cat = params.catalog
    for p in spec.placements:
        cls = cat.class_of(p.what) if p.what in cat else p.what
        if cls in spec.excluded_classes:
            raise ConstraintError(f"placement of {p.what!r} conflicts with its excluded class")
    tallies = {k: 0 for k in PREDICATES}
    derived_params(params, spec)  # warm the cache before workers share it
    if threads <= 1:
        for i in range(max_attempts):
            layout, failed = attempt(params, spec, seed, i, config)
            if layout is not None:
                return ConstrainedResult(layout, i + 1, tallies)
            tallies[failed] += 1
        raise Exhausted(max_attempts, tallies)
    batch = 4 * threads
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for start in range(0, max_attempts, batch):
            idx = list(range(start, min(start + batch, max_attempts)))
            results = list(pool.map(lambda i: attempt(params, spec, seed, i, config), idx))
            for i, (layout, failed) in zip(idx, results):
                if layout is not None:
                    return ConstrainedResult(layout, i + 1, tallies)
                tallies[failed] += 1
    raise Exhausted(max_attempts, tallies)


def refurnish(params: LearnedParams, source: Layout, seed: int, max_attempts: int = DEFAULT_MAX_ATTEMPTS,
              threads: int = 1) -> ConstrainedResult:
    """New furniture for an existing room, keeping its boundary, type and openings."""
    spec = ConstraintSpec(
        room_type=source.room_type.value,
        boundary=source.boundary,
        openings=source.openings,
        traversability=True,
    )
    return sample_constrained(params, spec, seed, max_attempts, threads)


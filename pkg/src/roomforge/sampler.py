"""Ancestral layout sampling: room type, furniture, placement, embellishment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import footprint, local_to_world, opening_segment, polygon_edges
from .params import ALIGNED_YAWS, START, TERMINAL, AbutmentPattern, CountModel, LearnedParams
from .placement import Member, PendingInstance, PlacementConfig, finalize_layout
from .rng import Rng, cumulative
from .scene import CELLS, Category, Layout, Opening, PlacedInstance, Point, RoomType

MAX_ROW_LENGTH = 12
WALL_ATTEMPTS = 100
TWO_PI = 2 * math.pi


# --- counts ---------------------------------------------------------------------------------


def _tail_cdf(rate: float, kmax: int = 200) -> tuple[np.ndarray, np.ndarray]:
    ks = np.arange(5, max(kmax, int(rate * 4) + 50))
    logp = ks * math.log(rate) - rate - np.array([math.lgamma(k + 1) for k in ks])
    p = np.exp(logp - logp.max())
    return ks, np.cumsum(p / p.sum())


_TAIL_CACHE: dict[float, tuple[np.ndarray, np.ndarray]] = {}


def sample_tail(rate: float, rng: Rng) -> int:
    """Poisson(rate) conditioned on exceeding 4, by inverse CDF."""
    if rate <= 0:
        return 5
    table = _TAIL_CACHE.get(rate)
    if table is None:
        table = _TAIL_CACHE.setdefault(rate, _tail_cdf(rate))
    ks, cdf = table
    i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return int(ks[min(i, len(ks) - 1)])


def sample_num_instances(cm: CountModel, n_c: int, rng: Rng) -> int:
    """Draw a count bin; the ``>4`` bin defers to the conditioned Poisson tail."""
    b = rng.categorical(cumulative(cm.pmf_for(n_c)))
    return b if b < 5 else sample_tail(cm.rate, rng)


# --- unit helpers --------------------------------------------------------------------------


def walk_abutment(pattern: AbutmentPattern, rng: Rng, max_len: int = MAX_ROW_LENGTH) -> tuple[str, ...]:
    """Models of one row: a walk from START until TERMINAL or ``max_len`` models."""
    states = pattern.states
    cdfs = [cumulative(r) for r in pattern.matrix]
    seq: list[str] = []
    i = 0
    while len(seq) < max_len:
        j = rng.categorical(cdfs[i])
        if states[j] == TERMINAL:
            break
        if states[j] == START:  # malformed row; treat as termination
            break
        seq.append(states[j])
        i = j
    return tuple(seq)


def ceiling_grid(n: int, width: float, depth: float) -> tuple[int, int]:
    """Columns and rows of the grid holding at least ``n`` lights.

    Columns follow the room's aspect ratio so cells come out near square.
    """
    if n <= 0:
        return 0, 0
    cols = int(round(math.sqrt(n * width / depth)))
    cols = min(max(cols, 1), n)
    return cols, math.ceil(n / cols)


# --- precompiled tables ----------------------------------------------------------------------


@dataclass
class _UnitTables:
    cell_cdf: list[float]
    p_aligned: float
    aligned_cdf: list[float]
    pad_mean: tuple[float, ...]
    pad_sd: tuple[float, ...]
    pad_floor: tuple[float, ...]


@dataclass
class SamplerTables:
    """Per-parameter-bundle lookup tables, built once and reused across samples."""

    params: LearnedParams
    room_types: list[str]
    room_cdf: list[float]
    units: dict[str, _UnitTables] = field(default_factory=dict)
    singles: dict[str, list[tuple[str, str, CountModel]]] = field(default_factory=dict)  # rt -> [(class, model, cm)]
    motifs: dict[str, list[tuple[str, CountModel]]] = field(default_factory=dict)
    rows: dict[str, list[tuple[str, CountModel]]] = field(default_factory=dict)
    walls: dict[str, list[tuple[str, CountModel]]] = field(default_factory=dict)

    @classmethod
    def build(cls, params: LearnedParams) -> "SamplerTables":
        cat = params.catalog
        rts = [rt for rt, p in sorted(params.room_type_pmf.items()) if p > 0]
        t = cls(params, rts, cumulative([params.room_type_pmf[rt] for rt in rts]))
        for (unit, rt), cm in sorted(params.counts.items()):
            if cm.is_zero():
                continue
            if unit in params.motifs:
                t.motifs.setdefault(rt, []).append((unit, cm))
            elif unit in params.abutments:
                t.rows.setdefault(rt, []).append((unit, cm))
            elif unit in cat:
                c = cat.category_of(unit)
                if c == Category.FURNITURE:
                    t.singles.setdefault(rt, []).append((cat.class_of(unit), unit, cm))
                elif c == Category.WALL_OBJECT:
                    t.walls.setdefault(rt, []).append((unit, cm))
        for rt in t.singles:
            t.singles[rt].sort(key=lambda e: (e[0], e[1]))
        for unit in sorted(set(params.cells) | set(params.paddings)):
            cell = params.cells.get(unit)
            o = params.orientations.get(unit)
            pad = params.paddings.get(unit)
            t.units[unit] = _UnitTables(
                cumulative(cell.probs if cell else [0.0] * 8 + [1.0]),
                o.p_aligned if o else 1.0,
                cumulative(o.aligned_pmf if o else (0.25,) * 4),
                pad.mean if pad else (0.0,) * 4,
                tuple(math.sqrt(v) for v in pad.var) if pad else (0.0,) * 4,
                pad.floor if pad else (0.0,) * 4,
            )
        return t


_TABLES: dict[int, SamplerTables] = {}


def tables_for(params: LearnedParams) -> SamplerTables:
    t = _TABLES.get(id(params))
    if t is None or t.params is not params:
        if len(_TABLES) > 64:
            _TABLES.clear()
        t = _TABLES[id(params)] = SamplerTables.build(params)
    return t


# --- furniture ------------------------------------------------------------------------------


@dataclass
class FurnitureDraw:
    pending: list[PendingInstance]
    class_counts: dict[str, int]


def _pose(tables: SamplerTables, unit: str, rng: Rng):
    ut = tables.units.get(unit)
    if ut is None:
        return "interior", 0.0, (0.0,) * 4, (False,) * 4
    cell = CELLS[rng.categorical(ut.cell_cdf)]
    if rng.random() < ut.p_aligned:
        yaw = ALIGNED_YAWS[rng.categorical(ut.aligned_cdf)]
    else:
        yaw = rng.uniform(0.0, TWO_PI)
    pad = tuple(max(rng.normal(m, s), f, 0.0) for m, s, f in zip(ut.pad_mean, ut.pad_sd, ut.pad_floor))
    hard = tuple(f > 0 for f in ut.pad_floor)
    return cell, yaw, pad, hard


def _member(params: LearnedParams, model: str, offset=(0.0, 0.0), rel_yaw: float = 0.0) -> Member:
    rec = params.catalog[model]
    return Member(model, (float(offset[0]), float(offset[1])), float(rel_yaw), rec.depth, rec.width)


def row_members(params: LearnedParams, models: Sequence[str]) -> tuple[Member, ...]:
    """An abutment row in its own frame: backs on ``u = 0``, laid along ``v``."""
    out, v = [], 0.0
    for m in models:
        rec = params.catalog[m]
        out.append(Member(m, (rec.depth / 2, v + rec.width / 2), 0.0, rec.depth, rec.width))
        v += rec.width
    return tuple(out)


def sample_furniture_with_counts(
    params: LearnedParams, room_type: str, rng: Rng, given: Sequence[PendingInstance] = ()
) -> FurnitureDraw:
    """Draw furniture units; ``given`` units stand in for draws of their own model.

    Each given single-model unit counts toward its class and cancels one
    sampled instance of that model, so pinning an object does not add a
    second copy of it.
    """
    tables = tables_for(params)
    rt = RoomType(room_type).value
    cat = params.catalog
    n_c: dict[str, int] = {}
    owed: dict[str, int] = {}
    pending: list[PendingInstance] = []
    for g in given:
        if len(g.members) == 1 and g.group is None:
            m = g.members[0].model_id
            owed[m] = owed.get(m, 0) + 1

    for cls, model, cm in tables.singles.get(rt, ()):
        n = sample_num_instances(cm, n_c.get(cls, 0), rng)
        skip = min(n, owed.get(model, 0))
        n_c[cls] = n_c.get(cls, 0) + n
        for _ in range(n - skip):
            cell, yaw, pad, hard = _pose(tables, model, rng)
            pending.append(PendingInstance(model, (_member(params, model),), cell, yaw, pad, hard))

    for unit, cm in tables.motifs.get(rt, ()):
        motif = params.motifs[unit]
        for _ in range(sample_num_instances(cm, 0, rng)):
            occ = motif.occurrences[rng.integer(len(motif.occurrences))]
            members = tuple(_member(params, m, o, y) for m, o, y in zip(occ.models, occ.offsets, occ.yaws))
            for m in occ.models:
                c = cat.class_of(m)
                n_c[c] = n_c.get(c, 0) + 1
            cell, yaw, pad, hard = _pose(tables, unit, rng)
            pending.append(PendingInstance(unit, members, cell, yaw, pad, hard, group=unit))

    for unit, cm in tables.rows.get(rt, ()):
        pattern = params.abutments[unit]
        for _ in range(sample_num_instances(cm, 0, rng)):
            seq = walk_abutment(pattern, rng)
            cell, yaw, pad, hard = _pose(tables, unit, rng)
            if not seq:
                continue
            for m in seq:
                c = cat.class_of(m)
                n_c[c] = n_c.get(c, 0) + 1
            pending.append(PendingInstance(unit, row_members(params, seq), cell, yaw, pad, hard, group=unit))
    return FurnitureDraw(pending, n_c)


def sample_furniture(params: LearnedParams, room_type: str, rng: Rng) -> list[PendingInstance]:
    """Singletons by class then model id, then motifs, then abutment rows."""
    return sample_furniture_with_counts(params, room_type, rng).pending


# --- embellishment -------------------------------------------------------------------------


def embellish_ceiling(params: LearnedParams, room_type: str, layout: Layout, rng: Rng) -> list[PlacedInstance]:
    pmf = params.embellishments.ceiling_pmf.get(RoomType(room_type).value)
    if not pmf:
        return []
    models = list(pmf)
    model = models[rng.categorical(cumulative([pmf[m] for m in models]))]
    cm = params.counts.get((model, RoomType(room_type).value))
    n = sample_num_instances(cm, 0, rng) if cm is not None else 1
    x0, z0, x1, z1 = layout.bbox()
    cols, rows = ceiling_grid(n, x1 - x0, z1 - z0)
    y = params.embellishments.ceiling_height - params.catalog[model].height
    out = []
    for j in range(rows):
        for i in range(cols):
            x = x0 + (i + 0.5) * (x1 - x0) / cols
            z = z0 + (j + 0.5) * (z1 - z0) / rows
            out.append(PlacedInstance(model, (x, y, z), 0.0))
    return out


def _wall_interval(opening: Opening) -> tuple[int, float, float]:
    return opening.wall, opening.offset - opening.width / 2, opening.offset + opening.width / 2


def embellish_walls(
    params: LearnedParams,
    layout: Layout,
    rng: Rng,
    max_attempts: int = WALL_ATTEMPTS,
) -> list[PlacedInstance]:
    """Hang wall objects on uniformly chosen walls, retrying on overlap."""
    tables = tables_for(params)
    edges = polygon_edges(layout.boundary)
    lengths = [math.hypot(q[0] - p[0], q[1] - p[1]) for p, q in edges]
    taken = [_wall_interval(o) for o in layout.openings]
    out = []
    for model, cm in tables.walls.get(layout.room_type.value, ()):
        rec = params.catalog[model]
        mean, var = params.embellishments.wall_height.get(model, (1.5, 0.0))
        for _ in range(sample_num_instances(cm, 0, rng)):
            for _attempt in range(max_attempts):
                wall = rng.integer(len(edges))
                y = rng.normal(mean, math.sqrt(var))
                if lengths[wall] < rec.width:
                    continue
                s = rng.uniform(rec.width / 2, lengths[wall] - rec.width / 2)
                a, b = s - rec.width / 2, s + rec.width / 2
                if any(w == wall and a < hi and lo < b for w, lo, hi in taken):
                    continue
                p, q, (nx, nz) = opening_segment(layout.boundary, wall, s, rec.width)
                mx, mz = (p[0] + q[0]) / 2, (p[1] + q[1]) / 2
                pos = (mx + nx * rec.depth / 2, y, mz + nz * rec.depth / 2)
                out.append(PlacedInstance(model, pos, math.atan2(nz, nx)))
                taken.append((wall, a, b))
                break
    return out


def embellish_small(params: LearnedParams, room_type: str, layout: Layout, rng: Rng) -> list[PlacedInstance]:
    """Copy one stored small-object configuration onto each furniture piece."""
    store = params.embellishments.small_configs
    cat = params.catalog
    rt = RoomType(room_type).value
    out = []
    for parent in layout.instances:
        if cat.category_of(parent.model_id) != Category.FURNITURE:
            continue
        configs = store.get((parent.model_id, rt))
        if not configs:
            continue
        top = parent.position[1] + cat[parent.model_id].height
        for sp in configs[rng.integer(len(configs))]:
            x, z = local_to_world(parent.x, parent.z, parent.yaw, *sp.offset)
            out.append(PlacedInstance(sp.model_id, (x, top + sp.elevation, z), parent.yaw + sp.rel_yaw))
    return out


# --- full pipeline --------------------------------------------------------------------------


def sample_room_type(params: LearnedParams, rng: Rng) -> str:
    t = tables_for(params)
    if not t.room_types:
        raise ValueError("parameters carry no room types")
    return t.room_types[rng.categorical(t.room_cdf)]


def sample_layout(
    params: LearnedParams,
    rng: Rng,
    room_type: str | None = None,
    boundary: Sequence[Point] | None = None,
    openings: Sequence[Opening] = (),
    prepend: Sequence[PendingInstance] = (),
    placement: PlacementConfig | None = None,
) -> Layout:
    """Sample one room; raises ``Overflow`` when a fixed boundary cannot hold the furniture."""
    rt = room_type if room_type is not None else sample_room_type(params, rng)
    rt = RoomType(rt).value
    pending = list(prepend) + sample_furniture_with_counts(params, rt, rng, prepend).pending
    layout = finalize_layout(pending, boundary, rt, openings, placement)
    extra = embellish_ceiling(params, rt, layout, rng)
    extra += embellish_walls(params, layout, rng)
    layout = layout.with_instances(extra)
    return layout.with_instances(embellish_small(params, rt, layout, rng))


def furniture_rects(layout: Layout, params: LearnedParams):
    cat = params.catalog
    return [footprint(i, cat) for i in layout.instances if cat.category_of(i.model_id) == Category.FURNITURE]


"""Learn occurrence and placement distributions from a corpus.

Training proceeds in three claiming passes so every furniture instance is
counted exactly once: abutment rows first, then motif occurrences among the
rest, and finally the leftovers as singletons.  Each claimed group is
treated as one *unit* whose cell, orientation and padding are learned from
the group's bounding rectangle.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import TrainingCorpus
from .geometry import OrientedRect, footprint, polygon_edges, world_to_local
from .params import (
    CellPmf,
    CountModel,
    EmbellishmentModels,
    LearnedParams,
    OrientationModel,
    PaddingModel,
    SmallPlacement,
    TrainConfig,
    bucket_of,
)
from .patterns import AbutmentLibrary, MotifLibrary, mine_abutments, mine_motifs
from .scene import CELLS, Category, Layout, ModelCatalog, PlacedInstance, RoomType, normalize_yaw

HALF_PI = math.pi / 2


class TrainingError(ValueError):
    pass


# --- cells ------------------------------------------------------------------------


def wall_sides(boundary: Sequence[tuple[float, float]]) -> list[tuple[tuple[float, float], tuple[float, float], str]]:
    """Boundary edges labelled by the side of the room they bound (N, E, S or W)."""
    edges = polygon_edges(boundary)
    s = sum(p[0] * q[1] - q[0] * p[1] for p, q in edges)
    out = []
    for p, q in edges:
        ux, uz = q[0] - p[0], q[1] - p[1]
        nx, nz = (-uz, ux) if s > 0 else (uz, -ux)  # inward normal
        if abs(nz) > abs(nx):
            side = "N" if nz > 0 else "S"
        else:
            side = "W" if nx > 0 else "E"
        out.append((p, q, side))
    return out


def _point_segment_distance(px, pz, ax, az, bx, bz) -> float:
    dx, dz = bx - ax, bz - az
    L2 = dx * dx + dz * dz
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((px - ax) * dx + (pz - az) * dz) / L2))
    return math.hypot(px - ax - t * dx, pz - az - t * dz)


def rect_segment_distance(rect: OrientedRect, p, q) -> float:
    from .geometry import segment_hits_box

    if segment_hits_box(p, q, rect):
        return 0.0
    cs = rect.corners()
    d = min(_point_segment_distance(x, z, *p, *q) for x, z in cs)
    for i in range(4):
        a, b = cs[i], cs[(i + 1) % 4]
        d = min(d, _point_segment_distance(*p, *a, *b), _point_segment_distance(*q, *a, *b))
    return d


def wall_distances(rect: OrientedRect, boundary) -> dict[str, float]:
    """Distance from the footprint to the nearest wall on each side."""
    if len(boundary) == 4:
        xs = [p[0] for p in boundary]
        zs = [p[1] for p in boundary]
        x0, z0, x1, z1 = rect.aabb()
        return {"N": z0 - min(zs), "E": max(xs) - x1, "S": max(zs) - z1, "W": x0 - min(xs)}
    out = {k: math.inf for k in "NESW"}
    for p, q, side in wall_sides(boundary):
        out[side] = min(out[side], rect_segment_distance(rect, p, q))
    return out


def classify_rect(rect: OrientedRect, boundary, tau_wall: float = 0.4) -> str:
    d = wall_distances(rect, boundary)
    ns = min(("N", "S"), key=lambda k: d[k])
    ew = min(("E", "W"), key=lambda k: d[k])
    near_ns, near_ew = d[ns] <= tau_wall, d[ew] <= tau_wall
    if near_ns and near_ew:
        return ns + ew
    if near_ns or near_ew:
        return ns if (near_ns and (not near_ew or d[ns] <= d[ew])) else ew
    return "interior"


def classify_cell(instance: PlacedInstance, boundary, catalog: ModelCatalog, tau_wall: float = 0.4) -> str:
    """Cell of an instance: corner near two perpendicular walls, edge near one, else interior."""
    return classify_rect(footprint(instance, catalog), boundary, tau_wall)


# --- clearances ---------------------------------------------------------------------


def _segments(obstacles: Sequence[OrientedRect], boundary) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    p0, p1, owner = [], [], []
    for j, r in enumerate(obstacles):
        cs = r.corners()
        for i in range(4):
            p0.append(cs[i])
            p1.append(cs[(i + 1) % 4])
            owner.append(j)
    for p, q in polygon_edges(boundary):
        p0.append(p)
        p1.append(q)
        owner.append(-1)
    return np.array(p0, float), np.array(p1, float), np.array(owner)


def free_distances(
    targets: Sequence[OrientedRect],
    excludes: Sequence[set[int]],
    obstacles: Sequence[OrientedRect],
    boundary,
    cap: float = 1.5,
    tol: float = 1e-6,
) -> np.ndarray:
    """Free distance (front, back, left, right) from each target's edges.

    Each side's edge is swept outward along its normal; the distance is
    where it first meets an obstacle edge or a wall, capped at ``cap``.
    Obstacles whose index is in ``excludes[t]`` are ignored for target ``t``.
    """
    P0, P1, owner = _segments(obstacles, boundary)
    out = np.full((len(targets), 4), cap)
    for t, (r, ex) in enumerate(zip(targets, excludes)):
        c = np.array([r.cx, r.cz])
        f = np.array([math.cos(r.yaw), math.sin(r.yaw)])
        lat = np.array([-f[1], f[0]])
        D = np.stack([f, -f, -lat, lat])  # sweep directions
        E = np.stack([lat, lat, f, f])  # band axes
        HD = np.array([r.hx, r.hx, r.hz, r.hz])
        HE = np.array([r.hz, r.hz, r.hx, r.hx]) - tol
        a0, b0 = (P0 - c) @ D.T, (P0 - c) @ E.T  # (M, 4)
        a1, b1 = (P1 - c) @ D.T, (P1 - c) @ E.T
        best = np.full(a0.shape, np.inf)
        for a, b in ((a0, b0), (a1, b1)):
            ok = (np.abs(b) < HE) & (a >= HD - tol)
            best = np.where(ok, np.minimum(best, a - HD), best)
        db = b1 - b0
        with np.errstate(divide="ignore", invalid="ignore"):
            for s in (1.0, -1.0):
                tt = (s * HE - b0) / db
                a = a0 + tt * (a1 - a0)
                ok = (db != 0) & (tt >= 0) & (tt <= 1) & (a >= HD - tol)
                best = np.where(ok, np.minimum(best, a - HD), best)
        if ex:
            best[np.isin(owner, list(ex))] = np.inf
        out[t] = np.clip(np.min(best, axis=0), 0.0, cap)
    return out


# --- count / pmf fitting ------------------------------------------------------------------


def count_model_from(counts: Sequence[int], n_cs: Sequence[int] | None = None, bucket_min_obs: int = 20) -> CountModel:
    """Bin histogram over {0..4, >4}, tail rate and per-bucket histograms."""
    n = len(counts)
    if n == 0:
        return CountModel.point(0)

    def hist(cs):
        h = [0] * 6
        for c in cs:
            h[min(c, 5)] += 1
        return tuple(v / len(cs) for v in h)

    tail = [c for c in counts if c > 4]
    rate = float(np.mean(tail)) if tail else 0.0
    buckets: list = [None, None, None]
    if n_cs is not None:
        groups: dict[int, list[int]] = defaultdict(list)
        for c, nc in zip(counts, n_cs):
            groups[bucket_of(nc)].append(c)
        for b, cs in groups.items():
            if len(cs) >= bucket_min_obs:
                buckets[b] = hist(cs)
    return CountModel(hist(counts), rate, tuple(buckets), n)


def cell_pmf_from(cells: Sequence[str]) -> CellPmf:
    if not cells:
        return CellPmf.point("interior")
    cnt = Counter(cells)
    return CellPmf(tuple(cnt.get(c, 0) / len(cells) for c in CELLS))


def aligned_index(yaw: float, eps_deg: float = 2.0) -> int | None:
    """Index into ALIGNED_YAWS when ``yaw`` is within ``eps_deg`` of it, else None."""
    y = normalize_yaw(yaw)
    k = int(round(y / HALF_PI)) % 4
    diff = abs((y - k * HALF_PI + math.pi) % (2 * math.pi) - math.pi)
    return k if diff <= math.radians(eps_deg) else None


def orientation_from(yaws: Sequence[float], eps_deg: float = 2.0) -> OrientationModel:
    if not yaws:
        return OrientationModel()
    idx = [aligned_index(y, eps_deg) for y in yaws]
    al = [i for i in idx if i is not None]
    if not al:
        return OrientationModel(0.0, (0.25,) * 4, len(yaws))
    h = Counter(al)
    return OrientationModel(len(al) / len(yaws), tuple(h.get(k, 0) / len(al) for k in range(4)), len(yaws))


def padding_from(samples: np.ndarray, sigma_min: float = 0.01) -> PaddingModel:
    if len(samples) == 0:
        return PaddingModel.zero(sigma_min)
    s = np.asarray(samples, float)
    mean = np.maximum(s.mean(axis=0), 0.0)
    var = np.maximum(s.var(axis=0), sigma_min**2)
    return PaddingModel(tuple(float(v) for v in mean), tuple(float(v) for v in var))


# --- unit extraction ------------------------------------------------------------------------


@dataclass
class UnitObservation:
    unit: str
    room: int
    members: tuple[int, ...]
    rect: OrientedRect
    cell: str = "interior"
    padding: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)


def group_rect(instances: Sequence[PlacedInstance], catalog: ModelCatalog, yaw: float) -> OrientedRect:
    """Smallest rectangle at ``yaw`` holding every member footprint."""
    us, vs = [], []
    ox, oz = instances[0].x, instances[0].z
    for inst in instances:
        for x, z in footprint(inst, catalog).corners():
            u, v = world_to_local(ox, oz, yaw, x, z)
            us.append(u)
            vs.append(v)
    cu, cv = (min(us) + max(us)) / 2, (min(vs) + max(vs)) / 2
    c, s = math.cos(yaw), math.sin(yaw)
    return OrientedRect(ox + cu * c - cv * s, oz + cu * s + cv * c, (max(us) - min(us)) / 2, (max(vs) - min(vs)) / 2, yaw)


def extract_units(
    corpus: TrainingCorpus,
    abut: AbutmentLibrary,
    motifs: MotifLibrary,
    config: TrainConfig,
) -> list[list[UnitObservation]]:
    """Per room, every unit occurrence with its cell and measured padding."""
    cat = corpus.catalog
    groups: dict[int, list[tuple[str, tuple[int, ...]]]] = defaultdict(list)
    for pid, rows in abut.rows.items():
        for r, idxs in rows:
            groups[r].append((pid, idxs))
    for mid, occs in motifs.claims.items():
        for r, idxs in occs:
            groups[r].append((mid, idxs))
    out: list[list[UnitObservation]] = []
    for r, room in enumerate(corpus.rooms):
        furn = [i for i, inst in enumerate(room.instances) if cat.category_of(inst.model_id) == Category.FURNITURE]
        claimed = {i for _, idxs in groups[r] for i in idxs}
        units: list[UnitObservation] = []
        for unit, idxs in sorted(groups[r], key=lambda g: g[1]):
            insts = [room.instances[i] for i in idxs]
            units.append(UnitObservation(unit, r, idxs, group_rect(insts, cat, insts[0].yaw)))
        for i in furn:
            if i not in claimed:
                units.append(UnitObservation(room.instances[i].model_id, r, (i,), footprint(room.instances[i], cat)))
        if units:
            pos = {i: k for k, i in enumerate(furn)}
            obstacles = [footprint(room.instances[i], cat) for i in furn]
            pads = free_distances(
                [u.rect for u in units], [{pos[i] for i in u.members} for u in units], obstacles, room.boundary, config.d_cap
            )
            for u, p in zip(units, pads):
                u.cell = classify_rect(u.rect, room.boundary, config.tau_wall)
                u.padding = tuple(float(v) for v in p)
        out.append(units)
    return out


# --- embellishments --------------------------------------------------------------------------


def _wall_and_ceiling(corpus: TrainingCorpus, config: TrainConfig):
    cat = corpus.catalog
    heights: dict[str, list[float]] = defaultdict(list)
    chosen: dict[str, Counter] = defaultdict(Counter)
    ceil_counts: dict[tuple[str, str], list[int]] = defaultdict(list)
    no_ceiling: Counter = Counter()
    ceiling_tops: list[float] = []
    for room in corpus.rooms:
        rt = room.room_type.value
        ceil = Counter()
        for inst in room.instances:
            c = cat.category_of(inst.model_id)
            if c == Category.WALL_OBJECT:
                heights[inst.model_id].append(inst.position[1])
            elif c == Category.CEILING_OBJECT:
                ceil[inst.model_id] += 1
                ceiling_tops.append(inst.position[1] + cat[inst.model_id].height)
        if ceil:
            m = min(ceil, key=lambda k: (-ceil[k], k))
            chosen[rt][m] += 1
            ceil_counts[(m, rt)].append(ceil[m])
        else:
            no_ceiling[rt] += 1
    wall_height = {
        m: (float(np.mean(v)), float(max(np.var(v), config.sigma_min**2))) for m, v in sorted(heights.items())
    }
    ceiling_pmf = {
        rt: {m: n / sum(cnt.values()) for m, n in sorted(cnt.items())} for rt, cnt in sorted(chosen.items())
    }
    counts = {}
    for (m, rt), cs in sorted(ceil_counts.items()):
        counts[(m, rt)] = count_model_from(list(cs) + [0] * no_ceiling[rt])
    height = float(np.median(ceiling_tops)) if ceiling_tops else 2.8
    return wall_height, ceiling_pmf, counts, height


def associate_small_objects(room: Layout, catalog: ModelCatalog, height_tol: float = 0.05) -> dict[int, list[int]]:
    """Map furniture index -> small-object indices resting on it.

    A small object belongs to the highest furniture piece whose footprint
    contains its center and whose top is not above the object's base.
    """
    furn = [(i, footprint(inst, catalog), catalog[inst.model_id].height)
            for i, inst in enumerate(room.instances) if catalog.category_of(inst.model_id) == Category.FURNITURE]
    out: dict[int, list[int]] = {i: [] for i, _, _ in furn}
    for j, inst in enumerate(room.instances):
        if catalog.category_of(inst.model_id) != Category.SMALL_OBJECT:
            continue
        best = None
        for i, rect, h in furn:
            if h <= inst.position[1] + height_tol and rect.contains_point(inst.x, inst.z, 1e-6):
                if best is None or h > best[1]:
                    best = (i, h)
        if best is not None:
            out[best[0]].append(j)
    return out


def _small_store(corpus: TrainingCorpus, config: TrainConfig):
    cat = corpus.catalog
    store: dict[tuple[str, str], list[tuple[SmallPlacement, ...]]] = defaultdict(list)
    for room in corpus.rooms:
        rt = room.room_type.value
        for i, smalls in associate_small_objects(room, cat, config.small_height_tol).items():
            parent = room.instances[i]
            top = cat[parent.model_id].height
            cfg = []
            for j in smalls:
                s = room.instances[j]
                u, v = world_to_local(parent.x, parent.z, parent.yaw, s.x, s.z)
                cfg.append(SmallPlacement(s.model_id, (u, v), s.position[1] - top, normalize_yaw(s.yaw - parent.yaw)))
            store[(parent.model_id, rt)].append(tuple(cfg))
    return {k: tuple(v) for k, v in sorted(store.items()) if any(v)}


# --- public corpus-level learners -----------------------------------------------------------


def _singleton_counts(corpus: TrainingCorpus, category: Category = Category.FURNITURE):
    """Per room: model -> count, for every instance of ``category`` (no pattern claiming)."""
    cat = corpus.catalog
    return [Counter(i.model_id for i in room.instances if cat.category_of(i.model_id) == category) for room in corpus.rooms]


def _n_c(counts: Counter, catalog: ModelCatalog, model: str) -> int:
    """Same-class instances of models sampled before ``model`` (smaller ids)."""
    c = catalog.class_of(model)
    return sum(n for m, n in counts.items() if m < model and m in catalog and catalog.class_of(m) == c)


def learn_count_model(corpus: TrainingCorpus, model: str, room_type: str, config: TrainConfig | None = None) -> CountModel:
    """Count model of ``model`` over rooms of ``room_type``, every instance a singleton."""
    config = config or TrainConfig()
    if not corpus.rooms:
        raise TrainingError("empty corpus")
    category = corpus.catalog.category_of(model)
    rt = RoomType(room_type).value
    cs, ncs = [], []
    for room, cnt in zip(corpus.rooms, _singleton_counts(corpus, category)):
        if room.room_type.value != rt:
            continue
        cs.append(cnt.get(model, 0))
        ncs.append(_n_c(cnt, corpus.catalog, model))
    if not any(cs):
        return CountModel.point(0)
    return count_model_from(cs, ncs, config.bucket_min_obs)


def _instance_obs(corpus: TrainingCorpus, model: str, config: TrainConfig):
    cat = corpus.catalog
    cells, yaws, pads = [], [], []
    for room in corpus.rooms:
        furn = [i for i, inst in enumerate(room.instances) if cat.category_of(inst.model_id) == Category.FURNITURE]
        mine = [i for i in furn if room.instances[i].model_id == model]
        if not mine:
            continue
        obstacles = [footprint(room.instances[i], cat) for i in furn]
        pos = {i: k for k, i in enumerate(furn)}
        rects = [footprint(room.instances[i], cat) for i in mine]
        p = free_distances(rects, [{pos[i]} for i in mine], obstacles, room.boundary, config.d_cap)
        for i, r, row in zip(mine, rects, p):
            cell = classify_rect(r, room.boundary, config.tau_wall)
            cells.append(cell)
            if cell == "interior":
                yaws.append(room.instances[i].yaw)
            pads.append(row)
    return cells, yaws, np.array(pads).reshape(-1, 4)


def learn_cell_pmf(corpus: TrainingCorpus, model: str, config: TrainConfig | None = None) -> CellPmf:
    config = config or TrainConfig()
    if not corpus.rooms:
        raise TrainingError("empty corpus")
    return cell_pmf_from(_instance_obs(corpus, model, config)[0])


def learn_orientation(corpus: TrainingCorpus, model: str, config: TrainConfig | None = None) -> OrientationModel:
    config = config or TrainConfig()
    if not corpus.rooms:
        raise TrainingError("empty corpus")
    return orientation_from(_instance_obs(corpus, model, config)[1], config.eps_align_deg)


def learn_padding(corpus: TrainingCorpus, model: str, config: TrainConfig | None = None) -> PaddingModel:
    config = config or TrainConfig()
    if not corpus.rooms:
        raise TrainingError("empty corpus")
    return padding_from(_instance_obs(corpus, model, config)[2], config.sigma_min)


def learn_embellishments(corpus: TrainingCorpus, config: TrainConfig | None = None) -> EmbellishmentModels:
    config = config or TrainConfig()
    if not corpus.rooms:
        raise TrainingError("empty corpus")
    wall_height, ceiling_pmf, _, height = _wall_and_ceiling(corpus, config)
    return EmbellishmentModels(ceiling_pmf, wall_height, _small_store(corpus, config), height)


# --- orchestration ------------------------------------------------------------------------------


@dataclass
class TrainReport:
    params: LearnedParams
    abutments: AbutmentLibrary
    motifs: MotifLibrary
    units: list[list[UnitObservation]] = field(default_factory=list)


def train_with_report(corpus: TrainingCorpus, config: TrainConfig | None = None) -> TrainReport:
    config = config or TrainConfig()
    if not corpus.rooms:
        raise TrainingError("empty corpus")
    cat = corpus.catalog

    abut = mine_abutments(corpus, config)
    motifs = mine_motifs(corpus, config.k_max, config, exclude=abut.claimed())
    units = extract_units(corpus, abut, motifs, config)

    n_rooms = len(corpus.rooms)
    type_counts = Counter(r.room_type.value for r in corpus.rooms)
    room_type_pmf = {t.value: type_counts.get(t.value, 0) / n_rooms for t in RoomType}

    # counts per (unit, room type); singleton models also condition on n_c
    per_room = [Counter(u.unit for u in us) for us in units]
    wall_counts = _singleton_counts(corpus, Category.WALL_OBJECT)
    seen: dict[str, set[str]] = defaultdict(set)
    for room, cnt, wcnt in zip(corpus.rooms, per_room, wall_counts):
        for u in list(cnt) + list(wcnt):
            seen[u].add(room.room_type.value)
    rooms_by_type: dict[str, list[int]] = defaultdict(list)
    for r, room in enumerate(corpus.rooms):
        rooms_by_type[room.room_type.value].append(r)
    counts: dict[tuple[str, str], CountModel] = {}
    for u in sorted(seen):
        is_model = u in cat
        src_all = wall_counts if is_model and cat.category_of(u) == Category.WALL_OBJECT else per_room
        for rt in sorted(seen[u]):
            cs = [src_all[r].get(u, 0) for r in rooms_by_type[rt]]
            ncs = [_n_c(src_all[r], cat, u) for r in rooms_by_type[rt]] if is_model else None
            counts[(u, rt)] = count_model_from(cs, ncs, config.bucket_min_obs)

    wall_height, ceiling_pmf, ceil_counts, ceiling_height = _wall_and_ceiling(corpus, config)
    for key, cm in ceil_counts.items():
        counts[key] = cm

    by_unit: dict[str, list[UnitObservation]] = defaultdict(list)
    for us in units:
        for u in us:
            by_unit[u.unit].append(u)
    cells, orients, pads = {}, {}, {}
    for u in sorted(by_unit):
        obs = by_unit[u]
        cells[u] = cell_pmf_from([o.cell for o in obs])
        orients[u] = orientation_from([o.rect.yaw for o in obs if o.cell == "interior"], config.eps_align_deg)
        pads[u] = padding_from(np.array([o.padding for o in obs]), config.sigma_min)

    sizes: dict[str, list[tuple[float, float]]] = defaultdict(list)
    for room in corpus.rooms:
        sizes[room.room_type.value].append(room.size())
    room_sizes = {rt: (float(np.median([s[0] for s in v])), float(np.median([s[1] for s in v]))) for rt, v in sorted(sizes.items())}

    params = LearnedParams(
        catalog=cat,
        room_type_pmf=room_type_pmf,
        counts=counts,
        cells=cells,
        orientations=orients,
        paddings=pads,
        embellishments=EmbellishmentModels(ceiling_pmf, wall_height, _small_store(corpus, config), ceiling_height),
        motifs=dict(motifs.motifs),
        abutments=dict(abut.patterns),
        room_sizes=room_sizes,
        config=config,
    )
    return TrainReport(params, abut, motifs, units)


def train(corpus: TrainingCorpus, config: TrainConfig | None = None) -> LearnedParams:
    """Learn every distribution the sampler needs; a pure function of the corpus."""
    return train_with_report(corpus, config).params

"""Synthetic corpora with planted ground-truth parameters.

The generator has its own placer, deliberately independent of the
placement engine: it sizes each room from its contents, keeps generous gaps
between objects so nothing abuts by accident, and leaves wall objects at
least ``gap`` away from neighbouring walls so cell classification is
unambiguous.  Every planted quantity is recorded in a :class:`GenerationLog`
so tests can score recovery against the truth rather than against the
trainer.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .corpus import TrainingCorpus, catalog_from_doc, catalog_to_doc
from .geometry import OrientedRect, local_to_world, rects_intersect
from .params import ALIGNED_YAWS, COUNT_BINS, START, TERMINAL
from .rng import Rng, cumulative
from .scene import CELLS, Category, Layout, ModelCatalog, ModelRecord, Opening, PlacedInstance, RoomType, rect_boundary

HALF_PI = math.pi / 2
# Yaw that puts an object's back against each wall.
WALL_YAW = {"N": HALF_PI, "E": math.pi, "S": 3 * HALF_PI, "W": 0.0}
# Non-aligned yaws keep this far from any axis so they never read as aligned.
NON_ALIGNED_BAND = math.radians(5.0)


class InfeasibleRecipe(ValueError):
    """A recipe cannot be realized (conflicting cells, fixed size too small, ...)."""


# --- recipe types -------------------------------------------------------------


@dataclass(frozen=True)
class ItemRecipe:
    model: str
    count: dict[str, float]
    cells: dict[str, float]
    tail_rate: float = 0.0
    p_aligned: float = 1.0
    aligned: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)


@dataclass(frozen=True)
class MotifRecipe:
    """Anchor model plus members at ``offsets`` in the anchor frame.

    With ``scatter`` set to ``(r_min, r_max)`` the members are instead dropped
    uniformly in that annulus with random yaw (a no-motif control).
    """

    name: str
    models: tuple[str, ...]
    offsets: tuple[tuple[float, float], ...]
    rel_yaws: tuple[float, ...]
    count: dict[str, float]
    jitter: float = 0.05
    scatter: tuple[float, float] | None = None


@dataclass(frozen=True)
class AbutmentRecipe:
    name: str
    models: tuple[str, ...]
    matrix: tuple[tuple[float, ...], ...]  # rows/cols: START, *models, TERMINAL
    count: dict[str, float]
    walls: tuple[str, ...] = ("N", "E", "S", "W")


@dataclass(frozen=True)
class ProbeRecipe:
    model: str
    mean: tuple[float, float, float, float]
    sd: tuple[float, float, float, float]


@dataclass(frozen=True)
class WallRecipe:
    model: str
    count: dict[str, float]
    height_mean: float
    height_sd: float


@dataclass(frozen=True)
class CeilingRecipe:
    models: dict[str, float]
    count: dict[str, float]


@dataclass(frozen=True)
class SmallRecipe:
    parent: str
    model: str
    offset: tuple[float, float]
    prob: float
    rel_yaw: float = 0.0


@dataclass(frozen=True)
class RoomRecipe:
    items: tuple[ItemRecipe, ...] = ()
    motifs: tuple[MotifRecipe, ...] = ()
    abutments: tuple[AbutmentRecipe, ...] = ()
    probes: tuple[ProbeRecipe, ...] = ()
    wall: tuple[WallRecipe, ...] = ()
    ceiling: CeilingRecipe | None = None
    small: tuple[SmallRecipe, ...] = ()
    doors: int = 1
    gap: float = 0.5
    slack: float = 2.5
    fixed_size: tuple[float, float] | None = None


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    n_rooms: int
    room_type_pmf: dict[str, float]
    catalog: ModelCatalog
    recipes: dict[str, RoomRecipe]
    ceiling_height: float = 2.8

    def __post_init__(self) -> None:
        validate_spec(self)


def _check_pmf(p: Mapping[str, float], what: str, keys: Sequence[str] | None = None) -> None:
    if any(v < 0 for v in p.values()):
        raise ValueError(f"{what}: negative probability")
    if abs(sum(p.values()) - 1.0) > 1e-9:
        raise ValueError(f"{what}: probabilities sum to {sum(p.values())!r}, not 1")
    if keys is not None:
        bad = set(p) - set(keys)
        if bad:
            raise ValueError(f"{what}: unknown keys {sorted(bad)}")


def validate_spec(spec: SyntheticCorpusSpec) -> None:
    if spec.n_rooms < 0:
        raise ValueError("n_rooms must be >= 0")
    _check_pmf(spec.room_type_pmf, "room_type_pmf", [r.value for r in RoomType])
    for rt, p in spec.room_type_pmf.items():
        if p > 0 and rt not in spec.recipes:
            raise ValueError(f"room type {rt!r} has mass but no recipe")
    cat = spec.catalog
    for rt, rec in spec.recipes.items():
        w = f"recipes.{rt}"
        for it in rec.items:
            cat[it.model]
            _check_pmf(it.count, f"{w}.{it.model}.count", COUNT_BINS)
            _check_pmf(it.cells, f"{w}.{it.model}.cells", CELLS)
            _check_pmf(dict(enumerate(it.aligned)), f"{w}.{it.model}.aligned")
            if not 0 <= it.p_aligned <= 1:
                raise ValueError(f"{w}.{it.model}: p_aligned outside [0, 1]")
            if it.count.get(">4", 0) > 0 and it.tail_rate <= 0:
                raise ValueError(f"{w}.{it.model}: tail bin needs tail_rate > 0")
        for m in rec.motifs:
            for mid in m.models:
                cat[mid]
            _check_pmf(m.count, f"{w}.{m.name}.count", COUNT_BINS)
            if m.scatter is None and (len(m.offsets) != len(m.models) - 1 or len(m.rel_yaws) != len(m.models) - 1):
                raise ValueError(f"{w}.{m.name}: need one offset and yaw per non-anchor member")
            if m.jitter <= 0:
                raise ValueError(f"{w}.{m.name}: jitter sigma must be > 0")
        for a in rec.abutments:
            for mid in a.models:
                cat[mid]
            _check_pmf(a.count, f"{w}.{a.name}.count", COUNT_BINS)
            n = len(a.models) + 2
            if len(a.matrix) != n or any(len(r) != n for r in a.matrix):
                raise ValueError(f"{w}.{a.name}: matrix must be {n}x{n}")
            for i, row in enumerate(a.matrix[:-1]):
                _check_pmf(dict(enumerate(row)), f"{w}.{a.name}.matrix[{i}]")
        for p in rec.probes:
            cat[p.model]
            if any(s <= 0 for s in p.sd):
                raise ValueError(f"{w}.{p.model}: planted sigma must be > 0")
        for wr in rec.wall:
            cat[wr.model]
            _check_pmf(wr.count, f"{w}.{wr.model}.count", COUNT_BINS)
            if wr.height_sd <= 0:
                raise ValueError(f"{w}.{wr.model}: planted sigma must be > 0")
        if rec.ceiling is not None:
            _check_pmf(rec.ceiling.models, f"{w}.ceiling.models")
            _check_pmf(rec.ceiling.count, f"{w}.ceiling.count", COUNT_BINS)
        for s in rec.small:
            cat[s.parent], cat[s.model]


# --- generation log -----------------------------------------------------------


@dataclass
class RoomLog:
    cells: dict[int, str] = field(default_factory=dict)  # furniture instance index -> planted cell
    motifs: list[tuple[str, tuple[int, ...]]] = field(default_factory=list)
    rows: list[tuple[str, tuple[str, ...], tuple[int, ...]]] = field(default_factory=list)
    small: list[tuple[int, int]] = field(default_factory=list)  # (parent index, small index)
    probe: tuple[str, tuple[float, ...]] | None = None
    wall_heights: list[tuple[str, float]] = field(default_factory=list)


@dataclass
class GenerationLog:
    rooms: list[RoomLog] = field(default_factory=list)


# --- sampling helpers ------------------------------------------------------------


def draw_count(rng: Rng, pmf: Mapping[str, float], tail_rate: float = 0.0) -> int:
    b = rng.categorical(cumulative([pmf.get(k, 0.0) for k in COUNT_BINS]))
    if b < 5:
        return b
    while True:
        n = rng.poisson(tail_rate)
        if n > 4:
            return n


def _draw_key(rng: Rng, pmf: Mapping[str, float]) -> str:
    keys = list(pmf)
    return keys[rng.categorical(cumulative([pmf[k] for k in keys]))]


def draw_orientation(rng: Rng, p_aligned: float, aligned: Sequence[float]) -> float:
    if rng.random() < p_aligned:
        return ALIGNED_YAWS[rng.categorical(cumulative(aligned))]
    # uniform over the four open arcs between the exclusion bands
    arc = HALF_PI - 2 * NON_ALIGNED_BAND
    k = rng.integer(4)
    return k * HALF_PI + NON_ALIGNED_BAND + rng.random() * arc


def walk_chain(rng: Rng, models: Sequence[str], matrix: Sequence[Sequence[float]], cap: int | None = None) -> list[str]:
    states = (START, *models, TERMINAL)
    seq: list[str] = []
    i = 0
    while True:
        j = rng.categorical(cumulative(matrix[i]))
        if states[j] == TERMINAL or states[j] == START:
            return seq
        seq.append(states[j])
        if cap is not None and len(seq) >= cap:
            return seq
        i = j


def _aabb_extent(depth: float, width: float, yaw: float) -> tuple[float, float]:
    c, s = abs(math.cos(yaw)), abs(math.sin(yaw))
    return depth * c + width * s, depth * s + width * c


# --- per-room generator ---------------------------------------------------------


@dataclass
class _Member:
    model: str
    u: float  # position relative to the entry origin
    v: float
    yaw: float
    cell: str | None = None


@dataclass
class _Entry:
    members: list[_Member]
    kind: str  # item | motif | row
    name: str = ""
    seq: tuple[str, ...] = ()


def _entry_extent(entry: _Entry, catalog: ModelCatalog) -> tuple[float, float, float, float]:
    xs0, zs0, xs1, zs1 = [], [], [], []
    for m in entry.members:
        r = catalog[m.model]
        ex, ez = _aabb_extent(r.depth, r.width, m.yaw)
        xs0.append(m.u - ex / 2)
        xs1.append(m.u + ex / 2)
        zs0.append(m.v - ez / 2)
        zs1.append(m.v + ez / 2)
    return min(xs0), min(zs0), max(xs1), max(zs1)


class _RoomBuilder:
    def __init__(self, spec: SyntheticCorpusSpec, rt: str, recipe: RoomRecipe, rng: Rng) -> None:
        self.spec = spec
        self.cat = spec.catalog
        self.rt = rt
        self.recipe = recipe
        self.rng = rng
        self.instances: list[PlacedInstance] = []
        self.log = RoomLog()

    def _add(self, model: str, x: float, y: float, z: float, yaw: float) -> int:
        self.instances.append(PlacedInstance(model, (x, y, z), yaw))
        return len(self.instances) - 1

    # probe rooms: one object, walls exactly at the planted padding
    def build_probe(self) -> Layout:
        rng = self.rng
        probe = self.recipe.probes[rng.integer(len(self.recipe.probes))]
        pad = tuple(max(0.0, rng.normal(m, s)) for m, s in zip(probe.mean, probe.sd))
        yaw = ALIGNED_YAWS[rng.integer(4)]
        rec = self.cat[probe.model]
        front, back, left, right = pad
        # in the object frame: u in [-d/2 - back, d/2 + front], v in [-w/2 - left, w/2 + right]
        corners = [
            local_to_world(0.0, 0.0, yaw, u, v)
            for u in (-rec.depth / 2 - back, rec.depth / 2 + front)
            for v in (-rec.width / 2 - left, rec.width / 2 + right)
        ]
        x0 = min(c[0] for c in corners)
        z0 = min(c[1] for c in corners)
        x1 = max(c[0] for c in corners)
        z1 = max(c[1] for c in corners)
        idx = self._add(probe.model, -x0, 0.0, -z0, yaw)
        self.log.probe = (probe.model, pad)
        self.log.cells[idx] = "interior"
        return Layout(RoomType(self.rt), rect_boundary(x1 - x0, z1 - z0), tuple(self.instances), ())

    def build(self) -> Layout:
        if self.recipe.probes:
            return self.build_probe()
        rng, rec = self.rng, self.recipe
        g = rec.gap
        walls: dict[str, list[_Entry]] = {w: [] for w in "NESW"}
        corners: dict[str, _Entry] = {}
        interior: list[_Entry] = []

        for it in rec.items:
            for _ in range(draw_count(rng, it.count, it.tail_rate)):
                cell = _draw_key(rng, it.cells)
                if cell == "interior":
                    yaw = draw_orientation(rng, it.p_aligned, it.aligned)
                    interior.append(_Entry([_Member(it.model, 0.0, 0.0, yaw, cell)], "item"))
                elif cell in WALL_YAW:
                    walls[cell].append(_Entry([_Member(it.model, 0.0, 0.0, 0.0, cell)], "item"))
                else:
                    if cell in corners:
                        raise InfeasibleRecipe(f"{self.rt}: two objects drawn into corner {cell}")
                    corners[cell] = _Entry([_Member(it.model, 0.0, 0.0, 0.0, cell)], "item")

        for mo in rec.motifs:
            for _ in range(draw_count(rng, mo.count)):
                interior.append(self._motif_entry(mo))

        used_walls: set[str] = set()
        for ab in rec.abutments:
            for _ in range(draw_count(rng, ab.count)):
                free = [w for w in ab.walls if w not in used_walls]
                if not free:
                    raise InfeasibleRecipe(f"{self.rt}: more abutment rows than walls")
                wall = free[rng.integer(len(free))]
                used_walls.add(wall)
                seq: list[str] = []
                while not seq:
                    seq = walk_chain(rng, ab.models, ab.matrix)
                members = [_Member(m, 0.0, 0.0, 0.0, wall) for m in seq]
                walls[wall].append(_Entry(members, "row", ab.name, tuple(seq)))

        layout = self._realize(walls, corners, interior, g)
        return self._embellish(layout)

    def _motif_entry(self, mo: MotifRecipe) -> _Entry:
        rng, cat = self.rng, self.cat
        group_yaw = ALIGNED_YAWS[rng.integer(4)]
        for _ in range(1000):
            rects = [(0.0, 0.0, 0.0, mo.models[0])]
            if mo.scatter is None:
                for mid, (u, v), ry in zip(mo.models[1:], mo.offsets, mo.rel_yaws):
                    rects.append((u + rng.normal(0, mo.jitter), v + rng.normal(0, mo.jitter), ry, mid))
            else:
                r0, r1 = mo.scatter
                for mid in mo.models[1:]:
                    rad = math.sqrt(rng.uniform(r0 * r0, r1 * r1))
                    ang = rng.uniform(0, 2 * math.pi)
                    rects.append((rad * math.cos(ang), rad * math.sin(ang), rng.uniform(0, 2 * math.pi), mid))
            if _group_separated(rects, cat, 0.05):
                break
        else:
            raise InfeasibleRecipe(f"motif {mo.name}: members keep colliding")
        members = []
        for u, v, ry, mid in rects:
            x, z = local_to_world(0.0, 0.0, group_yaw, u, v)
            members.append(_Member(mid, x, z, group_yaw + ry, "interior"))
        return _Entry(members, "motif", mo.name)

    def _realize(self, walls, corners, interior, g) -> Layout:
        rng, cat = self.rng, self.cat

        def depth_len(e: _Entry) -> tuple[float, float]:
            return max(cat[m.model].depth for m in e.members), sum(cat[m.model].width for m in e.members)

        band = {w: max((depth_len(e)[0] for e in walls[w]), default=0.0) for w in "NESW"}
        # corner objects back onto the N or S wall: x extent = width, z extent = depth
        cx = {c: (cat[e.members[0].model].width if c in corners else 0.0) for c, e in ((c, corners.get(c)) for c in ("NW", "NE", "SE", "SW"))}
        cz = {c: (cat[corners[c].members[0].model].depth if c in corners else 0.0) for c in ("NW", "NE", "SE", "SW")}
        eff_x = {c: max(cx[c], band["W" if c.endswith("W") else "E"]) for c in cx}
        eff_z = {c: max(cz[c], band["N" if c.startswith("N") else "S"]) for c in cz}
        xl = max(band["W"], cx["NW"], cx["SW"])
        xr = max(band["E"], cx["NE"], cx["SE"])
        zt = max(band["N"], cz["NW"], cz["NE"])
        zb = max(band["S"], cz["SW"], cz["SE"])

        def need(w: str) -> float:
            lens = [depth_len(e)[1] for e in walls[w]]
            if w == "N":
                ends = eff_x["NW"] + eff_x["NE"]
            elif w == "S":
                ends = eff_x["SW"] + eff_x["SE"]
            elif w == "W":
                ends = eff_z["NW"] + eff_z["SW"]
            else:
                ends = eff_z["NE"] + eff_z["SE"]
            return ends + sum(lens) + g * (len(lens) + 1)

        placed, iw, idp = self._pack_interior(interior, g)
        w_need = max(need("N"), need("S"), xl + xr + iw + (2 * g if interior else g), 2.0)
        d_need = max(need("W"), need("E"), zt + zb + idp + (2 * g if interior else g), 2.0)
        if self.recipe.fixed_size is not None:
            fw, fd = self.recipe.fixed_size
            if w_need > fw + 1e-9 or d_need > fd + 1e-9:
                raise InfeasibleRecipe(f"{self.rt}: contents need {w_need:.2f}x{d_need:.2f} m, room is {fw}x{fd} m")
            W, D = fw, fd
        else:
            W = w_need + rng.uniform(0, self.recipe.slack)
            D = d_need + rng.uniform(0, self.recipe.slack)

        # corners
        for c, e in sorted(corners.items()):
            m = e.members[0]
            r = cat[m.model]
            yaw = WALL_YAW["N"] if c.startswith("N") else WALL_YAW["S"]
            x = r.width / 2 if c.endswith("W") else W - r.width / 2
            z = r.depth / 2 if c.startswith("N") else D - r.depth / 2
            self.log.cells[self._add(m.model, x, 0.0, z, yaw)] = c

        # walls: entries in random order, random extra gaps
        spans = {
            "N": (eff_x["NW"], W - eff_x["NE"]),
            "S": (eff_x["SW"], W - eff_x["SE"]),
            "W": (eff_z["NW"], D - eff_z["SW"]),
            "E": (eff_z["NE"], D - eff_z["SE"]),
        }
        for w in "NESW":
            entries = list(walls[w])
            if not entries:
                continue
            order = [entries.pop(rng.integer(len(entries))) for _ in range(len(entries))]
            lo, hi = spans[w]
            lens = [depth_len(e)[1] for e in order]
            free = (hi - lo) - sum(lens) - g * (len(order) + 1)
            cuts = sorted(rng.random() for _ in range(len(order)))
            weights = [b - a for a, b in zip([0.0] + cuts, cuts + [1.0])]
            pos = lo + g + free * weights[0]
            for k, e in enumerate(order):
                idxs = []
                for m in e.members:
                    r = cat[m.model]
                    along = pos + r.width / 2
                    inset = r.depth / 2
                    if w == "N":
                        x, z = along, inset
                    elif w == "S":
                        x, z = along, D - inset
                    elif w == "W":
                        x, z = inset, along
                    else:
                        x, z = W - inset, along
                    idx = self._add(m.model, x, 0.0, z, WALL_YAW[w])
                    self.log.cells[idx] = w
                    idxs.append(idx)
                    pos += r.width
                if e.kind == "row":
                    self.log.rows.append((e.name, e.seq, tuple(idxs)))
                pos += g + free * weights[k + 1]

        # interior: the packed box lands at a random spot of the interior region
        rx0, rx1 = xl + g, W - xr - g
        rz0, rz1 = zt + g, D - zb - g
        ox = rx0 + rng.uniform(0, max(0.0, (rx1 - rx0) - iw))
        oz = rz0 + rng.uniform(0, max(0.0, (rz1 - rz0) - idp))
        for e, (px, pz) in placed:
            idxs = []
            for m in e.members:
                idx = self._add(m.model, ox + px + m.u, 0.0, oz + pz + m.v, m.yaw)
                self.log.cells[idx] = "interior"
                idxs.append(idx)
            if e.kind == "motif":
                self.log.motifs.append((e.name, tuple(idxs)))

        openings = []
        for _ in range(self.recipe.doors):
            wall = rng.integer(4)
            length = W if wall in (0, 2) else D
            openings.append(Opening("door", wall, rng.uniform(0.5, length - 0.5), 0.9))
        return Layout(RoomType(self.rt), rect_boundary(W, D), tuple(self.instances), tuple(openings))

    def _pack_interior(self, interior: list[_Entry], g: float):
        """Random non-overlapping placement of interior entries inside a growing box."""
        if not interior:
            return [], 0.0, 0.0
        rng, cat = self.rng, self.cat
        ext = [_entry_extent(e, cat) for e in interior]
        sep = 0.3
        area = sum((x1 - x0 + sep) * (z1 - z0 + sep) for x0, z0, x1, z1 in ext)
        side = math.sqrt(5.0 * area)
        bw = max(side, max(x1 - x0 for x0, _, x1, _ in ext))
        bd = max(side, max(z1 - z0 for _, z0, _, z1 in ext))
        order = sorted(range(len(interior)), key=lambda i: -(ext[i][2] - ext[i][0]) * (ext[i][3] - ext[i][1]))
        while True:
            boxes: list[tuple[float, float, float, float]] = []
            out: dict[int, tuple[float, float]] = {}
            ok = True
            for i in order:
                x0, z0, x1, z1 = ext[i]
                for _ in range(300):
                    px = rng.uniform(-x0, bw - x1)
                    pz = rng.uniform(-z0, bd - z1)
                    b = (px + x0, pz + z0, px + x1, pz + z1)
                    if all(b[2] + sep <= o[0] or o[2] + sep <= b[0] or b[3] + sep <= o[1] or o[3] + sep <= b[1] for o in boxes):
                        boxes.append(b)
                        out[i] = (px, pz)
                        break
                else:
                    ok = False
                    break
            if ok:
                return [(interior[i], out[i]) for i in range(len(interior))], bw, bd
            bw *= 1.15
            bd *= 1.15

    def _embellish(self, layout: Layout) -> Layout:
        rng, cat, rec = self.rng, self.cat, self.recipe
        W, D = layout.size()
        n_furn = len(self.instances)
        # small objects on their parents
        for i in range(n_furn):
            parent = self.instances[i]
            for s in rec.small:
                if s.parent != parent.model_id or rng.random() >= s.prob:
                    continue
                x, z = local_to_world(parent.x, parent.z, parent.yaw, *s.offset)
                j = self._add(s.model, x, cat[parent.model_id].height, z, parent.yaw + s.rel_yaw)
                self.log.small.append((i, j))
        # wall objects, back on a random wall
        for wr in rec.wall:
            r = cat[wr.model]
            for _ in range(draw_count(rng, wr.count)):
                wall = rng.integer(4)
                length = W if wall in (0, 2) else D
                along = rng.uniform(min(0.3 + r.width / 2, length / 2), max(length - 0.3 - r.width / 2, length / 2))
                y = rng.normal(wr.height_mean, wr.height_sd)
                name = "NESW"[wall]
                x, z = {
                    "N": (along, r.depth / 2),
                    "E": (W - r.depth / 2, along),
                    "S": (W - along, D - r.depth / 2),
                    "W": (r.depth / 2, D - along),
                }[name]
                self._add(wr.model, x, y, z, WALL_YAW[name])
                self.log.wall_heights.append((wr.model, y))
        # ceiling objects on a regular grid
        if rec.ceiling is not None:
            n = draw_count(rng, rec.ceiling.count)
            if n:
                model = _draw_key(rng, rec.ceiling.models)
                cols = max(1, round(math.sqrt(n * W / D)))
                rows = math.ceil(n / cols)
                y = self.spec.ceiling_height - cat[model].height
                for k in range(n):
                    a, b = k % cols, k // cols
                    self._add(model, (a + 0.5) * W / cols, y, (b + 0.5) * D / rows, 0.0)
        return Layout(layout.room_type, layout.boundary, tuple(self.instances), layout.openings)


def _group_separated(rects, catalog: ModelCatalog, sep: float) -> bool:
    rs = [
        OrientedRect(u, v, catalog[m].depth / 2 + sep / 2, catalog[m].width / 2 + sep / 2, y)
        for u, v, y, m in rects
    ]
    return not any(rects_intersect(rs[i], rs[j]) for i in range(len(rs)) for j in range(i + 1, len(rs)))


# --- public API -----------------------------------------------------------------


def generate_with_log(spec: SyntheticCorpusSpec, seed: int) -> tuple[TrainingCorpus, GenerationLog]:
    """Generate a corpus and the ground-truth log of what was planted.

    Room ``i`` draws from its own stream ``(seed, 1, i)`` and its type from
    ``(seed, 0, i)``, so the output is a pure function of ``(spec, seed)``.
    """
    types = sorted(spec.room_type_pmf)
    cdf = cumulative([spec.room_type_pmf[t] for t in types])
    rooms, log = [], GenerationLog()
    for i in range(spec.n_rooms):
        rt = types[Rng(seed, 0, i).categorical(cdf)]
        builder = _RoomBuilder(spec, rt, spec.recipes[rt], Rng(seed, 1, i))
        rooms.append(builder.build())
        log.rooms.append(builder.log)
    return TrainingCorpus(tuple(rooms), spec.catalog), log


def generate_synthetic_corpus(spec: SyntheticCorpusSpec, seed: int) -> TrainingCorpus:
    return generate_with_log(spec, seed)[0]


# --- spec documents ---------------------------------------------------------------


def spec_to_doc(spec: SyntheticCorpusSpec) -> dict:
    return {
        "n_rooms": spec.n_rooms,
        "room_type_pmf": spec.room_type_pmf,
        "ceiling_height": spec.ceiling_height,
        "catalog": catalog_to_doc(spec.catalog),
        "recipes": {rt: asdict(r) for rt, r in spec.recipes.items()},
    }


def _tuplify(x: Any) -> Any:
    if isinstance(x, list):
        return tuple(_tuplify(v) for v in x)
    return x


def spec_from_doc(doc: Mapping[str, Any]) -> SyntheticCorpusSpec:
    recipes = {}
    for rt, r in doc["recipes"].items():
        recipes[rt] = RoomRecipe(
            items=tuple(ItemRecipe(**{**i, "aligned": tuple(i.get("aligned", (0.25,) * 4))}) for i in r.get("items", [])),
            motifs=tuple(
                MotifRecipe(**{k: _tuplify(v) if k != "count" else v for k, v in m.items()}) for m in r.get("motifs", [])
            ),
            abutments=tuple(
                AbutmentRecipe(**{k: _tuplify(v) if k != "count" else v for k, v in a.items()}) for a in r.get("abutments", [])
            ),
            probes=tuple(ProbeRecipe(p["model"], tuple(p["mean"]), tuple(p["sd"])) for p in r.get("probes", [])),
            wall=tuple(WallRecipe(**w) for w in r.get("wall", [])),
            ceiling=CeilingRecipe(**r["ceiling"]) if r.get("ceiling") else None,
            small=tuple(SmallRecipe(**{**s, "offset": tuple(s["offset"])}) for s in r.get("small", [])),
            doors=int(r.get("doors", 1)),
            gap=float(r.get("gap", 0.5)),
            slack=float(r.get("slack", 2.5)),
            fixed_size=_tuplify(r.get("fixed_size")),
        )
    return SyntheticCorpusSpec(
        n_rooms=int(doc["n_rooms"]),
        room_type_pmf=dict(doc["room_type_pmf"]),
        catalog=catalog_from_doc(doc["catalog"]),
        recipes=recipes,
        ceiling_height=float(doc.get("ceiling_height", 2.8)),
    )


def load_spec(path) -> SyntheticCorpusSpec:
    return spec_from_doc(json.loads(Path(path).read_text()))


# --- built-in specs ---------------------------------------------------------------

F, S, WO, C = Category.FURNITURE, Category.SMALL_OBJECT, Category.WALL_OBJECT, Category.CEILING_OBJECT

DEFAULT_MODELS = (
    ("bed_double", "bed", F, 2.0, 1.6, 0.5),
    ("wardrobe", "wardrobe", F, 0.6, 1.8, 2.0),
    ("bookshelf", "shelf", F, 0.35, 1.0, 1.8),
    ("desk", "desk", F, 0.7, 1.4, 0.75),
    ("office_chair", "chair", F, 0.55, 0.55, 0.9),
    ("sofa", "sofa", F, 0.9, 2.2, 0.8),
    ("armchair", "armchair", F, 0.8, 0.8, 0.9),
    ("coffee_table", "coffee_table", F, 0.6, 1.1, 0.45),
    ("tv_stand", "tv_stand", F, 0.45, 1.6, 0.5),
    ("plant", "plant", F, 0.4, 0.4, 1.0),
    ("dining_table", "table", F, 0.9, 1.6, 0.75),
    ("dining_chair", "chair", F, 0.5, 0.5, 0.9),
    ("stool", "stool", F, 0.4, 0.4, 0.45),
    ("cabinet", "cabinet", F, 0.6, 0.6, 0.9),
    ("fridge", "fridge", F, 0.7, 0.7, 1.8),
    ("toilet", "toilet", F, 0.7, 0.45, 0.8),
    ("bathtub", "bathtub", F, 0.8, 1.7, 0.6),
    ("crate", "crate", F, 0.8, 1.2, 0.8),
    ("chest", "crate", F, 0.5, 0.9, 0.6),
    ("laptop", "laptop", S, 0.25, 0.35, 0.03),
    ("book", "book", S, 0.22, 0.15, 0.04),
    ("picture", "picture", WO, 0.05, 0.8, 0.6),
    ("mirror", "mirror", WO, 0.05, 0.6, 0.9),
    ("ceiling_lamp", "ceiling_lamp", C, 0.4, 0.4, 0.2),
    ("ceiling_fan", "ceiling_fan", C, 0.9, 0.9, 0.3),
)


def default_catalog() -> ModelCatalog:
    return ModelCatalog.from_records(ModelRecord(*row) for row in DEFAULT_MODELS)


def _pmf(**kw: float) -> dict[str, float]:
    return {k.replace("gt4", ">4").lstrip("n"): v for k, v in kw.items()}


CABINET_CHAIN = (
    # START, cabinet, fridge, TERMINAL
    (0.0, 1.0, 0.0, 0.0),
    (0.0, 0.7, 0.1, 0.2),
    (0.0, 0.0, 0.0, 1.0),
    (0.0, 0.0, 0.0, 1.0),
)

TABLE_TWO_CHAIRS = MotifRecipe(
    name="table_two_chairs",
    models=("dining_table", "dining_chair", "dining_chair"),
    offsets=((0.85, 0.0), (-0.85, 0.0)),
    rel_yaws=(math.pi, 0.0),
    count=_pmf(n1=1.0),
    jitter=0.05,
)


def default_synthetic_spec(n_rooms: int = 10_000) -> SyntheticCorpusSpec:
    """A varied corpus covering every planted quantity the trainer estimates.

    Wall-flush singletons of one room type are kept on distinct walls:
    two objects flush against the same wall have a displacement that is
    spread along one axis only, which would otherwise read as a tight motif.
    """
    ceiling = CeilingRecipe({"ceiling_lamp": 0.7, "ceiling_fan": 0.3}, _pmf(n1=0.6, n2=0.3, n4=0.1))
    pictures = WallRecipe("picture", _pmf(n0=0.3, n1=0.4, n2=0.3), 1.5, 0.1)
    recipes = {
        "bedroom": RoomRecipe(
            items=(
                ItemRecipe("bed_double", _pmf(n1=1.0), {"N": 0.75, "interior": 0.25}, p_aligned=0.8, aligned=(0.1, 0.6, 0.1, 0.2)),
                ItemRecipe("wardrobe", _pmf(n0=0.3, n1=0.7), {"E": 0.6, "SE": 0.4}),
                ItemRecipe("bookshelf", _pmf(n0=0.5, n1=0.5), {"W": 1.0}),
                ItemRecipe("plant", _pmf(n0=0.4, n1=0.4, n2=0.2), {"interior": 1.0}, p_aligned=0.3),
            ),
            wall=(pictures,),
            ceiling=ceiling,
            small=(SmallRecipe("bookshelf", "book", (0.0, 0.2), 0.5),),
        ),
        "living_room": RoomRecipe(
            items=(
                ItemRecipe("sofa", _pmf(n1=1.0), {"S": 0.6, "interior": 0.4}, p_aligned=1.0, aligned=(0.1, 0.1, 0.1, 0.7)),
                ItemRecipe("tv_stand", _pmf(n0=0.2, n1=0.8), {"N": 1.0}),
                ItemRecipe("coffee_table", _pmf(n0=0.3, n1=0.7), {"interior": 1.0}, p_aligned=0.9, aligned=(0.4, 0.4, 0.1, 0.1)),
                ItemRecipe("armchair", _pmf(n0=0.4, n1=0.4, n2=0.2), {"interior": 1.0}, p_aligned=0.6),
                ItemRecipe("bookshelf", _pmf(n0=0.5, n1=0.5), {"W": 0.5, "E": 0.5}),
            ),
            wall=(pictures,),
            ceiling=ceiling,
        ),
        "kitchen": RoomRecipe(
            items=(
                ItemRecipe(
                    "stool",
                    _pmf(n0=0.3, n1=0.15, n2=0.15, n3=0.1, n4=0.1, ngt4=0.2),
                    {"interior": 1.0},
                    tail_rate=7.0,
                    p_aligned=0.5,
                ),
            ),
            abutments=(AbutmentRecipe("cabinet_row", ("cabinet", "fridge"), CABINET_CHAIN, _pmf(n1=0.6, n2=0.4)),),
            ceiling=ceiling,
        ),
        "dining_room": RoomRecipe(
            items=(ItemRecipe("bookshelf", _pmf(n0=0.5, n1=0.5), {"N": 1.0}),),
            motifs=(TABLE_TWO_CHAIRS,),
            wall=(pictures,),
            ceiling=ceiling,
        ),
        "office": RoomRecipe(
            items=(
                ItemRecipe("desk", _pmf(n1=1.0), {"N": 0.5, "E": 0.5}),
                ItemRecipe("office_chair", _pmf(n1=1.0), {"interior": 1.0}, p_aligned=0.5),
                ItemRecipe("bookshelf", _pmf(n0=0.4, n1=0.6), {"S": 1.0}),
            ),
            small=(SmallRecipe("desk", "laptop", (0.1, 0.2), 0.8),),
            wall=(pictures,),
            ceiling=ceiling,
        ),
        "bathroom": RoomRecipe(
            items=(
                ItemRecipe("toilet", _pmf(n1=1.0), {"NW": 0.6, "NE": 0.4}),
                ItemRecipe("bathtub", _pmf(n0=0.3, n1=0.7), {"S": 1.0}),
            ),
            wall=(WallRecipe("mirror", _pmf(n1=1.0), 1.2, 0.05),),
            ceiling=CeilingRecipe({"ceiling_lamp": 1.0}, _pmf(n1=1.0)),
        ),
        "storage": RoomRecipe(
            probes=(
                ProbeRecipe("crate", (0.6, 0.1, 0.2, 0.2), (0.05, 0.05, 0.05, 0.05)),
                ProbeRecipe("chest", (0.3, 0.3, 0.5, 0.1), (0.05, 0.05, 0.05, 0.05)),
            ),
            doors=0,
        ),
    }
    pmf = {
        "bedroom": 0.25,
        "living_room": 0.2,
        "kitchen": 0.15,
        "dining_room": 0.1,
        "office": 0.1,
        "bathroom": 0.1,
        "storage": 0.1,
    }
    return SyntheticCorpusSpec(n_rooms, pmf, default_catalog(), recipes)


def motif_spec(n_rooms: int = 200, scatter: bool = False) -> SyntheticCorpusSpec:
    """Dining rooms holding one table with two chairs, planted or scattered."""
    motif = TABLE_TWO_CHAIRS
    if scatter:
        motif = MotifRecipe("table_scatter", motif.models, (), (), motif.count, 0.05, scatter=(1.0, 3.0))
    rec = RoomRecipe(motifs=(motif,), doors=0)
    return SyntheticCorpusSpec(n_rooms, {"dining_room": 1.0}, default_catalog(), {"dining_room": rec})


def abutment_spec(n_rooms: int = 2_500, chain: Sequence[Sequence[float]] = CABINET_CHAIN) -> SyntheticCorpusSpec:
    """Kitchens holding exactly two cabinet rows on distinct walls."""
    ab = AbutmentRecipe("cabinet_row", ("cabinet", "fridge"), tuple(tuple(r) for r in chain), _pmf(n2=1.0))
    rec = RoomRecipe(abutments=(ab,), doors=0)
    return SyntheticCorpusSpec(n_rooms, {"kitchen": 1.0}, default_catalog(), {"kitchen": rec})

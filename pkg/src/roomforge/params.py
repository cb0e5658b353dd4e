"""Learned distributions and their versioned JSON document.

A *unit* is anything that is counted and placed as one piece: a singleton
CAD model (keyed by its model id), a motif (``motif:...``) or an abutment
pattern (``abut:...``).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Mapping, Sequence

from .corpus import catalog_from_doc, catalog_to_doc
from .scene import CELLS, ModelCatalog

PARAMS_FORMAT = "roomforge-params"
PARAMS_VERSION = 1

COUNT_BINS = ("0", "1", "2", "3", "4", ">4")
N_BUCKETS = 3  # class-count buckets {0, 1, >=2}
ALIGNED_YAWS = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)
START = "START"
TERMINAL = "TERMINAL"


def bucket_of(n_c: int) -> int:
    return min(int(n_c), N_BUCKETS - 1)


@dataclass(frozen=True)
class TrainConfig:
    """Thresholds used by training and mining; all lengths in meters."""

    tau_wall: float = 0.4
    eps_align_deg: float = 2.0
    d_cap: float = 1.5
    sigma_min: float = 0.01
    bucket_min_obs: int = 20
    k_max: int = 4
    n_min: int = 30
    tau_area: float = 0.25
    dpmm_alpha: float = 1.0
    dpmm_truncation: int = 20
    dpmm_max_iters: int = 200
    dpmm_tol: float = 1e-5
    dpmm_max_points: int = 1500
    gap_tol: float = 0.02
    min_overlap: float = 0.5
    small_height_tol: float = 0.05

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in doc.items() if k in known})


@dataclass(frozen=True)
class CountModel:
    """Count-bin pmf over {0,1,2,3,4,>4} with a Poisson rate for the tail bin.

    ``by_bucket[b]`` holds the pmf conditioned on the class-count bucket ``b``
    of already-sampled instances, or ``None`` when too few rooms fell into it.
    """

    pmf: tuple[float, ...]
    rate: float = 0.0
    by_bucket: tuple[tuple[float, ...] | None, ...] = (None, None, None)
    n_obs: int = 0

    @classmethod
    def point(cls, n: int = 0) -> "CountModel":
        pmf = [0.0] * 6
        pmf[min(n, 5)] = 1.0
        return cls(tuple(pmf), float(n) if n > 4 else 0.0)

    def pmf_for(self, n_c: int) -> tuple[float, ...]:
        p = self.by_bucket[bucket_of(n_c)]
        return self.pmf if p is None else p

    def is_zero(self) -> bool:
        return self.pmf[0] >= 1.0 and all(p is None or p[0] >= 1.0 for p in self.by_bucket)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(COUNT_BINS, self.pmf))


@dataclass(frozen=True)
class CellPmf:
    probs: tuple[float, ...]  # aligned with scene.CELLS

    def as_dict(self) -> dict[str, float]:
        return dict(zip(CELLS, self.probs))

    @property
    def p_edge(self) -> float:
        return 1.0 - self.probs[CELLS.index("interior")]

    @classmethod
    def point(cls, cell: str) -> "CellPmf":
        return cls(tuple(1.0 if c == cell else 0.0 for c in CELLS))


@dataclass(frozen=True)
class OrientationModel:
    p_aligned: float = 1.0
    aligned_pmf: tuple[float, ...] = (0.25, 0.25, 0.25, 0.25)
    n_obs: int = 0


@dataclass(frozen=True)
class PaddingModel:
    """Diagonal 4D Normal over (front, back, left, right) clearance.

    Draws are clamped below at ``floor`` (zero unless a clearance override
    raised it).
    """

    mean: tuple[float, float, float, float]
    var: tuple[float, float, float, float]
    floor: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    @classmethod
    def zero(cls, sigma_min: float = 0.01) -> "PaddingModel":
        return cls((0.0,) * 4, (sigma_min**2,) * 4)


@dataclass(frozen=True)
class SmallPlacement:
    model_id: str
    offset: tuple[float, float]  # (front, lateral) in the parent frame
    elevation: float  # above the parent's top surface
    rel_yaw: float


@dataclass(frozen=True)
class EmbellishmentModels:
    ceiling_pmf: dict[str, dict[str, float]] = field(default_factory=dict)  # room type -> model -> p
    wall_height: dict[str, tuple[float, float]] = field(default_factory=dict)  # model -> (mean, var)
    small_configs: dict[tuple[str, str], tuple[tuple[SmallPlacement, ...], ...]] = field(default_factory=dict)
    ceiling_height: float = 2.8


@dataclass(frozen=True)
class MotifOccurrence:
    """One corpus occurrence: members in base-object frame (base first, offset zero)."""

    models: tuple[str, ...]
    offsets: tuple[tuple[float, float], ...]
    yaws: tuple[float, ...]


@dataclass(frozen=True)
class Motif:
    motif_id: str
    classes: tuple[str, ...]
    mean: tuple[float, ...]
    var: tuple[float, ...]
    occurrences: tuple[MotifOccurrence, ...]

    @property
    def unit(self) -> str:
        return self.motif_id


@dataclass(frozen=True)
class AbutmentPattern:
    """Markov chain over CAD models with explicit START and TERMINAL states."""

    pattern_id: str
    models: tuple[str, ...]
    matrix: tuple[tuple[float, ...], ...]  # rows/cols: START, *models, TERMINAL

    @property
    def states(self) -> tuple[str, ...]:
        return (START, *self.models, TERMINAL)

    @property
    def unit(self) -> str:
        return self.pattern_id

    def row(self, state: str) -> dict[str, float]:
        i = self.states.index(state)
        return {s: p for s, p in zip(self.states, self.matrix[i]) if p > 0}


@dataclass(frozen=True)
class LearnedParams:
    catalog: ModelCatalog
    room_type_pmf: dict[str, float]
    counts: dict[tuple[str, str], CountModel]  # (unit, room type)
    cells: dict[str, CellPmf]
    orientations: dict[str, OrientationModel]
    paddings: dict[str, PaddingModel]
    embellishments: EmbellishmentModels
    motifs: dict[str, Motif]
    abutments: dict[str, AbutmentPattern]
    room_sizes: dict[str, tuple[float, float]] = field(default_factory=dict)
    config: TrainConfig = field(default_factory=TrainConfig)
    format_version: int = PARAMS_VERSION

    def unit_class(self, unit: str) -> str | None:
        if unit in self.catalog:
            return self.catalog.class_of(unit)
        return None

    def to_doc(self) -> dict:
        return params_to_doc(self)

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


# --- serialization ------------------------------------------------------------


def _pmf_doc(p: Sequence[float] | None):
    return None if p is None else list(p)


def params_to_doc(p: LearnedParams) -> dict:
    emb = p.embellishments
    return {
        "format": PARAMS_FORMAT,
        "version": p.format_version,
        "config": asdict(p.config),
        "catalog": catalog_to_doc(p.catalog),
        "room_type_pmf": dict(sorted(p.room_type_pmf.items())),
        "room_sizes": {k: list(v) for k, v in sorted(p.room_sizes.items())},
        "counts": {
            f"{u}|{rt}": {
                "pmf": list(cm.pmf),
                "rate": cm.rate,
                "by_bucket": [_pmf_doc(b) for b in cm.by_bucket],
                "n_obs": cm.n_obs,
            }
            for (u, rt), cm in sorted(p.counts.items())
        },
        "cells": {u: list(c.probs) for u, c in sorted(p.cells.items())},
        "orientations": {
            u: {"p_aligned": o.p_aligned, "aligned_pmf": list(o.aligned_pmf), "n_obs": o.n_obs}
            for u, o in sorted(p.orientations.items())
        },
        "paddings": {
            u: {"mean": list(m.mean), "var": list(m.var), "floor": list(m.floor)}
            for u, m in sorted(p.paddings.items())
        },
        "embellishments": {
            "ceiling_height": emb.ceiling_height,
            "ceiling_pmf": {rt: dict(sorted(d.items())) for rt, d in sorted(emb.ceiling_pmf.items())},
            "wall_height": {m: list(v) for m, v in sorted(emb.wall_height.items())},
            "small_configs": {
                f"{parent}|{rt}": [
                    [
                        {"model": s.model_id, "offset": list(s.offset), "elevation": s.elevation, "rel_yaw": s.rel_yaw}
                        for s in cfg
                    ]
                    for cfg in cfgs
                ]
                for (parent, rt), cfgs in sorted(emb.small_configs.items())
            },
        },
        "motifs": motifs_to_doc(p.motifs),
        "abutments": abutments_to_doc(p.abutments),
    }


def motifs_to_doc(motifs: Mapping[str, Motif]) -> dict:
    return {
        mid: {
            "classes": list(m.classes),
            "mean": list(m.mean),
            "var": list(m.var),
            "occurrences": [
                {"models": list(o.models), "offsets": [list(x) for x in o.offsets], "yaws": list(o.yaws)}
                for o in m.occurrences
            ],
        }
        for mid, m in sorted(motifs.items())
    }


def abutments_to_doc(abutments: Mapping[str, AbutmentPattern]) -> dict:
    return {aid: {"models": list(a.models), "matrix": [list(r) for r in a.matrix]} for aid, a in sorted(abutments.items())}


class ParamsError(ValueError):
    pass


def params_from_doc(doc: Mapping[str, Any]) -> LearnedParams:
    if doc.get("format") != PARAMS_FORMAT:
        raise ParamsError("not a roomforge parameter document")
    if doc.get("version") != PARAMS_VERSION:
        raise ParamsError(f"unsupported parameter format version {doc.get('version')!r}")
    catalog = catalog_from_doc(doc["catalog"])
    counts = {}
    for key, c in doc["counts"].items():
        unit, rt = key.rsplit("|", 1)
        counts[(unit, rt)] = CountModel(
            tuple(c["pmf"]),
            float(c["rate"]),
            tuple(None if b is None else tuple(b) for b in c["by_bucket"]),
            int(c.get("n_obs", 0)),
        )
    emb = doc["embellishments"]
    small = {}
    for key, cfgs in emb["small_configs"].items():
        parent, rt = key.rsplit("|", 1)
        small[(parent, rt)] = tuple(
            tuple(
                SmallPlacement(s["model"], tuple(s["offset"]), float(s["elevation"]), float(s["rel_yaw"]))
                for s in cfg
            )
            for cfg in cfgs
        )
    return LearnedParams(
        catalog=catalog,
        room_type_pmf=dict(doc["room_type_pmf"]),
        counts=counts,
        cells={u: CellPmf(tuple(v)) for u, v in doc["cells"].items()},
        orientations={
            u: OrientationModel(float(o["p_aligned"]), tuple(o["aligned_pmf"]), int(o.get("n_obs", 0)))
            for u, o in doc["orientations"].items()
        },
        paddings={
            u: PaddingModel(tuple(m["mean"]), tuple(m["var"]), tuple(m.get("floor", (0.0,) * 4)))
            for u, m in doc["paddings"].items()
        },
        embellishments=EmbellishmentModels(
            ceiling_pmf={rt: dict(d) for rt, d in emb["ceiling_pmf"].items()},
            wall_height={m: tuple(v) for m, v in emb["wall_height"].items()},
            small_configs=small,
            ceiling_height=float(emb.get("ceiling_height", 2.8)),
        ),
        motifs={
            mid: Motif(
                mid,
                tuple(m["classes"]),
                tuple(m["mean"]),
                tuple(m["var"]),
                tuple(
                    MotifOccurrence(tuple(o["models"]), tuple(tuple(x) for x in o["offsets"]), tuple(o["yaws"]))
                    for o in m["occurrences"]
                ),
            )
            for mid, m in doc["motifs"].items()
        },
        abutments={
            aid: AbutmentPattern(aid, tuple(a["models"]), tuple(tuple(r) for r in a["matrix"]))
            for aid, a in doc["abutments"].items()
        },
        room_sizes={k: tuple(v) for k, v in doc.get("room_sizes", {}).items()},
        config=TrainConfig.from_doc(doc.get("config", {})),
        format_version=int(doc["version"]),
    )


def load_params(path) -> LearnedParams:
    with open(path) as fh:
        return params_from_doc(json.load(fh))


def save_params(params: LearnedParams, path) -> None:
    with open(path, "w") as fh:
        fh.write(params.to_json())
        fh.write("\n")

"""Scene documents: canonical JSON for sampled layouts plus their provenance."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .constraints import ConstraintSpec, opening_from_doc, opening_to_doc, sample_constrained
from .params import LearnedParams
from .scene import Category, Layout, ModelCatalog, ModelRecord, PlacedInstance, RoomType

SCENE_FORMAT = "roomforge-scene"
SCENE_VERSION = 1
DIGITS = 4
TWO_PI = 2 * math.pi


class SceneError(ValueError):
    """A scene document that cannot be read back."""


@dataclass(frozen=True)
class Provenance:
    """What it takes to regenerate a layout: the parameter digest, seed and constraints."""

    params_hash: str
    seed: int
    constraints: ConstraintSpec = ConstraintSpec()

    def to_doc(self) -> dict:
        return {"params_hash": self.params_hash, "seed": self.seed, "constraints": self.constraints.to_doc()}

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Provenance":
        return cls(str(doc["params_hash"]), int(doc["seed"]), ConstraintSpec.from_doc(doc.get("constraints") or {}))


def _r(v: float) -> float:
    out = round(float(v), DIGITS)
    return 0.0 if out == 0 else out  # no negative zero


def _yaw(v: float) -> float:
    out = _r(v)
    return 0.0 if out >= round(TWO_PI, DIGITS) else out


def _rounded(doc: Any) -> Any:
    if isinstance(doc, float):
        return _r(doc)
    if isinstance(doc, dict):
        return {k: _rounded(v) for k, v in doc.items()}
    if isinstance(doc, (list, tuple)):
        return [_rounded(v) for v in doc]
    return doc


def scene_doc(layout: Layout, catalog: ModelCatalog | None = None, provenance: Provenance | None = None) -> dict:
    """Plain-data form of a layout; class and category come from ``catalog`` when given."""
    objects = []
    for inst in layout.instances:
        obj: dict[str, Any] = {
            "model": inst.model_id,
            "pos": list(inst.position),
            "yaw": _yaw(inst.yaw),
            "cell": inst.cell,
            "padding": list(inst.padding),
            "group": inst.group,
        }
        if catalog is not None and inst.model_id in catalog:
            rec = catalog[inst.model_id]
            obj["class"] = rec.cls
            obj["category"] = rec.category.value
            obj["dims"] = [rec.depth, rec.width, rec.height]
        objects.append(obj)
    doc = {
        "format": SCENE_FORMAT,
        "version": SCENE_VERSION,
        "type": layout.room_type.value,
        "polygon": [list(p) for p in layout.boundary],
        "openings": [opening_to_doc(o) for o in layout.openings],
        "objects": objects,
    }
    doc = _rounded(doc)
    # provenance stays exact so regeneration sees the very same inputs
    doc["provenance"] = provenance.to_doc() if provenance else None
    return doc


def export_scene(layout: Layout, catalog: ModelCatalog | None = None, provenance: Provenance | None = None) -> bytes:
    """Canonical bytes: sorted keys, compact separators, coordinates at 0.1 mm."""
    text = json.dumps(scene_doc(layout, catalog, provenance), sort_keys=True, separators=(",", ":"))
    return (text + "\n").encode()


def import_scene(data: bytes | str) -> tuple[Layout, Provenance | None]:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SceneError(f"parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or doc.get("format") != SCENE_FORMAT:
        raise SceneError("not a scene document")
    if doc.get("version") != SCENE_VERSION:
        raise SceneError(f"unsupported scene version {doc.get('version')!r}")
    try:
        instances = tuple(
            PlacedInstance(
                o["model"],
                tuple(o["pos"]),
                o["yaw"],
                o.get("cell"),
                tuple(o.get("padding", (0.0, 0.0, 0.0, 0.0))),
                o.get("group"),
            )
            for o in doc["objects"]
        )
        layout = Layout(
            RoomType(doc["type"]),
            tuple(tuple(p) for p in doc["polygon"]),
            instances,
            tuple(opening_from_doc(o) for o in doc.get("openings", ())),
        )
        prov = Provenance.from_doc(doc["provenance"]) if doc.get("provenance") else None
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneError(f"bad scene document: {exc}") from None
    return layout, prov


def scene_catalog(data: bytes | str) -> ModelCatalog:
    """Catalog rebuilt from the class, category and dimensions stored per object."""
    doc = json.loads(data)
    records = {}
    try:
        for o in doc["objects"]:
            if "dims" not in o:
                raise SceneError(f"object {o.get('model')!r} carries no dimensions")
            d, w, h = o["dims"]
            records[o["model"]] = ModelRecord(o["model"], o["class"], Category(o["category"]), d, w, h)
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneError(f"bad scene document: {exc}") from None
    return ModelCatalog.from_records(records.values())


def read_scene(path: str | os.PathLike) -> tuple[Layout, Provenance | None]:
    return import_scene(Path(path).read_bytes())


def write_scene(data: bytes, path: str | os.PathLike) -> None:
    Path(path).write_bytes(data)


def generate(params: LearnedParams, seed: int, spec: ConstraintSpec | None = None,
             max_attempts: int | None = None, threads: int = 1) -> tuple[Layout, Provenance]:
    """Sample one layout and the provenance record that reproduces it."""
    spec = spec or ConstraintSpec()
    kwargs = {"max_attempts": max_attempts} if max_attempts else {}
    result = sample_constrained(params, spec, seed, threads=threads, **kwargs)
    return result.layout, Provenance(params.digest(), seed, spec)


def regenerate(params: LearnedParams, provenance: Provenance, max_attempts: int | None = None) -> Layout:
    """Re-run the sampler from a provenance record; the digest must match ``params``."""
    if params.digest() != provenance.params_hash:
        raise SceneError("parameter digest does not match the provenance record")
    layout, _ = generate(params, provenance.seed, provenance.constraints, max_attempts)
    return layout

"""Training-corpus and model-catalog documents: load, validate, save."""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .geometry import is_rectilinear, is_simple
from .scene import Layout, ModelCatalog, Opening, PlacedInstance, RoomType

log = logging.getLogger(__name__)

CORPUS_FORMAT = "roomforge-corpus"
CATALOG_FORMAT = "roomforge-catalog"
FORMAT_VERSION = 1


class CorpusError(ValueError):
    """A corpus or catalog document failed to parse or validate."""


@dataclass(frozen=True)
class TrainingCorpus:
    rooms: tuple[Layout, ...]
    catalog: ModelCatalog
    dropped_unlabeled: int = 0
    catalog_ref: str | None = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.rooms)


# --- catalog ----------------------------------------------------------------


def catalog_to_doc(catalog: ModelCatalog) -> dict:
    return {"format": CATALOG_FORMAT, "version": FORMAT_VERSION, "models": catalog.to_records()}


def catalog_from_doc(doc: Any, where: str = "catalog") -> ModelCatalog:
    if not isinstance(doc, Mapping) or not isinstance(doc.get("models"), list):
        raise CorpusError(f"{where}: expected an object with a 'models' list")
    try:
        return ModelCatalog.from_dicts(doc["models"])
    except (KeyError, ValueError, TypeError) as exc:
        raise CorpusError(f"{where}: invalid model record: {exc}") from exc


def load_catalog(path: str | os.PathLike) -> ModelCatalog:
    return catalog_from_doc(_read_json(path), str(path))


def save_catalog(catalog: ModelCatalog, path: str | os.PathLike) -> None:
    _write_json(catalog_to_doc(catalog), path)


# --- rooms --------------------------------------------------------------------


def room_to_doc(room: Layout) -> dict:
    return {
        "type": room.room_type.value,
        "polygon": [[x, z] for x, z in room.boundary],
        "openings": [
            {"kind": o.kind, "wall": o.wall, "offset": o.offset, "width": o.width, "sill": o.sill, "height": o.height}
            for o in room.openings
        ],
        "objects": [
            {"model": i.model_id, "pos": list(i.position), "yaw": i.yaw} for i in room.instances
        ],
    }


def _room_from_doc(doc: Any, catalog: ModelCatalog, where: str) -> Layout | None:
    if not isinstance(doc, Mapping):
        raise CorpusError(f"{where}: expected an object")
    rtype = doc.get("type")
    if rtype in (None, ""):
        return None
    try:
        room_type = RoomType(rtype)
    except ValueError:
        raise CorpusError(f"{where}.type: unknown room type {rtype!r}") from None
    try:
        poly = tuple((float(p[0]), float(p[1])) for p in doc["polygon"])
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise CorpusError(f"{where}.polygon: malformed ({exc})") from None
    if not is_rectilinear(poly):
        raise CorpusError(f"{where}.polygon: boundary is not axis-aligned")
    if not is_simple(poly):
        raise CorpusError(f"{where}.polygon: boundary is not a simple polygon")
    openings = []
    for j, o in enumerate(doc.get("openings", [])):
        try:
            op = Opening(
                kind=o["kind"], wall=int(o["wall"]), offset=float(o["offset"]), width=float(o["width"]),
                sill=float(o.get("sill", 0.0)), height=float(o.get("height", 2.1)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusError(f"{where}.openings[{j}]: {exc}") from None
        if not 0 <= op.wall < len(poly):
            raise CorpusError(f"{where}.openings[{j}].wall: index {op.wall} out of range")
        openings.append(op)
    instances = []
    for j, obj in enumerate(doc.get("objects", [])):
        w = f"{where}.objects[{j}]"
        try:
            model = str(obj["model"])
            pos = tuple(float(v) for v in obj["pos"])
            yaw = float(obj.get("yaw", 0.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusError(f"{w}: malformed ({exc})") from None
        if model not in catalog:
            raise CorpusError(f"{w}.model: unknown model id {model!r}")
        if len(pos) != 3 or not all(math.isfinite(v) for v in pos) or not math.isfinite(yaw):
            raise CorpusError(f"{w}.pos: need three finite coordinates")
        instances.append(PlacedInstance(model, pos, yaw))
    return Layout(room_type, poly, tuple(instances), tuple(openings))


# --- corpus -------------------------------------------------------------------


def corpus_to_doc(corpus: TrainingCorpus, embed_catalog: bool = True) -> dict:
    doc: dict[str, Any] = {"format": CORPUS_FORMAT, "version": FORMAT_VERSION}
    if embed_catalog or corpus.catalog_ref is None:
        doc["catalog"] = catalog_to_doc(corpus.catalog)
    else:
        doc["catalog_path"] = corpus.catalog_ref
    doc["rooms"] = [room_to_doc(r) for r in corpus.rooms]
    return doc


def corpus_from_doc(doc: Any, base_dir: str | os.PathLike | None = None, catalog: ModelCatalog | None = None) -> TrainingCorpus:
    if not isinstance(doc, Mapping):
        raise CorpusError("corpus: expected a JSON object at top level")
    ref = None
    if catalog is None:
        if "catalog" in doc:
            catalog = catalog_from_doc(doc["catalog"])
        elif "catalog_path" in doc:
            ref = str(doc["catalog_path"])
            cpath = Path(base_dir or ".") / ref
            catalog = load_catalog(cpath)
        else:
            raise CorpusError("corpus: missing 'catalog' or 'catalog_path'")
    room_docs: list[tuple[str, Any]] = []
    if "houses" in doc:
        for h, house in enumerate(doc["houses"]):
            for r, room in enumerate(house.get("rooms", [])):
                room_docs.append((f"houses[{h}].rooms[{r}]", room))
    else:
        rooms = doc.get("rooms")
        if not isinstance(rooms, list):
            raise CorpusError("corpus: 'rooms' must be a list")
        room_docs = [(f"rooms[{r}]", room) for r, room in enumerate(rooms)]
    out, dropped = [], 0
    for where, rdoc in room_docs:
        room = _room_from_doc(rdoc, catalog, where)
        if room is None:
            dropped += 1
        else:
            out.append(room)
    if dropped:
        log.warning("dropped %d unlabeled room(s)", dropped)
    return TrainingCorpus(tuple(out), catalog, dropped, ref)


def load_corpus(path: str | os.PathLike) -> TrainingCorpus:
    """Load and validate a corpus document; unlabeled rooms are dropped and counted."""
    return corpus_from_doc(_read_json(path), Path(path).parent)


def save_corpus(corpus: TrainingCorpus, path: str | os.PathLike) -> None:
    _write_json(corpus_to_doc(corpus), path)


def _read_json(path: str | os.PathLike) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CorpusError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _write_json(doc: Any, path: str | os.PathLike) -> None:
    try:
        with open(path, "w") as fh:
            json.dump(doc, fh, separators=(",", ":"))
            fh.write("\n")
    except OSError as exc:
        raise CorpusError(f"{path}: cannot write ({exc.strerror})") from exc

"""Core domain types: model catalog, room types, placed instances and layouts.

Coordinates live in a right-handed frame with ``y`` up.  Layouts are reasoned
about in the floor plane ``(x, z)`` where ``x`` grows east and ``z`` grows
south, so the north wall of an axis-aligned room sits at its minimum ``z``.
All lengths are meters and all angles radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator, Mapping

TWO_PI = 2.0 * math.pi


class RoomType(str, Enum):
    BEDROOM = "bedroom"
    LIVING_ROOM = "living_room"
    KITCHEN = "kitchen"
    BATHROOM = "bathroom"
    OFFICE = "office"
    DINING_ROOM = "dining_room"
    HALLWAY = "hallway"
    STORAGE = "storage"
    OTHER = "other"


class Category(str, Enum):
    FURNITURE = "furniture"
    SMALL_OBJECT = "small-object"
    WALL_OBJECT = "wall-object"
    CEILING_OBJECT = "ceiling-object"


# Cell ids in clockwise order starting at the north-west corner.
CELLS: tuple[str, ...] = ("NW", "N", "NE", "E", "SE", "S", "SW", "W", "interior")
CORNER_CELLS = frozenset({"NW", "NE", "SE", "SW"})
EDGE_CELLS = frozenset({"N", "E", "S", "W"})
PADDING_SIDES: tuple[str, ...] = ("front", "back", "left", "right")


class UnknownModelError(KeyError):
    """Raised when a model id cannot be resolved in a catalog."""


def normalize_yaw(yaw: float) -> float:
    """Map an angle into ``[0, 2*pi)``."""
    y = math.fmod(yaw, TWO_PI)
    if y < 0.0:
        y += TWO_PI
    # fmod can hand back exactly 2*pi after the correction above
    if y >= TWO_PI:
        y = 0.0
    return y


@dataclass(frozen=True)
class ModelRecord:
    model_id: str
    cls: str
    category: Category
    depth: float
    width: float
    height: float

    def __post_init__(self) -> None:
        if not (self.depth > 0 and self.width > 0 and self.height > 0):
            raise ValueError(f"model {self.model_id!r}: footprint dims must be > 0")
        if not isinstance(self.category, Category):
            object.__setattr__(self, "category", Category(self.category))


@dataclass(frozen=True)
class ModelCatalog:
    """Vocabulary of placeable CAD models keyed by model id."""

    entries: Mapping[str, ModelRecord]

    @classmethod
    def from_records(cls, records: Iterable[ModelRecord]) -> "ModelCatalog":
        entries: dict[str, ModelRecord] = {}
        for rec in records:
            if rec.model_id in entries:
                raise ValueError(f"duplicate model id {rec.model_id!r}")
            entries[rec.model_id] = rec
        return cls(dict(sorted(entries.items())))

    def __getitem__(self, model_id: str) -> ModelRecord:
        try:
            return self.entries[model_id]
        except KeyError:
            raise UnknownModelError(f"unknown model id {model_id!r}") from None

    def __contains__(self, model_id: object) -> bool:
        return model_id in self.entries

    def __iter__(self) -> Iterator[str]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def class_of(self, model_id: str) -> str:
        return self[model_id].cls

    def category_of(self, model_id: str) -> Category:
        return self[model_id].category

    def models_in(self, category: Category) -> list[str]:
        return [m for m, r in self.entries.items() if r.category == category]

    def models_of_class(self, cls: str) -> list[str]:
        return [m for m, r in self.entries.items() if r.cls == cls]

    def classes(self) -> list[str]:
        return sorted({r.cls for r in self.entries.values()})

    def to_records(self) -> list[dict]:
        return [
            {
                "model_id": r.model_id,
                "class": r.cls,
                "category": r.category.value,
                "depth_m": r.depth,
                "width_m": r.width,
                "height_m": r.height,
            }
            for r in self.entries.values()
        ]

    @classmethod
    def from_dicts(cls, rows: Iterable[Mapping]) -> "ModelCatalog":
        return cls.from_records(
            ModelRecord(
                model_id=str(row["model_id"]),
                cls=str(row["class"]),
                category=Category(row["category"]),
                depth=float(row["depth_m"]),
                width=float(row["width_m"]),
                height=float(row["height_m"]),
            )
            for row in rows
        )


@dataclass(frozen=True)
class PlacedInstance:
    """A model placed in a room.

    ``position`` is the footprint center; ``position[1]`` is the elevation of
    the object's base above the floor.  ``padding`` records the clearance
    (front, back, left, right) the placement engine reserved around the
    footprint, and ``group`` names the motif or abutment the instance was
    realized from, if any.
    """

    model_id: str
    position: tuple[float, float, float]
    yaw: float
    cell: str | None = None
    padding: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    group: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "yaw", normalize_yaw(float(self.yaw)))
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "padding", tuple(float(v) for v in self.padding))
        if self.cell is not None and self.cell not in CELLS:
            raise ValueError(f"invalid cell id {self.cell!r}")

    @property
    def x(self) -> float:
        return self.position[0]

    @property
    def z(self) -> float:
        return self.position[2]


@dataclass(frozen=True)
class Opening:
    """A door or window cut into boundary edge ``wall``.

    ``offset`` is the distance from the edge's start vertex to the opening
    center, measured along the edge.
    """

    kind: str
    wall: int
    offset: float
    width: float
    sill: float = 0.0
    height: float = 2.1

    def __post_init__(self) -> None:
        if self.kind not in ("door", "window"):
            raise ValueError(f"opening kind must be door or window, got {self.kind!r}")
        if self.width <= 0:
            raise ValueError("opening width must be > 0")


Point = tuple[float, float]


@dataclass(frozen=True)
class Layout:
    room_type: RoomType
    boundary: tuple[Point, ...]
    instances: tuple[PlacedInstance, ...] = ()
    openings: tuple[Opening, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "room_type", RoomType(self.room_type))
        object.__setattr__(
            self, "boundary", tuple((float(x), float(z)) for x, z in self.boundary)
        )
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "openings", tuple(self.openings))

    def with_instances(self, extra: Iterable[PlacedInstance]) -> "Layout":
        return replace(self, instances=self.instances + tuple(extra))

    def bbox(self) -> tuple[float, float, float, float]:
        xs = [p[0] for p in self.boundary]
        zs = [p[1] for p in self.boundary]
        return min(xs), min(zs), max(xs), max(zs)

    def size(self) -> tuple[float, float]:
        x0, z0, x1, z1 = self.bbox()
        return x1 - x0, z1 - z0


def rect_boundary(width: float, depth: float, x0: float = 0.0, z0: float = 0.0) -> tuple[Point, ...]:
    """Axis-aligned room outline starting at the NW corner, edges N, E, S, W."""
    return (
        (x0, z0),
        (x0 + width, z0),
        (x0 + width, z0 + depth),
        (x0, z0 + depth),
    )


@dataclass
class Room:
    """A training room: typed boundary plus instances (mutable builder form)."""

    room_type: RoomType | None
    boundary: tuple[Point, ...]
    instances: list[PlacedInstance] = field(default_factory=list)
    openings: list[Opening] = field(default_factory=list)

    def as_layout(self) -> Layout:
        if self.room_type is None:
            raise ValueError("room has no type label")
        return Layout(self.room_type, self.boundary, tuple(self.instances), tuple(self.openings))

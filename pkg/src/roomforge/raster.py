"""Floor-plane occupancy rasters, morphological erosion and traversability."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .geometry import OrientedRect, apron_rect, footprint
from .scene import Category, Layout, ModelCatalog, Point

DEFAULT_RESOLUTION = 0.05
R_PASS = 0.25
R_ACCESS = 0.35
FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class OccupancyGrid:
    """Boolean raster over the floor; ``cells[i, j]`` covers row ``i`` (z) and column ``j`` (x)."""

    resolution: float
    origin: Point
    cells: np.ndarray

    def __post_init__(self) -> None:
        if self.resolution <= 0:
            raise ValueError("resolution must be > 0")

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        nz, nx = self.cells.shape
        xs = self.origin[0] + (np.arange(nx) + 0.5) * self.resolution
        zs = self.origin[1] + (np.arange(nz) + 0.5) * self.resolution
        return np.meshgrid(xs, zs)

    def with_cells(self, cells: np.ndarray) -> "OccupancyGrid":
        return OccupancyGrid(self.resolution, self.origin, cells)


def grid_for(boundary: Sequence[Point], resolution: float = DEFAULT_RESOLUTION) -> OccupancyGrid:
    xs = [p[0] for p in boundary]
    zs = [p[1] for p in boundary]
    nx = max(1, int(math.ceil((max(xs) - min(xs)) / resolution - 1e-9)))
    nz = max(1, int(math.ceil((max(zs) - min(zs)) / resolution - 1e-9)))
    return OccupancyGrid(resolution, (min(xs), min(zs)), np.zeros((nz, nx), dtype=bool))


def polygon_mask(grid: OccupancyGrid, polygon: Sequence[Point]) -> np.ndarray:
    """Cells whose centers fall inside ``polygon`` (even-odd rule)."""
    X, Z = grid.centers()
    inside = np.zeros(X.shape, dtype=bool)
    n = len(polygon)
    for i in range(n):
        x0, z0 = polygon[i]
        x1, z1 = polygon[(i + 1) % n]
        if z0 == z1:
            continue
        crosses = (z0 > Z) != (z1 > Z)
        xi = x0 + (Z - z0) * (x1 - x0) / (z1 - z0)
        inside ^= crosses & (X < xi)
    return inside


def rect_mask(grid: OccupancyGrid, rect: OrientedRect) -> np.ndarray:
    X, Z = grid.centers()
    (ax, az), (bx, bz) = rect.axes
    dx, dz = X - rect.cx, Z - rect.cz
    return (np.abs(dx * ax + dz * az) < rect.hx) & (np.abs(dx * bx + dz * bz) < rect.hz)


def free_space(layout: Layout, catalog: ModelCatalog, resolution: float = DEFAULT_RESOLUTION) -> OccupancyGrid:
    """Cells inside the room not covered by any furniture footprint."""
    grid = grid_for(layout.boundary, resolution)
    free = polygon_mask(grid, layout.boundary)
    for inst in layout.instances:
        if catalog.category_of(inst.model_id) == Category.FURNITURE:
            free &= ~rect_mask(grid, footprint(inst, catalog))
    return grid.with_cells(free)


def disk(radius: float, resolution: float) -> np.ndarray:
    r = int(math.floor(radius / resolution + 1e-9))
    i, j = np.mgrid[-r:r + 1, -r:r + 1]
    return (i * i + j * j) * resolution**2 <= radius**2 + 1e-12


def erode(grid: OccupancyGrid, radius: float) -> OccupancyGrid:
    """Keep a cell iff every cell of the disk around it is set; off-grid counts as unset."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    k = disk(radius, grid.resolution)
    if k.shape == (1, 1):
        return grid.with_cells(grid.cells.copy())
    return grid.with_cells(ndimage.binary_erosion(grid.cells, structure=k, border_value=0))


def door_cells(layout: Layout, grid: OccupancyGrid, depth: float) -> list[np.ndarray]:
    """Per door: the free cells of an apron ``depth`` deep on the room side."""
    out = []
    for op in layout.openings:
        if op.kind != "door":
            continue
        apron = apron_rect(layout.boundary, op.wall, op.offset, op.width, depth)
        out.append(rect_mask(grid, apron) & grid.cells)
    return out


def check_traversability(
    layout: Layout,
    catalog: ModelCatalog,
    resolution: float = DEFAULT_RESOLUTION,
    r_pass: float = R_PASS,
    r_access: float = R_ACCESS,
) -> bool:
    """Every accessible cell and every door must share one passable component."""
    free = free_space(layout, catalog, resolution)
    passable = erode(free, r_pass).cells
    access = erode(free, r_access).cells
    doors = door_cells(layout, free, 2 * r_pass)
    if any(not d.any() for d in doors):
        return False
    union = passable | access
    for d in doors:
        union |= d
    need = access.copy()
    for d in doors:
        need |= d
    if not need.any():
        return True
    labels, _ = ndimage.label(union, structure=FOUR_CONNECTED)
    ids = np.unique(labels[need])
    return len(ids) == 1 and ids[0] != 0

"""2D occupancy grids: rasterization, obstacle inflation, coordinate mapping.

Cells are addressed as ``(i, j)`` with ``i`` along world x and ``j`` along
world y. ``walkable[i, j]`` is True for traversable cells. Cell ``(0, 0)`` is
centered on ``origin``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy import ndimage

from .errors import InvalidInput, OutOfRange

Cell = tuple[int, int]

# 8-connected moves, consumed by the planner
NEIGHBORS: tuple[Cell, ...] = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)


@dataclass(frozen=True)
class OccupancyGrid:
    walkable: np.ndarray
    resolution: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        w = np.asarray(self.walkable, dtype=bool)
        if w.ndim != 2 or w.shape[0] == 0 or w.shape[1] == 0:
            raise InvalidInput(f"walkable must be a non-empty 2D array, got shape {w.shape}")
        if not self.resolution > 0:
            raise InvalidInput("resolution must be positive")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "walkable", w)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def width(self) -> int:
        return self.walkable.shape[0]

    @property
    def height(self) -> int:
        return self.walkable.shape[1]

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def is_walkable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and bool(self.walkable[cell[0], cell[1]])

    def cell_centers(self) -> np.ndarray:
        """World coordinates of every cell center, shape (width, height, 2)."""
        ii, jj = np.meshgrid(np.arange(self.width), np.arange(self.height), indexing="ij")
        return np.stack(
            [self.origin[0] + ii * self.resolution, self.origin[1] + jj * self.resolution], axis=-1
        )

    def with_walkable(self, walkable: np.ndarray) -> "OccupancyGrid":
        return OccupancyGrid(walkable, self.resolution, self.origin)


@dataclass(frozen=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def contains(self, pts: np.ndarray) -> np.ndarray:
        x, y = pts[..., 0], pts[..., 1]
        return (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    radius: float

    def contains(self, pts: np.ndarray) -> np.ndarray:
        dx = pts[..., 0] - self.cx
        dy = pts[..., 1] - self.cy
        return dx * dx + dy * dy <= self.radius * self.radius


Footprint = Union[Rect, Circle]


@dataclass(frozen=True)
class GridPath:
    cells: tuple[Cell, ...]

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple((int(c[0]), int(c[1])) for c in self.cells))
        if not self.cells:
            raise InvalidInput("a path needs at least one cell")

    def step_counts(self) -> tuple[int, int]:
        """Number of (axis, diagonal) steps."""
        axis = diag = 0
        for a, b in zip(self.cells, self.cells[1:]):
            di, dj = abs(b[0] - a[0]), abs(b[1] - a[1])
            if max(di, dj) != 1:
                raise InvalidInput(f"cells {a} and {b} are not 8-neighbors")
            if di and dj:
                diag += 1
            else:
                axis += 1
        return axis, diag

    @property
    def length(self) -> float:
        axis, diag = self.step_counts()
        return axis + diag * math.sqrt(2.0)

    def __len__(self):
        return len(self.cells)

    def is_valid_on(self, grid: OccupancyGrid) -> bool:
        try:
            self.step_counts()
        except InvalidInput:
            return False
        return all(grid.is_walkable(c) for c in self.cells)


def rasterize_scene(
    footprints: Sequence[Footprint],
    bounds: Sequence[float],
    resolution: float,
) -> OccupancyGrid:
    """Mark a cell blocked iff its center lies inside any footprint."""
    xmin, ymin, xmax, ymax = map(float, bounds)
    if not resolution > 0:
        raise InvalidInput("resolution must be positive")
    if not (xmax > xmin and ymax > ymin):
        raise InvalidInput(f"degenerate bounds {bounds}")
    width = max(1, int(math.ceil((xmax - xmin) / resolution - 1e-9)))
    height = max(1, int(math.ceil((ymax - ymin) / resolution - 1e-9)))
    origin = (xmin + 0.5 * resolution, ymin + 0.5 * resolution)
    grid = OccupancyGrid(np.ones((width, height), dtype=bool), resolution, origin)
    centers = grid.cell_centers()
    blocked = np.zeros((width, height), dtype=bool)
    for fp in footprints:
        blocked |= fp.contains(centers)
    return grid.with_walkable(~blocked)


def inflate_obstacles(grid: OccupancyGrid, margin: float) -> OccupancyGrid:
    """Block every cell whose center is within ``margin`` meters of a blocked cell center."""
    if margin < 0:
        raise InvalidInput("margin must be non-negative")
    blocked = ~grid.walkable
    if margin == 0 or not blocked.any():
        return grid
    # exact squared EDT in cell units; compared squared to dodge sqrt rounding
    _, idx = ndimage.distance_transform_edt(grid.walkable, return_indices=True)
    ii, jj = np.indices(blocked.shape)
    d2 = (ii - idx[0]) ** 2 + (jj - idx[1]) ** 2
    limit = (margin / grid.resolution) ** 2
    inflated = blocked | (d2 <= limit * (1 + 1e-12))
    return grid.with_walkable(~inflated)


def cell_to_world(grid: OccupancyGrid, cell: Cell) -> tuple[float, float]:
    return (grid.origin[0] + cell[0] * grid.resolution, grid.origin[1] + cell[1] * grid.resolution)


def world_to_cell(grid: OccupancyGrid, point: Sequence[float]) -> Cell:
    """Nearest cell center. Raises OutOfRange outside the grid footprint."""
    fi = (float(point[0]) - grid.origin[0]) / grid.resolution
    fj = (float(point[1]) - grid.origin[1]) / grid.resolution
    i = int(math.floor(fi + 0.5))
    j = int(math.floor(fj + 0.5))
    if not grid.in_bounds((i, j)):
        raise OutOfRange(f"point {tuple(point)} lies outside the grid")
    return i, j


def resample_polyline(points: np.ndarray, n_frames: int) -> np.ndarray:
    """Resample a polyline to ``n_frames`` points spaced uniformly in arc length."""
    pts = np.asarray(points, dtype=float)
    if n_frames < 2:
        raise InvalidInput("need at least 2 output frames")
    if pts.ndim != 2 or len(pts) < 2:
        raise InvalidInput("need a polyline of at least 2 points")
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return np.repeat(pts[:1], n_frames, axis=0)
    targets = np.linspace(0.0, s[-1], n_frames)
    out = np.stack([np.interp(targets, s, pts[:, k]) for k in range(pts.shape[1])], axis=1)
    out[0], out[-1] = pts[0], pts[-1]
    return out


def grid_to_pgm(grid: OccupancyGrid) -> str:
    """Plain-text raster, one line per y row from top (max y) down; 1 = walkable."""
    lines = [f"P2 {grid.width} {grid.height} 1"]
    for j in range(grid.height - 1, -1, -1):
        lines.append(" ".join("1" if grid.walkable[i, j] else "0" for i in range(grid.width)))
    return "\n".join(lines) + "\n"

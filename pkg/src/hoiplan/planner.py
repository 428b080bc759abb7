"""A* on an 8-connected occupancy grid with an optional additive risk cost.

Path cost is ``sum_t |x_t - x_{t-1}| + lambda_r * R(x_t)`` over visited cells
(the start cell carries no risk term).
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInput
from .scene_grid import NEIGHBORS, Cell, GridPath, OccupancyGrid

SQRT2 = math.sqrt(2.0)
DEFAULT_LAMBDA_R = 4.0


@dataclass(frozen=True)
class PlanCost:
    step_length: float
    risk_term: float
    lambda_r: float

    @property
    def total(self) -> float:
        return self.step_length + self.lambda_r * self.risk_term


def _risk_values(risk) -> Optional[np.ndarray]:
    if risk is None:
        return None
    values = getattr(risk, "values", risk)
    return np.asarray(values, dtype=float)


def path_cost(path: GridPath, risk=None, lambda_r: float = DEFAULT_LAMBDA_R) -> PlanCost:
    """Evaluate the risk-augmented cost of ``path``.

    Lengths are summed as ``axis + diag * sqrt(2)`` and risks with ``math.fsum``
    so the result does not depend on traversal order.
    """
    values = _risk_values(risk)
    length = path.length
    if values is None or len(path.cells) < 2:
        r = 0.0
    else:
        r = math.fsum(float(values[c]) for c in path.cells[1:])
    return PlanCost(length, r, float(lambda_r))


def _euclid(a: Cell, b: Cell) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def astar(
    grid: OccupancyGrid,
    start: Cell,
    goal: Cell,
    risk=None,
    lambda_r: float = DEFAULT_LAMBDA_R,
) -> Optional[GridPath]:
    """Minimum-cost 8-connected path, or ``None`` when the goal is unreachable.

    Ties on f are broken by smaller h, then by the lexicographically smaller cell.
    """
    start = (int(start[0]), int(start[1]))
    goal = (int(goal[0]), int(goal[1]))
    for name, c in (("start", start), ("goal", goal)):
        if not grid.is_walkable(c):
            raise InvalidInput(f"{name} cell {c} is not walkable")
    if lambda_r < 0:
        raise InvalidInput("lambda_r must be non-negative")
    values = _risk_values(risk)
    if values is not None:
        if values.shape != grid.walkable.shape:
            raise InvalidInput("risk map shape does not match grid")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InvalidInput("risk values must be finite and non-negative")
        step_risk = lambda_r * values
    else:
        step_risk = None

    walkable = grid.walkable
    w, h = walkable.shape
    g_best = {start: 0.0}
    parent: dict[Cell, Cell] = {}
    h0 = _euclid(start, goal)
    heap = [(h0, h0, start, 0.0)]
    while heap:
        f, hc, cell, g = heapq.heappop(heap)
        if g > g_best.get(cell, math.inf):
            continue
        if cell == goal:
            break
        ci, cj = cell
        for di, dj in NEIGHBORS:
            ni, nj = ci + di, cj + dj
            if not (0 <= ni < w and 0 <= nj < h) or not walkable[ni, nj]:
                continue
            step = SQRT2 if di and dj else 1.0
            ng = g + step
            if step_risk is not None:
                ng += step_risk[ni, nj]
            nxt = (ni, nj)
            if ng < g_best.get(nxt, math.inf):
                g_best[nxt] = ng
                parent[nxt] = cell
                hn = _euclid(nxt, goal)
                heapq.heappush(heap, (ng + hn, hn, nxt, ng))
    else:
        return None

    cells = [goal]
    while cells[-1] != start:
        cells.append(parent[cells[-1]])
    return GridPath(tuple(reversed(cells)))

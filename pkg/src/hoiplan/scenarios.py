"""Scripted single-obstacle scenarios (head-on, crossing, corridor).

Scenarios are plain dicts in the scenario-file layout so the same objects feed
the CLI, the tests and the demo scripts.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynaplan import (
    ConstantVelocityPredictor,
    DynaPlanParams,
    OraclePredictor,
    SimulationTimeline,
    obstacle_track_from_waypoints,
    run_dynaplan,
)
from .errors import InvalidInput
from .io import dataclass_from_dict, load_json, scene_from_dict
from .scene_grid import Cell, OccupancyGrid, world_to_cell

PREDICTORS = ("oracle", "constant_velocity")


@dataclass
class Scenario:
    name: str
    grid: OccupancyGrid
    start: Cell
    goal: Cell
    track: Optional[np.ndarray]
    params: DynaPlanParams
    predictor: str = "oracle"

    def make_predictor(self):
        if self.track is None:
            return None
        if self.predictor == "oracle":
            return OraclePredictor(self.track)
        return ConstantVelocityPredictor()

    def run(self) -> SimulationTimeline:
        return run_dynaplan(self.grid, self.start, self.goal, self.track, self.params, self.make_predictor())


def scenario_from_dict(d: dict, base_dir=None) -> Scenario:
    unknown = sorted(set(d) - {"name", "scene", "agent", "obstacle", "params", "predictor"})
    if unknown:
        raise InvalidInput(f"scenario: unknown keys {unknown}")
    scene = d.get("scene")
    if isinstance(scene, str):
        from pathlib import Path

        path = Path(scene) if base_dir is None else Path(base_dir) / scene
        scene = load_json(path)
    if not isinstance(scene, dict):
        raise InvalidInput("scenario: 'scene' must be an object or a path")
    grid = scene_from_dict(scene)
    try:
        start = world_to_cell(grid, d["agent"]["start"])
        goal = world_to_cell(grid, d["agent"]["goal"])
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"scenario: bad agent block ({exc})") from exc
    params = dataclass_from_dict(DynaPlanParams, d.get("params", {}), "scenario params")
    predictor = d.get("predictor", "oracle")
    if predictor not in PREDICTORS:
        raise InvalidInput(f"scenario: predictor must be one of {PREDICTORS}")
    track = None
    obs = d.get("obstacle")
    if obs:
        if "positions" in obs:
            track = np.asarray([world_to_cell(grid, p) for p in obs["positions"]], dtype=float)
        elif "waypoints" in obs:
            wps = [world_to_cell(grid, p) for p in obs["waypoints"]]
            track = obstacle_track_from_waypoints(grid, wps)
        else:
            raise InvalidInput("scenario: obstacle needs 'waypoints' or 'positions'")
    return Scenario(d.get("name", "scenario"), grid, start, goal, track, params, predictor)


def load_scenario(path) -> Scenario:
    from pathlib import Path

    return scenario_from_dict(load_json(path), Path(path).parent)


# --- builders -------------------------------------------------------------

RES = 0.5


def _c(i: float, j: float) -> list[float]:
    """World coordinates of cell (i, j) for scenes anchored at (0, 0) with RES."""
    return [0.25 + RES * i, 0.25 + RES * j]


def corridor_scene(height: int = 19, width: int = 27, wall: tuple[int, int] = (12, 15)) -> dict:
    """Room split by a thick wall with a one-cell passage on the middle row and
    an opening along the top row (the detour)."""
    mid = height // 2
    x0, x1 = RES * wall[0], RES * wall[1]
    return {
        "bounds": [0.0, 0.0, RES * width, RES * height],
        "resolution": RES,
        "footprints": [
            {"type": "rect", "min": [x0, 0.0], "max": [x1, RES * mid]},
            {"type": "rect", "min": [x0, RES * (mid + 1)], "max": [x1, RES * (height - 1)]},
        ],
    }


def corridor_scenario(obstacle_rise: int = 8, agent_x: int = 7, predictor: str = "oracle") -> dict:
    """The obstacle sweeps down the column two cells past the passage exit,
    crossing the agent's row right as the agent would emerge."""
    height, width = 19, 27
    mid = height // 2
    col = 16
    return {
        "name": f"corridor-rise{obstacle_rise}-x{agent_x}",
        "scene": corridor_scene(height, width),
        "agent": {"start": _c(agent_x, mid), "goal": _c(width - 5, mid)},
        "obstacle": {"waypoints": [_c(col, mid + obstacle_rise), _c(col, 0)]},
        "params": {},
        "predictor": predictor,
    }


def open_floor_scene(width: int = 32, height: int = 17, furniture: bool = False) -> dict:
    fps = []
    if furniture:
        fps = [
            {"type": "circle", "center": _c(6, 3), "radius": 0.6},
            {"type": "rect", "min": _c(24, 12), "max": _c(27, 14)},
        ]
    return {"bounds": [0.0, 0.0, RES * width, RES * height], "resolution": RES, "footprints": fps}


def head_on_scenario(lateral: int = 0, lead: int = 0, furniture: bool = False, predictor: str = "oracle") -> dict:
    """Agent and obstacle on (nearly) the same row, moving toward each other."""
    width, height = 32, 17
    row = height // 2
    return {
        "name": f"head-on-l{lateral}-d{lead}{'-f' if furniture else ''}",
        "scene": open_floor_scene(width, height, furniture),
        "agent": {"start": _c(3, row), "goal": _c(width - 4, row)},
        "obstacle": {"waypoints": [_c(width - 3 - lead, row + lateral), _c(1, row + lateral)]},
        "params": {},
        "predictor": predictor,
    }


def crossing_scenario(column: int = 14, rise: int = 6, downward: bool = True, predictor: str = "oracle") -> dict:
    """Obstacle crosses the agent's row perpendicularly."""
    width, height = 32, 17
    row = height // 2
    top, bottom = row + rise, 0
    if top > height - 1:
        top = height - 1
    wps = [_c(column, top), _c(column, bottom)] if downward else [_c(column, row - rise), _c(column, height - 1)]
    return {
        "name": f"crossing-c{column}-r{rise}-{'down' if downward else 'up'}",
        "scene": open_floor_scene(width, height),
        "agent": {"start": _c(3, row), "goal": _c(width - 4, row)},
        "obstacle": {"waypoints": wps},
        "params": {},
        "predictor": predictor,
    }


def scenario_suite(predictor: str = "oracle") -> list[dict]:
    """Fifty scripted scenarios: 20 head-on, 20 crossing, 10 corridor.

    Crossing columns and corridor start cells are chosen so the obstacle reaches
    the agent's row within a couple of ticks of the agent itself.
    """
    out = []
    for lateral in (-1, 0, 1, 2):
        for lead in (0, 3, 6, 9, 12):
            out.append(head_on_scenario(lateral, lead, furniture=(lead % 2 == 1), predictor=predictor))
    for rise, downward in ((4, True), (7, True), (4, False), (7, False)):
        for delta in (-2, -1, 0, 1, 2):
            out.append(crossing_scenario(3 + rise + delta, rise, downward, predictor))
    for rise, agent_x in ((7, 7), (7, 8), (8, 6), (8, 7), (8, 8), (9, 5), (9, 6), (9, 7), (6, 8), (6, 9)):
        out.append(corridor_scenario(rise, agent_x, predictor))
    return out

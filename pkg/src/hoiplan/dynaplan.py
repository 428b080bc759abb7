"""Dynamic re-planning around a single moving obstacle.

All positions here are in grid-cell coordinates (floats allowed); radii are
given in meters and converted with the grid resolution. The loop:

* predict the obstacle ``t_pred`` steps ahead from its last ``t_obs`` positions,
* check the agent's timed plan against the predictions for influence-radius overlap,
* on a predicted collision, evaluate waiting ``k = 0..t_pred`` steps versus
  detouring on a Gaussian risk map and adopt the cheapest candidate.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import numpy as np

from .errors import ContractViolation, InvalidInput
from .planner import DEFAULT_LAMBDA_R, astar, path_cost
from .scene_grid import Cell, GridPath, OccupancyGrid, cell_to_world


@dataclass(frozen=True)
class DynaPlanParams:
    sigma: float = 1.0
    gamma: float = 0.8
    lambda_r: float = DEFAULT_LAMBDA_R
    lambda_w: float = 1.0
    r_agent: float = 0.3
    r_obs: float = 0.3
    t_obs: int = 8
    t_pred: int = 12
    truncate: float = 6.0
    max_steps: int = 400
    require_clear: bool = True

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidInput("sigma must be positive")
        if not 0 < self.gamma < 1:
            raise InvalidInput("gamma must lie in (0, 1)")
        if self.lambda_r < 0 or self.lambda_w < 0:
            raise InvalidInput("lambda_r and lambda_w must be non-negative")
        if not (self.r_agent > 0 and self.r_obs > 0):
            raise InvalidInput("influence radii must be positive")
        if self.t_obs < 1 or self.t_pred < 1 or self.max_steps < 1:
            raise InvalidInput("t_obs, t_pred and max_steps must be >= 1")


@dataclass(frozen=True)
class RiskMap:
    values: np.ndarray
    sigma: float
    gamma: float
    horizon: int


@dataclass(frozen=True)
class WaitCandidate:
    wait_steps: int
    path: Optional[GridPath]
    cost: float
    score: float
    clear: bool


@dataclass(frozen=True)
class PlanDecision:
    wait_steps: int
    path: GridPath
    score: float
    candidates: tuple[WaitCandidate, ...] = ()

    def timed_positions(self) -> list[Cell]:
        """Agent cells for t+1, t+2, ... : ``wait_steps`` holds then the path."""
        return [self.path.cells[0]] * self.wait_steps + list(self.path.cells[1:])


# --- prediction -----------------------------------------------------------


class Predictor(Protocol):
    def predict(self, history: np.ndarray, horizon: int, t: int) -> np.ndarray:
        """Positions for steps t+1 .. t+horizon, shape (horizon, 2)."""


class ConstantVelocityPredictor:
    def predict(self, history, horizon, t=None):
        return predict_obstacle(history, horizon)


class OraclePredictor:
    """Returns the obstacle's true scripted future (stands in for a learned forecaster)."""

    def __init__(self, track: np.ndarray):
        self.track = np.asarray(track, dtype=float)

    def predict(self, history, horizon, t):
        if horizon <= 0:
            raise InvalidInput("horizon must be positive")
        idx = np.minimum(np.arange(t + 1, t + 1 + horizon), len(self.track) - 1)
        return self.track[idx].copy()


def predict_obstacle(history: np.ndarray, horizon: int) -> np.ndarray:
    """Constant-velocity extrapolation using the mean displacement of ``history``."""
    hist = np.asarray(history, dtype=float)
    if horizon <= 0:
        raise InvalidInput("horizon must be positive")
    if hist.ndim != 2 or len(hist) == 0:
        raise InvalidInput("history must be a non-empty (n, 2) array")
    v = (hist[-1] - hist[0]) / (len(hist) - 1) if len(hist) > 1 else np.zeros(hist.shape[1])
    k = np.arange(1, horizon + 1)[:, None]
    return hist[-1] + k * v


def _checked_prediction(predictor, history, horizon, t) -> np.ndarray:
    pred = np.asarray(predictor.predict(history, horizon, t), dtype=float)
    if pred.shape != (horizon, 2) or not np.all(np.isfinite(pred)):
        raise ContractViolation(f"predictor returned shape {pred.shape}, expected {(horizon, 2)}")
    return pred


# --- collision and risk ---------------------------------------------------


def detect_collision(agent_path, obstacle_pred, r_agent: float, r_obs: float) -> Optional[int]:
    """Index of the first time-aligned step where the footprints overlap (strict <)."""
    a = np.asarray(agent_path, dtype=float)
    o = np.asarray(obstacle_pred, dtype=float)
    n = min(len(a), len(o))
    if n == 0:
        return None
    sep = np.linalg.norm(a[:n] - o[:n], axis=1)
    hits = np.flatnonzero(sep < r_agent + r_obs)
    return int(hits[0]) if hits.size else None


def build_risk_map(
    grid: OccupancyGrid,
    current,
    predictions,
    sigma: float = 1.0,
    gamma: float = 0.8,
    truncate: float = 6.0,
) -> RiskMap:
    """Gaussian risk around the current obstacle cell plus gamma**k weighted predictions.

    Contributions farther than ``truncate * sigma`` from a source are dropped
    (each below exp(-truncate**2 / 2)).
    """
    if not sigma > 0:
        raise InvalidInput("sigma must be positive")
    if not 0 < gamma < 1:
        raise InvalidInput("gamma must lie in (0, 1)")
    preds = np.asarray(predictions, dtype=float).reshape(-1, 2)
    sources = np.vstack([np.asarray(current, dtype=float).reshape(1, 2), preds])
    weights = np.concatenate([[1.0], gamma ** np.arange(1, len(preds) + 1)])
    ii, jj = np.indices(grid.walkable.shape, dtype=float)
    values = np.zeros(grid.walkable.shape)
    cutoff = (truncate * sigma) ** 2
    for (ox, oy), wk in zip(sources, weights):
        d2 = (ii - ox) ** 2 + (jj - oy) ** 2
        term = wk * np.exp(-d2 / (2.0 * sigma * sigma))
        term[d2 > cutoff] = 0.0
        values += term
    return RiskMap(values, float(sigma), float(gamma), len(preds))


# --- wait versus detour ---------------------------------------------------


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("HOIPLAN_THREADS", "1")))
    except ValueError:
        return 1


def _evaluate_one(grid, agent, goal, current, long_pred, k, params) -> WaitCandidate:
    anchor = current if k == 0 else long_pred[k - 1]
    future = long_pred[k : k + params.t_pred]
    risk = build_risk_map(grid, anchor, future, params.sigma, params.gamma, params.truncate)
    path = astar(grid, agent, goal, risk, params.lambda_r)
    if path is None:
        return WaitCandidate(k, None, math.inf, math.inf, False)
    cost = path_cost(path, risk, params.lambda_r).total
    timed = [agent] * k + list(path.cells[1:])
    timed = _pad(timed, goal, params.t_pred)[: params.t_pred]
    radius = (params.r_agent + params.r_obs) / grid.resolution
    clear = detect_collision(timed, long_pred[: params.t_pred], radius, 0.0) is None
    return WaitCandidate(k, path, cost, cost + params.lambda_w * k, clear)


def evaluate_wait_candidates(
    grid: OccupancyGrid,
    agent: Cell,
    goal: Cell,
    obstacle_history,
    params: DynaPlanParams = DynaPlanParams(),
    predictor: Optional[Predictor] = None,
    t: int = 0,
) -> Optional[PlanDecision]:
    """Score waiting k = 0..t_pred steps and pick the cheapest candidate.

    For each k the obstacle is advanced k predicted steps, the risk map is
    rebuilt from there and A* is rerun; the score is the path cost plus
    ``lambda_w * k``. With ``params.require_clear`` candidates whose timed plan
    still overlaps the predicted obstacle are only used when none is clear.
    Ties go to the smaller k. Returns None when no candidate reaches the goal.
    """
    predictor = predictor or ConstantVelocityPredictor()
    history = np.asarray(obstacle_history, dtype=float).reshape(-1, 2)
    horizon = 2 * params.t_pred
    long_pred = _checked_prediction(predictor, history, horizon, t)
    current = history[-1]
    ks = range(params.t_pred + 1)
    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            cands = list(ex.map(lambda k: _evaluate_one(grid, agent, goal, current, long_pred, k, params), ks))
    else:
        cands = [_evaluate_one(grid, agent, goal, current, long_pred, k, params) for k in ks]

    reachable = [c for c in cands if c.path is not None]
    if not reachable:
        return None
    pool = reachable
    if params.require_clear:
        clear = [c for c in reachable if c.clear]
        pool = clear or reachable
    best = min(pool, key=lambda c: (c.score, c.wait_steps))
    return PlanDecision(best.wait_steps, best.path, best.score, tuple(cands))


# --- simulation -----------------------------------------------------------


@dataclass
class TickRecord:
    t: int
    agent: tuple[float, float]
    obstacle: Optional[tuple[float, float]]
    events: list[str] = field(default_factory=list)


@dataclass
class SimulationTimeline:
    ticks: list[TickRecord]
    decisions: list[tuple[int, PlanDecision]]
    goal_reached: bool
    complete: bool
    min_separation: float
    initial_path: Optional[GridPath]

    @property
    def replan_count(self) -> int:
        return len(self.decisions)

    @property
    def wait_steps(self) -> int:
        return sum(1 for tk in self.ticks if "waiting" in tk.events)

    def separations(self) -> np.ndarray:
        out = [
            math.dist(tk.agent, tk.obstacle) for tk in self.ticks if tk.obstacle is not None
        ]
        return np.asarray(out)

    def summary(self) -> dict:
        return {
            "ticks": len(self.ticks),
            "replan_count": self.replan_count,
            "wait_steps": self.wait_steps,
            "decisions": [{"t": t, "wait_steps": d.wait_steps, "score": d.score} for t, d in self.decisions],
            "min_separation": self.min_separation,
            "goal_reached": self.goal_reached,
            "complete": self.complete,
        }


def _pad(cells: list, last, n: int) -> list:
    if len(cells) >= n:
        return cells
    tail = cells[-1] if cells else last
    return cells + [tail] * (n - len(cells))


def obstacle_track_from_waypoints(grid: OccupancyGrid, waypoints: Sequence[Cell]) -> np.ndarray:
    """Chain A* legs between waypoints; the obstacle advances one cell per step."""
    cells = [tuple(waypoints[0])]
    for a, b in zip(waypoints, waypoints[1:]):
        leg = astar(grid, tuple(a), tuple(b))
        if leg is None:
            raise InvalidInput(f"obstacle waypoint {b} unreachable from {a}")
        cells.extend(leg.cells[1:])
    return np.asarray(cells, dtype=float)


def run_dynaplan(
    grid: OccupancyGrid,
    start: Cell,
    goal: Cell,
    obstacle_track=None,
    params: DynaPlanParams = DynaPlanParams(),
    predictor: Optional[Predictor] = None,
) -> SimulationTimeline:
    """Step the agent one cell per tick while the obstacle follows its track.

    ``obstacle_track`` holds the obstacle cell at every tick (the last entry is
    held once the script ends); ``None`` runs a static scene.
    """
    start, goal = tuple(start), tuple(goal)
    initial = astar(grid, start, goal)
    if initial is None:
        return SimulationTimeline([], [], False, False, math.inf, None)
    track = None if obstacle_track is None else np.asarray(obstacle_track, dtype=float).reshape(-1, 2)
    if track is not None and predictor is None:
        predictor = ConstantVelocityPredictor()
    res = grid.resolution
    reach = (params.r_agent + params.r_obs) / res

    def obstacle_at(t):
        return None if track is None else track[min(t, len(track) - 1)]

    def world(p):
        x, y = cell_to_world(grid, (float(p[0]), float(p[1])))
        return (x, y)

    plan: list[Cell] = list(initial.cells[1:])
    waiting_left = 0
    agent = start
    ticks: list[TickRecord] = []
    decisions: list[tuple[int, PlanDecision]] = []
    min_sep = math.inf
    t = 0
    goal_reached = False
    while True:
        obs = obstacle_at(t)
        rec = TickRecord(t, world(agent), None if obs is None else world(obs))
        ticks.append(rec)
        if obs is not None:
            min_sep = min(min_sep, math.dist(rec.agent, rec.obstacle))
        if agent == goal:
            rec.events.append("goal-reached")
            goal_reached = True
            break
        if t >= params.max_steps:
            rec.events.append("step-budget-exhausted")
            break
        if track is not None:
            history = np.array([obstacle_at(s) for s in range(max(0, t - params.t_obs + 1), t + 1)])
            preds = _checked_prediction(predictor, history, params.t_pred, t)
            timed = _pad(list(plan), agent, params.t_pred)[: params.t_pred]
            if detect_collision(timed, preds, reach, 0.0) is not None:
                rec.events.append("collision-detected")
                decision = evaluate_wait_candidates(grid, agent, goal, history, params, predictor, t)
                if decision is None:
                    plan = []
                    rec.events.append("no-path")
                else:
                    decisions.append((t, decision))
                    plan = decision.timed_positions()
                    waiting_left = decision.wait_steps
                    rec.events.append("re-planned")
        if waiting_left > 0:
            rec.events.append("waiting")
            waiting_left -= 1
        if plan:
            agent = plan.pop(0)
        t += 1
    return SimulationTimeline(ticks, decisions, goal_reached, goal_reached, min_sep, initial)

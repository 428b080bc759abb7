"""Command-line entry points: plan, simulate, eval, landscape.

Exit codes: 0 success, 1 input error, 2 domain-level negative result
(no path, incomplete timeline).
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import __version__
from .errors import InvalidInput, OutOfRange
from .io import dataclass_from_dict, load_json, load_scene, load_skeleton, read_features, read_motion, read_sdf_grid, report_to_csv
from .planner import DEFAULT_LAMBDA_R, astar, path_cost
from .scene_grid import cell_to_world, world_to_cell

EXIT_OK, EXIT_INPUT, EXIT_NEGATIVE = 0, 1, 2


class CliError(Exception):
    def __init__(self, msg, code=EXIT_INPUT):
        super().__init__(msg)
        self.code = code


# --- configs --------------------------------------------------------------


@dataclass
class PlanConfig:
    lambda_r: float = DEFAULT_LAMBDA_R

    def __post_init__(self):
        if self.lambda_r < 0:
            raise InvalidInput("lambda_r must be non-negative")


@dataclass
class EvalConfig:
    contact_threshold: float = 0.05
    quasi_static_speed: float = 0.005
    floor_bin: float = 0.01
    ankle_height: float = 0.08
    toe_height: float = 0.04
    pool_size: int = 32
    diversity_pairs: int = 300
    penetrating_only: bool = False

    def __post_init__(self):
        for k in ("contact_threshold", "quasi_static_speed", "floor_bin", "ankle_height", "toe_height"):
            if not getattr(self, k) > 0:
                raise InvalidInput(f"{k} must be positive")
        if self.pool_size < 2 or self.diversity_pairs < 1:
            raise InvalidInput("pool_size must be >= 2 and diversity_pairs >= 1")


@dataclass
class LandscapeConfig:
    loss: str = "quadratic"
    r: float = 1.0
    steps: int = 51
    shapes: tuple = ((8, 4), (4,), (4, 2))

    def __post_init__(self):
        if not self.r > 0 or self.steps < 2:
            raise InvalidInput("landscape needs r > 0 and steps >= 2")
        self.shapes = tuple(tuple(int(d) for d in s) for s in self.shapes)


def _config(cls, args, section: str, overrides: dict):
    """Defaults, then the ``section`` of the --config file, then explicit flags."""
    base = {}
    if args.config:
        doc = load_json(args.config)
        base = doc.get(section, {}) if isinstance(doc, dict) else {}
        if not isinstance(base, dict):
            raise InvalidInput(f"{args.config}: section {section!r} must be an object")
    cfg = dataclass_from_dict(cls, base, f"{args.config}:{section}")
    extra = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **extra) if extra else cfg


# --- output ---------------------------------------------------------------


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- plan -----------------------------------------------------------------


def cmd_plan(args) -> int:
    cfg = _config(PlanConfig, args, "plan", {"lambda_r": args.lambda_r})
    grid = load_scene(args.scene)
    try:
        start = world_to_cell(grid, args.start)
        goal = world_to_cell(grid, args.goal)
    except OutOfRange as exc:
        raise CliError(f"plan: {exc}") from exc
    if not grid.is_walkable(start):
        raise CliError(f"plan: start {tuple(args.start)} is inside an obstacle")
    if not grid.is_walkable(goal):
        raise CliError(f"no path: goal {tuple(args.goal)} is blocked", EXIT_NEGATIVE)
    path = astar(grid, start, goal, None, cfg.lambda_r)
    if path is None:
        raise CliError(f"no path from {tuple(args.start)} to {tuple(args.goal)}", EXIT_NEGATIVE)
    cost = path_cost(path, None, cfg.lambda_r)
    doc = {
        "seed": args.seed,
        "polyline": [list(cell_to_world(grid, c)) for c in path.cells],
        "cells": [list(c) for c in path.cells],
        "cost": {
            "step_length": cost.step_length,
            "risk_term": cost.risk_term,
            "lambda_r": cost.lambda_r,
            "total": cost.total,
            "length_m": cost.step_length * grid.resolution,
        },
    }
    _emit(args, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


# --- simulate -------------------------------------------------------------


def cmd_simulate(args) -> int:
    from .dynaplan import DynaPlanParams
    from .scenarios import PREDICTORS, load_scenario

    sc = load_scenario(args.scenario)
    if args.config:
        doc = load_json(args.config).get("simulate", {})
        params = dict(vars(sc.params))
        params.update(doc.get("params", {}))
        sc.params = dataclass_from_dict(DynaPlanParams, params, f"{args.config}:simulate.params")
        unknown = sorted(set(doc) - {"params", "predictor"})
        if unknown:
            raise InvalidInput(f"{args.config}:simulate: unknown keys {unknown}")
        sc.predictor = doc.get("predictor", sc.predictor)
    if args.predictor:
        sc.predictor = args.predictor
    if sc.predictor not in PREDICTORS:
        raise InvalidInput(f"predictor must be one of {PREDICTORS}")
    tl = sc.run()
    lines = [json.dumps({"record": "header", "seed": args.seed, "scenario": sc.name, "predictor": sc.predictor})]
    for tk in tl.ticks:
        lines.append(
            json.dumps(
                {
                    "record": "tick",
                    "t": tk.t,
                    "agent": list(tk.agent),
                    "obstacle": None if tk.obstacle is None else list(tk.obstacle),
                    "event": tk.events,
                }
            )
        )
    summary = tl.summary()
    if summary["min_separation"] == float("inf"):
        summary["min_separation"] = None
    lines.append(json.dumps({"record": "summary", **summary}))
    _emit(args, "\n".join(lines) + "\n")
    if not tl.complete:
        print("simulation incomplete: goal not reached", file=sys.stderr)
        return EXIT_NEGATIVE
    return EXIT_OK


# --- eval -----------------------------------------------------------------

_CM = "cm"


def _mean(xs):
    return float(np.mean(xs)) if len(xs) else None


def evaluate(
    preds,
    gts,
    skel,
    cfg: EvalConfig,
    object_points=None,
    sdf=None,
    feats_pred=None,
    feats_gt=None,
    feats_text=None,
    rng=None,
):
    """Aggregate every metric over aligned prediction / ground-truth sequences."""
    from . import metrics as M

    if len(preds) != len(gts):
        raise InvalidInput(f"{len(preds)} predicted vs {len(gts)} ground-truth sequences")
    rng = rng or np.random.default_rng(0)
    rep = M.MetricReport()
    toes = skel.feet
    thresholds = (cfg.ankle_height, cfg.ankle_height, cfg.toe_height, cfg.toe_height)
    ts, te, hf, fs, mp, troot, tobj, oobj, pen = ([] for _ in range(9))
    pred_labels, gt_labels = [], []
    floor_status = "ok"
    for p, g in zip(preds, gts):
        if p.n_frames != g.n_frames:
            raise InvalidInput("predicted and ground-truth sequences differ in length")
        cm = M.condition_matching(p, g.obj_t[0], g.obj_t[-1])
        ts.append(cm["T_s"])
        te.append(cm["T_e"])
        pj, gj = p.global_joints(skel), g.global_joints(skel)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            z_floor, status = M.floor_from_joints(pj, toes, cfg.quasi_static_speed, cfg.floor_bin)
        if status != "ok":
            floor_status = "fallback-z0"
        hf.append(M.foot_height(pj[:, toes, 2], z_floor))
        if p.n_frames >= 2:
            fs.append(M.foot_sliding(pj[:, skel.sliding_joints, :], z_floor, thresholds))
        mp.append(M.mpjpe(pj, gj))
        tr = M.translation_errors(p, g)
        troot.append(tr["T_root"])
        tobj.append(tr["T_obj"])
        oobj.append(M.orientation_error(p.obj_R, g.obj_R))
        if object_points is not None:
            pred_labels.append(M.contact_labels(pj[:, skel.hands], p.object_points(object_points), cfg.contact_threshold))
            gt_labels.append(M.contact_labels(gj[:, skel.hands], g.object_points(object_points), cfg.contact_threshold))
        if sdf is not None:
            # joints expressed in the object frame, where the SDF lives
            local = np.einsum("tba,tjb->tja", p.obj_R, pj - p.obj_t[:, None, :])
            pen.append(M.penetration(local, sdf, cfg.penetrating_only))

    rep.add("T_s", _mean(ts), _CM)
    rep.add("T_e", _mean(te), _CM)
    rep.add("H_feet", _mean(hf), _CM, floor_status)
    if fs:
        rep.add("FS", _mean(fs), _CM, floor_status)
    else:
        rep.not_applicable("FS", _CM, "not-applicable: single-frame sequences")
    if pred_labels:
        c = M.contact_metrics(np.concatenate(pred_labels), np.concatenate(gt_labels))
        for k in ("C_prec", "C_rec", "C_F1"):
            rep.add(k, c[k], "", "zero-denominator" if k in c["flags"] else "ok")
        rep.add("C_pct", c["C_pct"], "")
    else:
        for k in ("C_prec", "C_rec", "C_F1", "C_pct"):
            rep.not_applicable(k, "", "not-applicable: no object geometry")
    if pen:
        rep.add("Pen", _mean(pen), _CM)
    else:
        rep.not_applicable("Pen", _CM, "not-applicable: no SDF")
    rep.add("MPJPE", _mean(mp), _CM)
    rep.add("T_root", _mean(troot), _CM)
    rep.add("T_obj", _mean(tobj), _CM)
    rep.add("O_obj", _mean(oobj), "")
    if feats_pred is not None and feats_gt is not None:
        rep.add("FID", M.fid(feats_pred, feats_gt), "")
    else:
        rep.not_applicable("FID", "", "not-applicable: no feature files")
    if feats_pred is not None:
        rep.add("DIV", M.diversity(feats_pred, cfg.diversity_pairs, rng), "")
    else:
        rep.not_applicable("DIV", "", "not-applicable: no feature files")
    if feats_pred is not None and feats_text is not None:
        if len(feats_pred) >= cfg.pool_size:
            rep.add("R_prec", M.r_precision(feats_text, feats_pred, cfg.pool_size, rng), "")
        else:
            rep.not_applicable("R_prec", "", f"not-applicable: fewer than {cfg.pool_size} samples")
    else:
        rep.not_applicable("R_prec", "", "not-applicable: no feature files")
    return rep


def cmd_eval(args) -> int:
    cfg = _config(EvalConfig, args, "eval", {})
    preds = [read_motion(p) for p in args.pred]
    gts = [read_motion(p) for p in args.gt]
    skel = load_skeleton(args.skeleton)
    obj = None
    if args.object_points:
        obj = np.asarray(load_json(args.object_points)["points"], dtype=float).reshape(-1, 3)
    sdf = read_sdf_grid(args.sdf) if args.sdf else None
    fp = read_features(args.features_pred) if args.features_pred else None
    fg = read_features(args.features_gt) if args.features_gt else None
    ft = read_features(args.features_text) if args.features_text else None
    rep = evaluate(preds, gts, skel, cfg, obj, sdf, fp, fg, ft, np.random.default_rng(args.seed))
    _emit(args, report_to_csv(rep.rows, f"hoiplan {__version__} eval seed={args.seed}"))
    return EXIT_OK


# --- landscape ------------------------------------------------------------


def cmd_landscape(args) -> int:
    from .landscape import ParamVector, builtin_loss, landscape

    cfg = _config(LandscapeConfig, args, "landscape", {"loss": args.loss, "r": args.r, "steps": args.steps})
    rng = np.random.default_rng(args.seed)
    w0 = ParamVector.from_tensors([rng.standard_normal(s) for s in cfg.shapes])
    try:
        loss = builtin_loss(cfg.loss, w0)
    except InvalidInput as exc:
        raise CliError(f"{exc}; options: quadratic, rosenbrock, constant:<c>") from exc
    grid = landscape(w0, loss, cfg.r, cfg.steps, seed=args.seed)
    _emit(args, f"# hoiplan {__version__} landscape loss={cfg.loss} seed={args.seed}\n" + grid.to_csv())
    return EXIT_OK


# --- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hoiplan", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--config", help="JSON file with per-subcommand sections")
    ap.add_argument("--out", help="output path (default stdout)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="A* path on a scene file")
    p.add_argument("scene")
    p.add_argument("--start", type=float, nargs=2, required=True, metavar=("X", "Y"))
    p.add_argument("--goal", type=float, nargs=2, required=True, metavar=("X", "Y"))
    p.add_argument("--lambda-r", type=float, dest="lambda_r")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="run the re-planning loop on a scenario file")
    p.add_argument("scenario")
    p.add_argument("--predictor", choices=["oracle", "constant_velocity"])
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="metric report for motion files")
    p.add_argument("--pred", nargs="+", required=True)
    p.add_argument("--gt", nargs="+", required=True)
    p.add_argument("--skeleton")
    p.add_argument("--object-points", dest="object_points", help='JSON {"points": [[x,y,z], ...]} in the object frame')
    p.add_argument("--sdf", help="object-frame SDF grid file")
    p.add_argument("--features-pred", dest="features_pred")
    p.add_argument("--features-gt", dest="features_gt")
    p.add_argument("--features-text", dest="features_text")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("landscape", help="2-D loss landscape of a built-in functional")
    p.add_argument("--loss")
    p.add_argument("--r", type=float)
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_landscape)
    return ap


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"hoiplan {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except (InvalidInput, OutOfRange, OSError, KeyError) as exc:
        print(f"hoiplan {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

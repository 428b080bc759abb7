"""File codecs: scenes, scenarios, skeletons, SDF grids, motions, features, reports."""
from __future__ import annotations

import csv
import io as _io
import json
import struct
from dataclasses import asdict, fields
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import InvalidInput
from .scene_grid import Circle, OccupancyGrid, Rect, inflate_obstacles, rasterize_scene

# --- scenes ---------------------------------------------------------------


def footprint_from_dict(d: dict):
    kind = d.get("type")
    if kind == "rect":
        (x0, y0), (x1, y1) = d["min"], d["max"]
        return Rect(float(x0), float(y0), float(x1), float(y1))
    if kind == "circle":
        cx, cy = d["center"]
        return Circle(float(cx), float(cy), float(d["radius"]))
    raise InvalidInput(f"unknown footprint type {kind!r}")


def footprint_to_dict(fp) -> dict:
    if isinstance(fp, Rect):
        return {"type": "rect", "min": [fp.xmin, fp.ymin], "max": [fp.xmax, fp.ymax]}
    return {"type": "circle", "center": [fp.cx, fp.cy], "radius": fp.radius}


def scene_from_dict(d: dict) -> OccupancyGrid:
    try:
        bounds = [float(v) for v in d["bounds"]]
        resolution = float(d["resolution"])
        fps = [footprint_from_dict(f) for f in d.get("footprints", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed scene: {exc}") from exc
    if len(bounds) != 4:
        raise InvalidInput("scene bounds must be [xmin, ymin, xmax, ymax]")
    grid = rasterize_scene(fps, bounds, resolution)
    margin = float(d.get("inflate", 0.0))
    return inflate_obstacles(grid, margin) if margin else grid


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: invalid JSON ({exc})") from exc


def load_scene(path) -> OccupancyGrid:
    return scene_from_dict(load_json(path))


# --- skeletons ------------------------------------------------------------


def skeleton_from_dict(d: dict):
    from .geometry import Skeleton

    try:
        distal = d["distal"]
        return Skeleton(
            parents=tuple(int(p) for p in d["parents"]),
            offsets=np.asarray(d["offsets"], dtype=float),
            lhand=int(distal["lhand"]),
            rhand=int(distal["rhand"]),
            lfoot=int(distal["lfoot"]),
            rfoot=int(distal["rfoot"]),
            lankle=int(distal.get("lankle", distal["lfoot"])),
            rankle=int(distal.get("rankle", distal["rfoot"])),
            names=tuple(d.get("names", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed skeleton: {exc}") from exc


def load_skeleton(path=None):
    if path is None:
        path = Path(__file__).parent / "data" / "skeleton22.json"
    return skeleton_from_dict(load_json(path))


# --- SDF grids ------------------------------------------------------------

_SDF_MAGIC = b"HSDF"
_SDF_HEADER = struct.Struct("<4s3I4f")


def write_sdf_grid(path, sdf) -> None:
    values = np.ascontiguousarray(sdf.values, dtype="<f4")
    nx, ny, nz = values.shape
    header = _SDF_HEADER.pack(_SDF_MAGIC, nx, ny, nz, sdf.voxel_size, *sdf.origin)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(values.tobytes(order="C"))


def read_sdf_grid(path):
    from .geometry import SdfGrid

    raw = Path(path).read_bytes()
    if len(raw) < _SDF_HEADER.size:
        raise InvalidInput(f"{path}: truncated SDF header")
    magic, nx, ny, nz, vs, ox, oy, oz = _SDF_HEADER.unpack_from(raw)
    if magic != _SDF_MAGIC:
        raise InvalidInput(f"{path}: not an SDF grid file")
    payload = np.frombuffer(raw, dtype="<f4", offset=_SDF_HEADER.size)
    if payload.size != nx * ny * nz:
        raise InvalidInput(f"{path}: expected {nx * ny * nz} values, found {payload.size}")
    return SdfGrid(payload.reshape(nx, ny, nz).astype(float), float(vs), (ox, oy, oz))


# --- motions --------------------------------------------------------------


def motion_to_lines(motion) -> list[str]:
    lines = []
    for t in range(motion.n_frames):
        rec = {
            "t": t,
            "root": motion.root[t].tolist(),
            "joints6d": motion.joints6d[t].tolist(),
            "obj_t": motion.obj_t[t].tolist(),
            "obj_R": motion.obj_R[t].reshape(9).tolist(),
        }
        if motion.joints is not None:
            rec["joints"] = motion.joints[t].tolist()
        lines.append(json.dumps(rec))
    return lines


def write_motion(path, motion) -> None:
    Path(path).write_text("\n".join(motion_to_lines(motion)) + "\n")


def parse_motion(lines: Iterable[str], source: str = "<motion>"):
    from .metrics import MotionSequence

    roots, j6, ots, oRs, joints = [], [], [], [], []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            roots.append([float(v) for v in rec["root"]])
            j6.append(np.asarray(rec["joints6d"], dtype=float))
            ots.append([float(v) for v in rec["obj_t"]])
            oRs.append(np.asarray(rec["obj_R"], dtype=float).reshape(3, 3))
            joints.append(None if "joints" not in rec else np.asarray(rec["joints"], dtype=float))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"{source}:{lineno}: malformed motion frame ({exc})") from exc
    if not roots:
        raise InvalidInput(f"{source}: no frames")
    have_joints = all(j is not None for j in joints)
    try:
        return MotionSequence(
            root=np.asarray(roots),
            joints6d=np.stack(j6),
            obj_t=np.asarray(ots),
            obj_R=np.stack(oRs),
            joints=np.stack(joints) if have_joints else None,
        )
    except ValueError as exc:
        raise InvalidInput(f"{source}: inconsistent frame shapes ({exc})") from exc


def read_motion(path):
    with open(path) as fh:
        return parse_motion(fh, str(path))


# --- feature sets ---------------------------------------------------------


def write_features(path, feats: np.ndarray) -> None:
    feats = np.asarray(feats, dtype=float)
    n, d = feats.shape
    with open(path, "w") as fh:
        fh.write(json.dumps({"n": n, "d": d}) + "\n")
        for row in feats:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_features(path) -> np.ndarray:
    with open(path) as fh:
        try:
            header = json.loads(fh.readline())
            n, d = int(header["n"]), int(header["d"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"{path}: bad feature header ({exc})") from exc
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                row = [float(v) for v in line.split()]
            except ValueError as exc:
                raise InvalidInput(f"{path}:{lineno}: {exc}") from exc
            if len(row) != d:
                raise InvalidInput(f"{path}:{lineno}: expected {d} values, got {len(row)}")
            rows.append(row)
    if len(rows) != n:
        raise InvalidInput(f"{path}: header says {n} rows, found {len(rows)}")
    return np.asarray(rows, dtype=float).reshape(n, d)


# --- reports --------------------------------------------------------------


def report_to_csv(rows, header_comment: Optional[str] = None) -> str:
    buf = _io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", "value", "unit", "status"])
    for r in rows:
        value = "" if r.value is None else repr(float(r.value))
        writer.writerow([r.name, value, r.unit, r.status])
    return buf.getvalue()


def dataclass_from_dict(cls, d: dict, where: str = "config"):
    """Build ``cls`` from ``d``, rejecting unknown keys."""
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(d) - names)
    if unknown:
        raise InvalidInput(f"{where}: unknown keys {unknown}")
    try:
        return cls(**d)
    except TypeError as exc:
        raise InvalidInput(f"{where}: {exc}") from exc


def dataclass_to_dict(obj) -> dict:
    return asdict(obj)

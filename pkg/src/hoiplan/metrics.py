"""Evaluation metrics for generated human-object interaction sequences.

Distances come in meters and are reported in centimeters where noted.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInput, NotEstimable

CONTACT_THRESHOLD = 0.05
QUASI_STATIC_SPEED = 0.005
FLOOR_BIN = 0.01
ANKLE_HEIGHT = 0.08
TOE_HEIGHT = 0.04


@dataclass
class MotionSequence:
    root: np.ndarray  # T x 3
    joints6d: np.ndarray  # T x J x 6
    obj_t: np.ndarray  # T x 3
    obj_R: np.ndarray  # T x 3 x 3
    joints: Optional[np.ndarray] = None  # T x J x 3, precomputed global joints

    def __post_init__(self):
        self.root = np.asarray(self.root, dtype=float)
        self.joints6d = np.asarray(self.joints6d, dtype=float)
        self.obj_t = np.asarray(self.obj_t, dtype=float)
        self.obj_R = np.asarray(self.obj_R, dtype=float)
        T = len(self.root)
        if T < 1:
            raise InvalidInput("motion needs at least one frame")
        if (
            self.root.shape != (T, 3)
            or self.joints6d.ndim != 3
            or self.joints6d.shape[0] != T
            or self.joints6d.shape[2] != 6
            or self.obj_t.shape != (T, 3)
            or self.obj_R.shape != (T, 3, 3)
        ):
            raise InvalidInput("inconsistent motion array shapes")
        if self.joints is not None:
            self.joints = np.asarray(self.joints, dtype=float)
            if self.joints.shape != (T, self.joints6d.shape[1], 3):
                raise InvalidInput("precomputed joints do not match the rotation count")
        arrays = [self.root, self.joints6d, self.obj_t, self.obj_R] + ([self.joints] if self.joints is not None else [])
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise InvalidInput("motion contains non-finite values")
        err = np.abs(np.swapaxes(self.obj_R, 1, 2) @ self.obj_R - np.eye(3)).max()
        if err > 1e-4:
            raise InvalidInput(f"object rotations are not orthonormal (error {err:.2e})")

    @property
    def n_frames(self) -> int:
        return len(self.root)

    def global_joints(self, skel) -> np.ndarray:
        if self.joints is not None:
            return self.joints
        from .geometry import forward_kinematics

        return forward_kinematics(self.root, self.joints6d, skel)

    def object_points(self, local_points) -> np.ndarray:
        """Object-frame points posed per frame, T x M x 3."""
        p = np.asarray(local_points, dtype=float).reshape(-1, 3)
        return np.einsum("tab,mb->tma", self.obj_R, p) + self.obj_t[:, None, :]


@dataclass
class MetricRow:
    name: str
    value: Optional[float]
    unit: str = ""
    status: str = "ok"


@dataclass
class MetricReport:
    rows: list = field(default_factory=list)

    def add(self, name, value, unit="", status="ok"):
        self.rows.append(MetricRow(name, None if value is None else float(value), unit, status))

    def not_applicable(self, name, unit="", reason="not-applicable"):
        self.rows.append(MetricRow(name, None, unit, reason))

    def get(self, name) -> MetricRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {r.name: r.value for r in self.rows}


# --- condition matching ---------------------------------------------------


def condition_matching(pred: MotionSequence, target_start, target_goal, centroid_offset=None) -> dict:
    """Start/end object centroid errors in cm. ``centroid_offset`` is the
    centroid in the object frame (defaults to the object origin)."""
    c = np.zeros(3) if centroid_offset is None else np.asarray(centroid_offset, dtype=float)
    start = pred.obj_R[0] @ c + pred.obj_t[0]
    end = pred.obj_R[-1] @ c + pred.obj_t[-1]
    return {
        "T_s": float(np.linalg.norm(start - np.asarray(target_start, dtype=float)) * 100),
        "T_e": float(np.linalg.norm(end - np.asarray(target_goal, dtype=float)) * 100),
    }


# --- motion quality -------------------------------------------------------


def estimate_floor(toe_heights, toe_speeds, v_q: float = QUASI_STATIC_SPEED, w: float = FLOOR_BIN) -> float:
    """Lowest cluster of quasi-static toe heights.

    Sorted heights are split wherever consecutive values differ by more than
    ``w``; the mean of the lowest group is returned.
    """
    z = np.asarray(toe_heights, dtype=float)
    v = np.asarray(toe_speeds, dtype=float)
    if z.shape != v.shape:
        if v.ndim == 1 and z.ndim == 2 and len(v) == len(z):
            v = np.repeat(v[:, None], z.shape[1], axis=1)
        else:
            raise InvalidInput(f"heights {z.shape} and speeds {v.shape} do not align")
    stance = np.sort(z[v < v_q].reshape(-1))
    if stance.size == 0:
        raise NotEstimable("no quasi-static toe frames")
    breaks = np.flatnonzero(np.diff(stance) > w)
    end = breaks[0] + 1 if breaks.size else stance.size
    return float(stance[:end].mean())


def floor_from_joints(joints, toes, v_q: float = QUASI_STATIC_SPEED, w: float = FLOOR_BIN) -> tuple[float, str]:
    """Floor height from global joints; falls back to 0 with status ``fallback``."""
    J = np.asarray(joints, dtype=float)[:, list(toes), :]
    if len(J) < 2:
        warnings.warn("floor not estimable from a single frame; using z = 0")
        return 0.0, "fallback"
    speed = np.linalg.norm(np.diff(J, axis=0), axis=-1)
    speed = np.concatenate([speed, speed[-1:]], axis=0)
    try:
        return estimate_floor(J[..., 2], speed, v_q, w), "ok"
    except NotEstimable:
        warnings.warn("no quasi-static toe frames; using z = 0 as the floor")
        return 0.0, "fallback"


def foot_height(feet_z, z_floor: float) -> float:
    """Mean |z - z_floor| over all entries, in cm."""
    z = np.asarray(feet_z, dtype=float)
    if z.size == 0:
        raise InvalidInput("no foot heights")
    return float(np.mean(np.abs(z - z_floor)) * 100)


def foot_sliding_terms(joints, z_floor: float, thresholds) -> np.ndarray:
    """Per (t, j) weighted horizontal slide for t = 0..T-2 in meters.

    ``joints`` is T x K x 3; ``thresholds`` holds one height per joint.
    """
    P = np.asarray(joints, dtype=float)
    H = np.asarray(thresholds, dtype=float).reshape(-1)
    if P.ndim != 3 or P.shape[2] != 3 or P.shape[1] != H.size:
        raise InvalidInput(f"joints {P.shape} do not match {H.size} thresholds")
    if len(P) < 2:
        raise InvalidInput("foot sliding needs at least two frames")
    z = P[:-1, :, 2] - z_floor
    d = np.linalg.norm(P[1:, :, :2] - P[:-1, :, :2], axis=-1)
    return np.where(z < H, d * (2 - np.power(2.0, z / H)), 0.0)


def foot_sliding(joints, z_floor: float, thresholds=(ANKLE_HEIGHT, ANKLE_HEIGHT, TOE_HEIGHT, TOE_HEIGHT)) -> float:
    """Weighted sliding averaged over frame transitions and joints, in cm."""
    return float(np.mean(foot_sliding_terms(joints, z_floor, thresholds)) * 100)


# --- interaction quality --------------------------------------------------


def min_hand_distance(hands, object_vertices) -> np.ndarray:
    H = np.asarray(hands, dtype=float)
    T = len(H)
    H = H.reshape(T, -1, 3)
    out = np.empty(T)
    for t in range(T):
        V = np.asarray(object_vertices[t], dtype=float).reshape(-1, 3)
        if len(V) == 0:
            raise InvalidInput(f"frame {t}: empty vertex set")
        out[t] = np.linalg.norm(H[t][:, None, :] - V[None, :, :], axis=-1).min()
    return out


def contact_labels(hands, object_vertices, threshold: float = CONTACT_THRESHOLD) -> np.ndarray:
    """Frame is in contact iff some hand is strictly closer than ``threshold`` to some vertex."""
    return min_hand_distance(hands, object_vertices) < threshold


def contact_metrics(pred_labels, gt_labels) -> dict:
    """Precision, recall, F1 over the contact class plus the predicted contact fraction.

    Metrics with an empty denominator are 0 and named in ``flags``.
    """
    p = np.asarray(pred_labels, dtype=bool).reshape(-1)
    g = np.asarray(gt_labels, dtype=bool).reshape(-1)
    if p.shape != g.shape:
        raise InvalidInput("label sequences differ in length")
    if p.size == 0:
        raise InvalidInput("empty label sequences")
    tp = int(np.sum(p & g))
    flags = []
    if p.sum() == 0:
        prec = 0.0
        flags.append("C_prec")
    else:
        prec = tp / p.sum()
    if g.sum() == 0:
        rec = 0.0
        flags.append("C_rec")
    else:
        rec = tp / g.sum()
    if prec + rec == 0:
        f1 = 0.0
        flags.append("C_F1")
    else:
        f1 = 2 * prec * rec / (prec + rec)
    return {"C_prec": float(prec), "C_rec": float(rec), "C_F1": float(f1), "C_pct": float(p.mean()), "flags": flags}


def penetration(query_points, sdf, penetrating_only: bool = False) -> float:
    """Mean penetration depth in cm. By default averages over every point with
    non-penetrating ones counted as 0; ``penetrating_only`` averages over the
    penetrating points alone (0 when there are none)."""
    pts = np.asarray(query_points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise InvalidInput("no query points")
    depth = np.maximum(0.0, -np.asarray(sdf.sample(pts), dtype=float))
    if penetrating_only:
        hit = depth > 0
        return float(depth[hit].mean() * 100) if hit.any() else 0.0
    return float(depth.mean() * 100)


# --- ground-truth differences ---------------------------------------------


def mpjpe(pred_joints, gt_joints) -> float:
    p, g = np.asarray(pred_joints, dtype=float), np.asarray(gt_joints, dtype=float)
    if p.shape != g.shape or p.shape[-1] != 3:
        raise InvalidInput(f"shape mismatch: {p.shape} vs {g.shape}")
    return float(np.mean(np.linalg.norm(p - g, axis=-1)) * 100)


def translation_errors(pred: MotionSequence, gt: MotionSequence) -> dict:
    if pred.n_frames != gt.n_frames:
        raise InvalidInput("sequences differ in length")
    return {
        "T_root": float(np.mean(np.linalg.norm(pred.root - gt.root, axis=-1)) * 100),
        "T_obj": float(np.mean(np.linalg.norm(pred.obj_t - gt.obj_t, axis=-1)) * 100),
    }


def orientation_error(pred_R, gt_R) -> float:
    a, b = np.asarray(pred_R, dtype=float), np.asarray(gt_R, dtype=float)
    if a.shape != b.shape or a.shape[-2:] != (3, 3):
        raise InvalidInput(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(np.linalg.norm((a - b).reshape(-1, 9), axis=-1)))


# --- distribution metrics -------------------------------------------------


def _features(x, name) -> np.ndarray:
    f = np.asarray(x, dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    if f.ndim != 2:
        raise InvalidInput(f"{name} must be N x d")
    if not np.all(np.isfinite(f)):
        raise InvalidInput(f"{name} contains non-finite values")
    if len(f) < 2:
        raise InvalidInput(f"{name} needs at least two samples")
    return f


def _psd_sqrt(S: np.ndarray) -> np.ndarray:
    S = 0.5 * (S + S.T)
    w, V = np.linalg.eigh(S)
    scale = max(np.abs(w).max(initial=0.0), 1e-300)
    if np.any(w < -1e-6 * scale):
        warnings.warn("covariance has clearly negative eigenvalues; clamping to 0")
    return (V * np.sqrt(np.clip(w, 0, None))) @ V.T


def fid(features_a, features_b) -> float:
    """Frechet distance between Gaussians fitted to two feature sets."""
    a, b = _features(features_a, "features_a"), _features(features_b, "features_b")
    if a.shape[1] != b.shape[1]:
        raise InvalidInput("feature dimensions differ")
    mu_a, mu_b = a.mean(0), b.mean(0)
    Sa = np.atleast_2d(np.cov(a, rowvar=False))
    Sb = np.atleast_2d(np.cov(b, rowvar=False))
    ra = _psd_sqrt(Sa)
    cross = _psd_sqrt(ra @ Sb @ ra)
    val = float(np.sum((mu_a - mu_b) ** 2) + np.trace(Sa) + np.trace(Sb) - 2 * np.trace(cross))
    return max(val, 0.0)


def diversity(features, pairs: Optional[int] = None, rng: Optional[np.random.Generator] = None) -> float:
    """Mean distance over ``pairs`` random distinct index pairs, or over all pairs when ``pairs`` is None."""
    f = _features(features, "features")
    n = len(f)
    if pairs is None:
        i, j = np.triu_indices(n, k=1)
    else:
        if pairs < 1:
            raise InvalidInput("pairs must be positive")
        rng = rng or np.random.default_rng(0)
        i = rng.integers(0, n, pairs)
        j = (i + rng.integers(1, n, pairs)) % n  # uniform over j != i
    return float(np.mean(np.linalg.norm(f[i] - f[j], axis=1)))


def r_precision(text_features, motion_features, pool_size: int = 32, rng=None, top_k: int = 3) -> float:
    """Fraction of texts whose paired motion ranks in the top ``top_k`` of a
    seeded pool (the pair plus ``pool_size - 1`` other motions) by cosine similarity."""
    t = _features(text_features, "text_features")
    m = _features(motion_features, "motion_features")
    if t.shape != m.shape:
        raise InvalidInput("text and motion features must pair up one to one")
    n = len(t)
    if n < pool_size:
        raise InvalidInput(f"need at least {pool_size} samples, got {n}")
    rng = rng or np.random.default_rng(0)
    tn = t / np.maximum(np.linalg.norm(t, axis=1, keepdims=True), 1e-12)
    mn = m / np.maximum(np.linalg.norm(m, axis=1, keepdims=True), 1e-12)
    hits = 0
    for i in range(n):
        others = rng.choice(n - 1, pool_size - 1, replace=False)
        others = others + (others >= i)
        sims = mn[others] @ tn[i]
        gt = mn[i] @ tn[i]
        rank = 1 + int(np.sum(sims > gt))  # ties favor the ground truth
        hits += rank <= top_k
    return hits / n

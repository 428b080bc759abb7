"""Inference-time reconstruction guidance on the predicted clean sample.

An objective is any object with ``value(x) -> float`` and optionally
``grad(x) -> array``. Objectives that also define ``at(x)`` are re-linearized
once per denoise step: ``at`` freezes data-dependent choices (contact masks,
nearest vertices) and returns the objective used for that step.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInput, NumericFailure

FD_STEP = 1e-4
CONTACT_THRESHOLD = 0.05
FOOT_HEIGHT = 0.02


def finite_difference_grad(fn, x, step: float = FD_STEP) -> np.ndarray:
    """Central differences of a scalar function, one coordinate at a time."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = fn(x)
        flat[i] = orig - step
        down = fn(x)
        flat[i] = orig
        gflat[i] = (up - down) / (2 * step)
    return g


def objective_grad(objective, x) -> np.ndarray:
    if hasattr(objective, "grad"):
        return np.asarray(objective.grad(x), dtype=float)
    fn = objective.value if hasattr(objective, "value") else objective
    return finite_difference_grad(fn, np.array(x, dtype=float))


def guidance_update(x0_hat, objective, alpha: float, sigma_sq: float) -> np.ndarray:
    """``x0_hat - alpha * sigma_sq * grad F(x0_hat)``."""
    if alpha < 0:
        raise InvalidInput("guidance strength must be non-negative")
    x = np.asarray(x0_hat, dtype=float)
    if alpha == 0 or sigma_sq == 0:
        return x.copy()
    if hasattr(objective, "at"):
        objective = objective.at(x)
    g = objective_grad(objective, x)
    if g.shape != x.shape:
        raise NumericFailure(f"objective gradient has shape {g.shape}, expected {x.shape}")
    if not np.all(np.isfinite(g)):
        raise NumericFailure("objective gradient is not finite")
    return x - alpha * sigma_sq * g


# --- hand contact ---------------------------------------------------------


def contact_targets(hands, object_vertices, threshold: float = CONTACT_THRESHOLD):
    """Nearest object vertex per hand per frame and the within-threshold masks.

    ``hands`` is T x 2 x 3; ``object_vertices`` is T x M x 3 (per-frame world
    vertices). Returns ``(targets T x 2 x 3, masks T x 2)``.
    """
    H = np.asarray(hands, dtype=float)
    V = np.asarray(object_vertices, dtype=float)
    if H.ndim != 3 or H.shape[1:] != (2, 3) or V.ndim != 3 or V.shape[0] != H.shape[0] or V.shape[2] != 3:
        raise InvalidInput(f"inconsistent shapes: hands {H.shape}, vertices {V.shape}")
    d = np.linalg.norm(H[:, :, None, :] - V[:, None, :, :], axis=-1)  # T x 2 x M
    idx = d.argmin(axis=-1)
    targets = np.take_along_axis(V, idx[..., None].repeat(3, axis=-1), axis=1)
    masks = np.take_along_axis(d, idx[..., None], axis=-1)[..., 0] < threshold
    return targets, masks


def _check_contact(H, V, M):
    H, V, M = np.asarray(H, dtype=float), np.asarray(V, dtype=float), np.asarray(M, dtype=bool)
    if H.shape != V.shape or H.ndim != 3 or H.shape[1:] != (2, 3) or M.shape != H.shape[:2]:
        raise InvalidInput(f"inconsistent shapes: hands {H.shape}, targets {V.shape}, masks {M.shape}")
    return H, V, M


def f_contact(hands, targets, masks) -> float:
    """Masked L1 distance between hands and their target vertices, summed over frames."""
    H, V, M = _check_contact(hands, targets, masks)
    return float(np.sum(M[..., None] * np.abs(H - V)))


def f_contact_grad(hands, targets, masks) -> np.ndarray:
    """Gradient w.r.t. the hands with targets and masks held fixed."""
    H, V, M = _check_contact(hands, targets, masks)
    return M[..., None] * np.sign(H - V)


# --- foot-floor -----------------------------------------------------------


def _check_feet(feet):
    F = np.asarray(feet, dtype=float)
    if F.ndim != 3 or F.shape[1:] != (2, 3):
        raise InvalidInput(f"feet must be T x 2 x 3, got {F.shape}")
    return F


def f_feet(feet, h: float = FOOT_HEIGHT) -> float:
    """Sum over frames of |min foot height - h|."""
    if h < 0:
        raise InvalidInput("foot height threshold must be non-negative")
    F = _check_feet(feet)
    return float(np.sum(np.abs(F[:, :, 2].min(axis=1) - h)))


def f_feet_grad(feet, h: float = FOOT_HEIGHT) -> np.ndarray:
    """Subgradient: only the lower foot's height moves; ties go to the left foot."""
    F = _check_feet(feet)
    z = F[:, :, 2]
    low = z.argmin(axis=1)
    g = np.zeros_like(F)
    g[np.arange(len(F)), low, 2] = np.sign(z[np.arange(len(F)), low] - h)
    return g


# --- objectives over packed states ----------------------------------------


@dataclass
class QuadraticObjective:
    """F(x) = 0.5 * ||x - c||^2."""

    center: np.ndarray

    def value(self, x) -> float:
        return 0.5 * float(np.sum((np.asarray(x) - self.center) ** 2))

    def grad(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) - self.center


@dataclass
class FrozenContact:
    layout: object
    hand_joints: tuple
    targets: np.ndarray
    masks: np.ndarray

    def _hands(self, x):
        x = np.asarray(x)
        return np.stack([x[:, self.layout.joint_cols(j)] for j in self.hand_joints], axis=1)

    def value(self, x) -> float:
        return f_contact(self._hands(x), self.targets, self.masks)

    def grad(self, x) -> np.ndarray:
        g = np.zeros(np.shape(x))
        gh = f_contact_grad(self._hands(x), self.targets, self.masks)
        for k, j in enumerate(self.hand_joints):
            g[:, self.layout.joint_cols(j)] += gh[:, k]
        return g


@dataclass
class ContactObjective:
    """Hand-object contact on a packed state. Object vertices are given in the
    object frame and posed with each frame's object rotation and translation."""

    layout: object
    skeleton: object
    object_points: np.ndarray
    threshold: float = CONTACT_THRESHOLD

    def at(self, x) -> FrozenContact:
        x = np.asarray(x, dtype=float)
        parts = self.layout.unpack(x)
        pts = np.asarray(self.object_points, dtype=float)
        verts = np.einsum("tab,mb->tma", parts["obj_R"], pts) + parts["obj_t"][:, None, :]
        hand_joints = tuple(self.skeleton.hands)
        hands = np.stack([x[:, self.layout.joint_cols(j)] for j in hand_joints], axis=1)
        targets, masks = contact_targets(hands, verts, self.threshold)
        return FrozenContact(self.layout, hand_joints, targets, masks)

    def value(self, x) -> float:
        return self.at(x).value(x)


@dataclass
class FeetObjective:
    layout: object
    skeleton: object
    h: float = FOOT_HEIGHT

    def _feet(self, x):
        x = np.asarray(x)
        return np.stack([x[:, self.layout.joint_cols(j)] for j in self.skeleton.feet], axis=1)

    def value(self, x) -> float:
        return f_feet(self._feet(x), self.h)

    def grad(self, x) -> np.ndarray:
        g = np.zeros(np.shape(x))
        gf = f_feet_grad(self._feet(x), self.h)
        for k, j in enumerate(self.skeleton.feet):
            g[:, self.layout.joint_cols(j)] += gf[:, k]
        return g


@dataclass
class SumObjective:
    terms: tuple
    weights: Optional[tuple] = None

    def _w(self):
        return self.weights or (1.0,) * len(self.terms)

    def at(self, x):
        return SumObjective(tuple(t.at(x) if hasattr(t, "at") else t for t in self.terms), self.weights)

    def value(self, x) -> float:
        return float(sum(w * (t.value(x) if hasattr(t, "value") else t(x)) for w, t in zip(self._w(), self.terms)))

    def grad(self, x) -> np.ndarray:
        return sum(w * objective_grad(t, x) for w, t in zip(self._w(), self.terms))

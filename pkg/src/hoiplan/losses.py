"""Training objectives as plain formulas: reconstruction, FK, hinge adversarial,
the weighted total, discriminator inputs and adaptive adversarial weighting."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .geometry import Skeleton, forward_kinematics

LAMBDA_G_MIN = 0.01
LAMBDA_G_MAX = 0.05


def l1_recon(pred, target) -> float:
    """Mean absolute difference over all entries."""
    p, t = np.asarray(pred, dtype=float), np.asarray(target, dtype=float)
    if p.shape != t.shape:
        raise InvalidInput(f"shape mismatch: {p.shape} vs {t.shape}")
    return float(np.mean(np.abs(p - t)))


def distal_positions(root, joint_rotations, skel: Skeleton) -> np.ndarray:
    """Hands then feet, shape (..., 4, 3)."""
    g = forward_kinematics(root, joint_rotations, skel)
    return g[..., skel.hands + skel.feet, :]


def fk_loss(pred_rotations, target_distal, skel: Skeleton, root) -> float:
    """Summed L1 between FK hands/feet of the predicted rotations and the targets.

    ``target_distal`` is (T, 4, 3) ordered left hand, right hand, left foot, right foot.
    """
    pred = distal_positions(root, pred_rotations, skel)
    tgt = np.asarray(target_distal, dtype=float)
    if pred.shape != tgt.shape:
        raise InvalidInput(f"target shape {tgt.shape} does not match FK output {pred.shape}")
    return float(np.sum(np.abs(pred - tgt)))


def _scores(s, name):
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.size == 0:
        raise InvalidInput(f"{name} is empty")
    return s


def hinge_d_loss(s_real, s_fake) -> float:
    r, f = _scores(s_real, "s_real"), _scores(s_fake, "s_fake")
    if r.size != f.size:
        raise InvalidInput(f"score lengths differ: {r.size} vs {f.size}")
    return float(np.mean(np.maximum(1 - r, 0) + np.maximum(1 + f, 0)))


def gen_adv_loss(s_fake) -> float:
    return float(-np.mean(_scores(s_fake, "s_fake")))


def farthest_point_sample(points, m: int = 64, seed: int = 0) -> np.ndarray:
    """Greedy farthest-point subset of size ``m``; the first pick is seeded."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0 or m < 1:
        raise InvalidInput("need at least one point and m >= 1")
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(len(pts)))]
    d = np.linalg.norm(pts - pts[chosen[0]], axis=1)
    for _ in range(min(m, len(pts)) - 1):
        nxt = int(d.argmax())
        chosen.append(nxt)
        d = np.minimum(d, np.linalg.norm(pts - pts[nxt], axis=1))
    out = pts[chosen]
    if m > len(pts):  # cycle through when the object has fewer points than requested
        out = out[np.arange(m) % len(out)]
    return out


def discriminator_input(motion, object_points, skel: Skeleton) -> np.ndarray:
    """Per-frame rows ``[hands(6) | feet(6) | posed object points(3M)]``."""
    B = np.asarray(object_points, dtype=float).reshape(-1, 3)
    if len(B) == 0:
        raise InvalidInput("need at least one object point")
    joints = motion.global_joints(skel)
    T = motion.n_frames
    hands = joints[:, skel.hands, :].reshape(T, 6)
    feet = joints[:, skel.feet, :].reshape(T, 6)
    posed = np.einsum("tab,mb->tma", motion.obj_R, B) + motion.obj_t[:, None, :]
    return np.concatenate([hands, feet, posed.reshape(T, -1)], axis=1)


@dataclass
class LossWeights:
    lambda_tg: float = 0.1
    lambda_ag: float = 1.0
    lambda_fk: float = 1.0
    lambda_g: float = 0.03

    def __post_init__(self):
        for k, v in vars(self).items():
            if not v >= 0:
                raise InvalidInput(f"{k} must be non-negative")


def total_loss(parts: dict, w: LossWeights = LossWeights()) -> float:
    keys = ("tg", "ag", "fk", "g")
    missing = [k for k in keys if k not in parts]
    if missing:
        raise InvalidInput(f"missing loss parts {missing}")
    return float(
        w.lambda_tg * parts["tg"] + w.lambda_ag * parts["ag"] + w.lambda_fk * parts["fk"] + w.lambda_g * parts["g"]
    )


def adapt_lambda_g(current: float, d_accuracy: float, up: float = 0.8, down: float = 0.6, factor: float = 1.05) -> float:
    """Strengthen the adversarial term when the discriminator is winning, relax it when it is losing."""
    if d_accuracy > up:
        current = current * factor
    elif d_accuracy < down:
        current = current / factor
    return float(min(max(current, LAMBDA_G_MIN), LAMBDA_G_MAX))


def discriminator_accuracy(s_real, s_fake) -> float:
    """Fraction of frames scored with the correct sign (real > 0, fake < 0)."""
    r, f = _scores(s_real, "s_real"), _scores(s_fake, "s_fake")
    return float((np.sum(r > 0) + np.sum(f < 0)) / (r.size + f.size))


class LambdaGScheduler:
    """Keeps a running window of discriminator accuracies and adapts lambda_G after each update."""

    def __init__(self, initial: float = 0.03, window: int = 100):
        if not LAMBDA_G_MIN <= initial <= LAMBDA_G_MAX:
            raise InvalidInput(f"initial lambda_G must lie in [{LAMBDA_G_MIN}, {LAMBDA_G_MAX}]")
        self.value = float(initial)
        self.history = deque(maxlen=window)

    @property
    def running_accuracy(self) -> float:
        return float(np.mean(self.history)) if self.history else 0.7

    def update(self, s_real, s_fake) -> float:
        self.history.append(discriminator_accuracy(s_real, s_fake))
        self.value = adapt_lambda_g(self.value, self.running_accuracy)
        return self.value

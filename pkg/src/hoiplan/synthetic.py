"""Small procedural motions for tests and demos: a person carrying a box forward."""
from __future__ import annotations

import numpy as np

from .geometry import Skeleton, axis_angle_to_matrix, matrix_to_rot6d
from .metrics import MotionSequence

BOX_HALF = np.array([0.19, 0.15, 0.12])


def box_surface_points(half=BOX_HALF, n_per_face: int = 16, seed: int = 0) -> np.ndarray:
    """Points spread over the six faces of an axis-aligned box centered at the origin."""
    rng = np.random.default_rng(seed)
    half = np.asarray(half, dtype=float)
    out = []
    for axis in range(3):
        for sign in (-1.0, 1.0):
            p = rng.uniform(-1, 1, (n_per_face, 3)) * half
            p[:, axis] = sign * half[axis]
            out.append(p)
    return np.concatenate(out)


def carry_motion(skel: Skeleton, n_frames: int = 60, speed: float = 0.01, swing: float = 0.3, seed: int = 0, jitter: float = 0.0) -> MotionSequence:
    """Walk along +y at ``speed`` m/frame holding a box between the hands.

    Legs swing about the x axis; the arms are rotated to point forward so the
    wrists rest on the box sides. ``jitter`` adds seeded noise to the root.
    Assumes the default 22-joint layout (names used to find hips and shoulders).
    """
    rng = np.random.default_rng(seed)
    idx = {n: i for i, n in enumerate(skel.names)}
    J = skel.n_joints
    t = np.arange(n_frames)
    phase = 2 * np.pi * t / 30.0
    rots = np.tile(np.eye(3), (n_frames, J, 1, 1))
    for name, sgn in (("left_hip", 1.0), ("right_hip", -1.0)):
        if name in idx:
            for k in range(n_frames):
                rots[k, idx[name]] = axis_angle_to_matrix([1, 0, 0], sgn * swing * np.sin(phase[k]))
    if "left_shoulder" in idx:
        rots[:, idx["left_shoulder"]] = axis_angle_to_matrix([0, 0, 1], np.pi / 2)
        rots[:, idx["right_shoulder"]] = axis_angle_to_matrix([0, 0, 1], -np.pi / 2)
    root = np.zeros((n_frames, 3))
    root[:, 1] = speed * t
    root[:, 2] = 0.93
    root += jitter * rng.standard_normal(root.shape)
    joints6d = matrix_to_rot6d(rots)
    m = MotionSequence(root, joints6d, np.zeros((n_frames, 3)), np.tile(np.eye(3), (n_frames, 1, 1)))
    g = m.global_joints(skel)
    hands = g[:, skel.hands]
    obj_t = hands.mean(axis=1)
    return MotionSequence(root, joints6d, obj_t, m.obj_R)

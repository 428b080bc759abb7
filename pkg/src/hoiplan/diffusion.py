"""DDPM machinery with clean-sample (x0) prediction and inpainting-style conditioning.

Steps are 1-indexed: ``n = 1..N``. ``alpha_bar(0)`` is 1 by convention.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Protocol

import numpy as np

from .errors import ContractViolation, InvalidInput

# --- schedule -------------------------------------------------------------


@dataclass(frozen=True)
class NoiseSchedule:
    beta: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.beta, dtype=float).reshape(-1)
        if b.size == 0 or np.any(b <= 0) or np.any(b >= 1):
            raise InvalidInput("betas must lie in (0, 1)")
        object.__setattr__(self, "beta", b)
        alpha = 1.0 - b
        alpha_bar = np.cumprod(alpha)
        one_minus = 1.0 - alpha_bar
        one_minus[0] = b[0]  # exact: 1 - (1 - b) can lose the last bit
        prev = np.concatenate([[1.0], alpha_bar[:-1]])
        prev_one_minus = np.concatenate([[0.0], one_minus[:-1]])
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "alpha_bar", alpha_bar)
        object.__setattr__(self, "one_minus_alpha_bar", one_minus)
        object.__setattr__(self, "alpha_bar_prev", prev)
        object.__setattr__(self, "posterior_var", b * prev_one_minus / one_minus)
        # posterior-mean coefficients for x0_hat and x_n
        object.__setattr__(self, "coef_x0", np.sqrt(prev) * b / one_minus)
        object.__setattr__(self, "coef_xn", np.sqrt(alpha) * prev_one_minus / one_minus)

    @property
    def n_steps(self) -> int:
        return self.beta.size

    def ab(self, n: int) -> float:
        """alpha_bar at step n, with alpha_bar(0) = 1."""
        self._check(n, allow_zero=True)
        return 1.0 if n == 0 else float(self.alpha_bar[n - 1])

    def sigma_sq(self, n: int) -> float:
        self._check(n)
        return float(self.posterior_var[n - 1])

    def _check(self, n: int, allow_zero: bool = False):
        lo = 0 if allow_zero else 1
        if not lo <= n <= self.n_steps:
            raise InvalidInput(f"step {n} outside [{lo}, {self.n_steps}]")


def make_schedule(n_steps: int = 1000, beta_start: float = 1e-4, beta_end: float = 2e-2) -> NoiseSchedule:
    """Linearly spaced betas."""
    if n_steps < 1:
        raise InvalidInput("need at least one step")
    if not 0 < beta_start <= beta_end < 1:
        raise InvalidInput("require 0 < beta_start <= beta_end < 1")
    return NoiseSchedule(np.linspace(beta_start, beta_end, n_steps))


# --- forward / reverse ----------------------------------------------------


def _same_shape(*arrays):
    shapes = {np.shape(a) for a in arrays}
    if len(shapes) != 1:
        raise InvalidInput(f"shape mismatch: {sorted(shapes)}")


def forward_sample(x0, n: int, noise, sched: NoiseSchedule) -> np.ndarray:
    """Draw from q(x_n | x_0) given the standard-normal ``noise``."""
    x0 = np.asarray(x0, dtype=float)
    noise = np.asarray(noise, dtype=float)
    _same_shape(x0, noise)
    if n == 0:
        return x0.copy()
    ab = sched.ab(n)
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * noise


def posterior_mean(x_n, n: int, x0_hat, sched: NoiseSchedule) -> np.ndarray:
    sched._check(n)
    return sched.coef_x0[n - 1] * np.asarray(x0_hat) + sched.coef_xn[n - 1] * np.asarray(x_n)


def reverse_step(x_n, n: int, x0_hat, sched: NoiseSchedule, noise=None) -> np.ndarray:
    """One ancestral step x_n -> x_{n-1}; ``noise`` is ignored at n = 1."""
    x_n = np.asarray(x_n, dtype=float)
    x0_hat = np.asarray(x0_hat, dtype=float)
    _same_shape(x_n, x0_hat)
    mu = posterior_mean(x_n, n, x0_hat, sched)
    var = sched.posterior_var[n - 1]
    if n == 1 or noise is None or var == 0:
        return mu
    noise = np.asarray(noise, dtype=float)
    _same_shape(x_n, noise)
    return mu + np.sqrt(var) * noise


# --- conditioning ---------------------------------------------------------


def apply_mask(x, clean, mask) -> np.ndarray:
    x, clean, mask = np.asarray(x, dtype=float), np.asarray(clean, dtype=float), np.asarray(mask, dtype=bool)
    _same_shape(x, clean, mask)
    return np.where(mask, clean, x)


@dataclass(frozen=True)
class StateLayout:
    """Column layout of a full interaction state row.

    ``[obj_pos(3) | obj_rot(9, row-major) | joint positions (3J, root first) | joint 6D (6J)]``
    so that D = 12 + D_h with D_h = 9J. Trajectory rows are ``[obj_pos(3) | root_pos(3)]``.
    """

    n_joints: int

    @property
    def dim(self) -> int:
        return 12 + 9 * self.n_joints

    obj_pos = slice(0, 3)
    obj_rot = slice(3, 12)

    @property
    def root_pos(self) -> slice:
        return slice(12, 15)

    @property
    def joint_pos(self) -> slice:
        return slice(12, 12 + 3 * self.n_joints)

    @property
    def joint_rot6d(self) -> slice:
        return slice(12 + 3 * self.n_joints, self.dim)

    def joint_cols(self, j: int) -> slice:
        s = 12 + 3 * j
        return slice(s, s + 3)

    def pack(self, obj_t, obj_R, joints, joints6d) -> np.ndarray:
        T = len(obj_t)
        return np.concatenate(
            [
                np.asarray(obj_t).reshape(T, 3),
                np.asarray(obj_R).reshape(T, 9),
                np.asarray(joints).reshape(T, 3 * self.n_joints),
                np.asarray(joints6d).reshape(T, 6 * self.n_joints),
            ],
            axis=1,
        )

    def unpack(self, x) -> dict:
        x = np.asarray(x)
        T = x.shape[0]
        return {
            "obj_t": x[:, self.obj_pos],
            "obj_R": x[:, self.obj_rot].reshape(T, 3, 3),
            "joints": x[:, self.joint_pos].reshape(T, self.n_joints, 3),
            "joints6d": x[:, self.joint_rot6d].reshape(T, self.n_joints, 6),
        }


TRAJ_DIM = 6
TRAJ_OBJ = slice(0, 3)
TRAJ_ROOT = slice(3, 6)


def trajectory_mask(n_frames: int) -> np.ndarray:
    """Start frame fully clean plus the goal object position in the last frame."""
    m = np.zeros((n_frames, TRAJ_DIM), dtype=bool)
    m[0] = True
    m[-1, TRAJ_OBJ] = True
    return m


def full_state_mask(n_frames: int, layout: StateLayout, with_trajectories: bool = True) -> np.ndarray:
    """Start frame and end-frame object position; optionally the object and root
    trajectories of every frame (action-generator conditioning)."""
    m = np.zeros((n_frames, layout.dim), dtype=bool)
    m[0] = True
    m[-1, layout.obj_pos] = True
    if with_trajectories:
        m[:, layout.obj_pos] = True
        m[:, layout.root_pos] = True
    return m


# --- denoisers ------------------------------------------------------------


class Denoiser(Protocol):
    def __call__(self, x_n: np.ndarray, n: int, cond: Any) -> np.ndarray: ...


class OracleDenoiser:
    """Always predicts ``target``."""

    def __init__(self, target):
        self.target = np.asarray(target, dtype=float)

    def __call__(self, x_n, n, cond=None):
        return self.target.copy()


class NoisyOracleDenoiser:
    """``target`` plus deterministic per-step Gaussian error of size ``scale * sqrt(1 - alpha_bar_n)``."""

    def __init__(self, target, sched: NoiseSchedule, scale: float = 0.1, seed: int = 0):
        self.target = np.asarray(target, dtype=float)
        self.sched = sched
        self.scale = scale
        self.seed = seed

    def __call__(self, x_n, n, cond=None):
        rng = np.random.default_rng([self.seed, n])
        err = rng.standard_normal(self.target.shape)
        return self.target + self.scale * np.sqrt(1.0 - self.sched.ab(n)) * err


class AffineShrinkDenoiser:
    """Predicts ``shrink * x_n + offset``; not an oracle, so outputs depend on the noise draw."""

    def __init__(self, shrink: float = 0.5, offset=0.0):
        self.shrink = shrink
        self.offset = offset

    def __call__(self, x_n, n, cond=None):
        return self.shrink * np.asarray(x_n) + self.offset


# --- sampling -------------------------------------------------------------


@dataclass
class Guidance:
    """Reconstruction guidance applied to x0_hat at steps n <= ``start_step``."""

    objective: Any
    alpha: float = 1.0
    start_step: Optional[int] = None

    def active(self, n: int) -> bool:
        return self.start_step is None or n <= self.start_step


def sample(
    denoiser: Denoiser,
    clean,
    mask,
    sched: NoiseSchedule,
    rng: np.random.Generator,
    cond: Any = None,
    guidance: Optional[Guidance] = None,
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> np.ndarray:
    """Ancestral DDPM sampling from x_N ~ N(0, I) down to x_0.

    Masked entries are overwritten with ``clean`` on the initial draw and after
    every reverse step. ``callback(n, x_n)`` sees each intermediate state,
    including x_N and the returned x_0.
    """
    from .guidance import guidance_update

    clean = np.asarray(clean, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    _same_shape(clean, mask)
    N = sched.n_steps
    x = apply_mask(rng.standard_normal(clean.shape), clean, mask)
    if callback:
        callback(N, x)
    for n in range(N, 0, -1):
        x0_hat = np.asarray(denoiser(x, n, cond), dtype=float)
        if x0_hat.shape != x.shape:
            raise ContractViolation(f"denoiser returned shape {x0_hat.shape}, expected {x.shape}")
        if guidance is not None and guidance.active(n):
            x0_hat = guidance_update(x0_hat, guidance.objective, guidance.alpha, sched.sigma_sq(n))
        noise = rng.standard_normal(x.shape) if n > 1 else None
        x = apply_mask(reverse_step(x, n, x0_hat, sched, noise), clean, mask)
        if callback:
            callback(n - 1, x)
    return x


# --- two-stage generation -------------------------------------------------


@dataclass
class InteractionCondition:
    """Start state row, goal object position and frame count for one interaction."""

    start_state: np.ndarray
    goal_obj_pos: np.ndarray
    n_frames: int
    layout: StateLayout
    payload: Any = None

    def __post_init__(self):
        self.start_state = np.asarray(self.start_state, dtype=float).reshape(-1)
        self.goal_obj_pos = np.asarray(self.goal_obj_pos, dtype=float).reshape(3)
        if self.start_state.size != self.layout.dim:
            raise InvalidInput(f"start state has {self.start_state.size} values, layout needs {self.layout.dim}")
        if self.n_frames < 2:
            raise InvalidInput("need at least two frames")

    def trajectory_clean(self) -> np.ndarray:
        c = np.zeros((self.n_frames, TRAJ_DIM))
        c[0, TRAJ_OBJ] = self.start_state[self.layout.obj_pos]
        c[0, TRAJ_ROOT] = self.start_state[self.layout.root_pos]
        c[-1, TRAJ_OBJ] = self.goal_obj_pos
        return c

    def state_clean(self, trajectories=None) -> np.ndarray:
        c = np.zeros((self.n_frames, self.layout.dim))
        c[0] = self.start_state
        c[-1, self.layout.obj_pos] = self.goal_obj_pos
        if trajectories is not None:
            c[:, self.layout.obj_pos] = trajectories[:, TRAJ_OBJ]
            c[:, self.layout.root_pos] = trajectories[:, TRAJ_ROOT]
        return c


@dataclass
class GenerationResult:
    trajectories: np.ndarray
    states: np.ndarray
    ag_clean: np.ndarray = field(repr=False)


def generate_interaction(
    tg: Optional[Denoiser],
    ag: Denoiser,
    condition: InteractionCondition,
    sched: NoiseSchedule,
    rng: np.random.Generator,
    teacher_trajectories=None,
    guidance: Optional[Guidance] = None,
) -> GenerationResult:
    """Sample trajectories with ``tg``, then the full state with ``ag`` holding
    those trajectories clean. Passing ``teacher_trajectories`` (T x 6) skips the
    trajectory stage and conditions on them instead."""
    T = condition.n_frames
    if teacher_trajectories is not None:
        traj = np.asarray(teacher_trajectories, dtype=float)
    else:
        if tg is None:
            raise InvalidInput("a trajectory denoiser is required without teacher trajectories")
        traj = sample(tg, condition.trajectory_clean(), trajectory_mask(T), sched, rng, condition.payload)
    if traj.shape != (T, TRAJ_DIM):
        raise ContractViolation(f"trajectory stage produced shape {traj.shape}, expected {(T, TRAJ_DIM)}")
    clean = condition.state_clean(traj)
    mask = full_state_mask(T, condition.layout, with_trajectories=True)
    states = sample(ag, clean, mask, sched, rng, condition.payload, guidance)
    return GenerationResult(traj, states, clean)

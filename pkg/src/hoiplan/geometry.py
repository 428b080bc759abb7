"""Rotations, forward kinematics, rigid transforms, signed distance fields and BPS."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import InvalidInput

_EPS = 1e-12


# --- rotations ------------------------------------------------------------


def rot6d_to_matrix(r6d) -> np.ndarray:
    """Decode (..., 6) first-two-column encodings into (..., 3, 3) rotations by Gram-Schmidt."""
    r = np.asarray(r6d, dtype=float)
    if r.shape[-1] != 6:
        raise InvalidInput(f"expected trailing dimension 6, got {r.shape}")
    a1, a2 = r[..., :3], r[..., 3:]
    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    if np.any(n1 < _EPS):
        raise InvalidInput("degenerate 6D rotation: first column is zero")
    c1 = a1 / n1
    resid = a2 - np.sum(c1 * a2, axis=-1, keepdims=True) * c1
    n2 = np.linalg.norm(resid, axis=-1, keepdims=True)
    if np.any(n2 < _EPS):
        raise InvalidInput("degenerate 6D rotation: columns are parallel")
    c2 = resid / n2
    c3 = np.cross(c1, c2)
    return np.stack([c1, c2, c3], axis=-1)


def matrix_to_rot6d(R) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    return np.concatenate([R[..., :, 0], R[..., :, 1]], axis=-1)


def axis_angle_to_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues' formula; convenient for building test poses."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


def is_rotation(R, tol: float = 1e-6) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape[-2:] != (3, 3):
        return False
    eye = np.broadcast_to(np.eye(3), R.shape)
    ortho = np.abs(np.swapaxes(R, -1, -2) @ R - eye).max() <= tol
    return bool(ortho and np.all(np.abs(np.linalg.det(R) - 1.0) <= tol))


def transform_points(points, R, t) -> np.ndarray:
    """Apply ``p -> R p + t`` to an (N, 3) array."""
    R = np.asarray(R, dtype=float)
    if not is_rotation(R):
        raise InvalidInput("R is not a rotation matrix")
    p = np.asarray(points, dtype=float)
    return p @ R.T + np.asarray(t, dtype=float)


# --- skeleton / FK --------------------------------------------------------


@dataclass(frozen=True)
class Skeleton:
    parents: tuple[int, ...]
    offsets: np.ndarray
    lhand: int
    rhand: int
    lfoot: int
    rfoot: int
    lankle: int = -1
    rankle: int = -1
    names: tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.parents)
        off = np.asarray(self.offsets, dtype=float)
        if off.shape != (n, 3):
            raise InvalidInput(f"offsets must be ({n}, 3), got {off.shape}")
        if n == 0 or self.parents[0] != 0:
            raise InvalidInput("joint 0 must be the root (its own parent)")
        for j in range(1, n):
            if not 0 <= self.parents[j] < j:
                raise InvalidInput(f"joint {j} must have a parent with a smaller index")
        if self.lankle < 0:
            object.__setattr__(self, "lankle", self.lfoot)
        if self.rankle < 0:
            object.__setattr__(self, "rankle", self.rfoot)
        for idx in (self.lhand, self.rhand, self.lfoot, self.rfoot, self.lankle, self.rankle):
            if not 0 <= idx < n:
                raise InvalidInput(f"distal index {idx} out of range")
        object.__setattr__(self, "offsets", off)

    @property
    def n_joints(self) -> int:
        return len(self.parents)

    @property
    def hands(self) -> list[int]:
        return [self.lhand, self.rhand]

    @property
    def feet(self) -> list[int]:
        return [self.lfoot, self.rfoot]

    @property
    def sliding_joints(self) -> list[int]:
        """Left/right ankle then left/right toe (foot) joints."""
        return [self.lankle, self.rankle, self.lfoot, self.rfoot]


def chain_skeleton(n_bones: int, offset=(0.0, 0.0, 1.0)) -> Skeleton:
    """A straight chain root -> 1 -> ... -> n_bones; handy for tests."""
    parents = tuple([0] + list(range(n_bones)))
    offsets = np.vstack([np.zeros(3)] + [np.asarray(offset, dtype=float)] * n_bones)
    last = n_bones
    return Skeleton(parents, offsets, last, last, last, last)


def forward_kinematics(root_pos, joint_rotations, skel: Skeleton) -> np.ndarray:
    """Global joint positions (..., J, 3) from a root position and local joint rotations.

    ``joint_rotations`` is (..., J, 6) in the 6D encoding or (..., J, 3, 3).
    Joint 0 sits at ``root_pos``; every other joint is its parent's position
    plus the parent's global rotation applied to its rest offset.
    """
    rots = np.asarray(joint_rotations, dtype=float)
    if rots.shape[-1] == 6:
        rots = rot6d_to_matrix(rots)
    if rots.shape[-3:] != (skel.n_joints, 3, 3):
        raise InvalidInput(
            f"expected {skel.n_joints} joint rotations, got array of shape {np.shape(joint_rotations)}"
        )
    root = np.asarray(root_pos, dtype=float)
    batch = rots.shape[:-3]
    if root.shape != batch + (3,):
        raise InvalidInput(f"root position shape {root.shape} does not match batch {batch}")
    g_rot = np.empty_like(rots)
    g_pos = np.empty(batch + (skel.n_joints, 3))
    g_rot[..., 0, :, :] = rots[..., 0, :, :]
    g_pos[..., 0, :] = root
    for j in range(1, skel.n_joints):
        p = skel.parents[j]
        g_rot[..., j, :, :] = g_rot[..., p, :, :] @ rots[..., j, :, :]
        g_pos[..., j, :] = g_pos[..., p, :] + np.einsum("...ab,b->...a", g_rot[..., p, :, :], skel.offsets[j])
    return g_pos


# --- signed distance fields ----------------------------------------------


@dataclass(frozen=True)
class SphereSdf:
    center: np.ndarray
    radius: float

    def sample(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return np.linalg.norm(p - self.center, axis=-1) - self.radius


@dataclass(frozen=True)
class BoxSdf:
    center: np.ndarray
    half_extents: np.ndarray

    def sample(self, points) -> np.ndarray:
        q = np.abs(np.asarray(points, dtype=float) - self.center) - self.half_extents
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(q.max(axis=-1), 0.0)
        return outside + inside


@dataclass(frozen=True)
class SdfGrid:
    """Signed distances stored at voxel centers; voxel (0,0,0) is centered on ``origin``."""

    values: np.ndarray
    voxel_size: float
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3 or min(v.shape) < 1:
            raise InvalidInput("SDF grid values must be a non-empty 3D array")
        if not np.all(np.isfinite(v)):
            raise InvalidInput("SDF grid values must be finite")
        if not self.voxel_size > 0:
            raise InvalidInput("voxel size must be positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape

    def sample(self, points) -> np.ndarray:
        """Trilinear interpolation; queries outside the grid are clamped to the
        boundary and the Euclidean excess distance is added."""
        p = np.asarray(points, dtype=float)
        shape = p.shape[:-1]
        p = p.reshape(-1, 3)
        origin = np.asarray(self.origin)
        dims = np.asarray(self.values.shape)
        u = (p - origin) / self.voxel_size
        uc = np.clip(u, 0, dims - 1)
        excess = np.linalg.norm((u - uc) * self.voxel_size, axis=1)
        i0 = np.minimum(np.floor(uc).astype(int), np.maximum(dims - 2, 0))
        f = uc - i0
        i1 = np.minimum(i0 + 1, dims - 1)
        out = np.zeros(len(p))
        v = self.values
        for cx in (0, 1):
            wx = f[:, 0] if cx else 1 - f[:, 0]
            ix = i1[:, 0] if cx else i0[:, 0]
            for cy in (0, 1):
                wy = f[:, 1] if cy else 1 - f[:, 1]
                iy = i1[:, 1] if cy else i0[:, 1]
                for cz in (0, 1):
                    wz = f[:, 2] if cz else 1 - f[:, 2]
                    iz = i1[:, 2] if cz else i0[:, 2]
                    out += wx * wy * wz * v[ix, iy, iz]
        return (out + excess).reshape(shape)

    def voxel_centers(self) -> np.ndarray:
        idx = np.indices(self.values.shape).reshape(3, -1).T
        return np.asarray(self.origin) + idx * self.voxel_size


Sdf = Union[SphereSdf, BoxSdf, SdfGrid]


def sdf_sphere(center, radius: float) -> SphereSdf:
    if not radius > 0:
        raise InvalidInput("sphere radius must be positive")
    return SphereSdf(np.asarray(center, dtype=float), float(radius))


def sdf_box(center, half_extents) -> BoxSdf:
    h = np.asarray(half_extents, dtype=float)
    if h.shape != (3,) or np.any(h <= 0):
        raise InvalidInput("box half extents must be three positive numbers")
    return BoxSdf(np.asarray(center, dtype=float), h)


def sdf_from_occupancy(occupied, voxel_size: float, origin=(0.0, 0.0, 0.0)) -> SdfGrid:
    """Two-sided Euclidean distance transform of a solid voxel mask.

    The surface is taken halfway between voxel centers, so values are
    ``(d - 0.5) * voxel_size`` outside and ``-(d - 0.5) * voxel_size`` inside.
    """
    occ = np.asarray(occupied, dtype=bool)
    if occ.ndim != 3:
        raise InvalidInput("occupancy must be a 3D array")
    if not voxel_size > 0:
        raise InvalidInput("voxel size must be positive")
    if not occ.any() or occ.all():
        raise InvalidInput("occupancy needs both solid and free voxels")
    d_out = ndimage.distance_transform_edt(~occ)
    d_in = ndimage.distance_transform_edt(occ)
    sdf = np.where(occ, -(d_in - 0.5), d_out - 0.5) * voxel_size
    return SdfGrid(sdf, float(voxel_size), origin)


def sdf_sample(sdf: Sdf, points) -> np.ndarray:
    return sdf.sample(points)


# --- basis point sets -----------------------------------------------------


@dataclass(frozen=True)
class BpsBasis:
    points: np.ndarray
    seed: int = 0


def make_bps_basis(n_points: int = 1024, seed: int = 0, radius: float = 1.0) -> BpsBasis:
    """Points drawn uniformly from a ball with a fixed seed."""
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((n_points, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = radius * rng.random(n_points) ** (1.0 / 3.0)
    return BpsBasis(d * r[:, None], seed)


def bps_encode(object_points, basis: BpsBasis) -> np.ndarray:
    """Distance from each basis point to its nearest object point."""
    pts = np.asarray(object_points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise InvalidInput("object point set is empty")
    dist, _ = cKDTree(pts).query(basis.points)
    return dist

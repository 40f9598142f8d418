"""Core spatial types and primitive operations.

All lengths are millimeters end to end; depth rasters use 0 for an invalid
pixel. Point clouds are plain (n, 3) float64 arrays so every operation stays
a pure numpy function; ``as_points`` is the shared validator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels


def as_points(cloud) -> np.ndarray:
    """Validate and return a point cloud as an (n, 3) float64 array."""
    pts = np.asarray(cloud, dtype=np.float64)
    if pts.ndim == 1 and pts.size == 0:
        return pts.reshape(0, 3)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) point cloud, got shape {pts.shape}")
    if pts.size and not np.isfinite(pts).all():
        raise ValueError("point cloud contains non-finite coordinates")
    return pts


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole camera parameters in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


@dataclass(frozen=True)
class Pose:
    """Rigid transform: p_out = rotation @ p + translation (translation in mm)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if np.abs(r.T @ r - np.eye(3)).max() > 1e-9:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation must be proper (det +1)")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m) -> "Pose":
        m = np.asarray(m, dtype=np.float64).reshape(4, 4)
        return cls(m[:3, :3], m[:3, 3])

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)


@dataclass(frozen=True)
class DepthImage:
    """Depth raster in millimeters; 0 marks an invalid pixel."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2:
            raise ValueError(f"depth raster must be 2-D, got shape {d.shape}")
        if not np.isfinite(d).all():
            raise ValueError("depth raster contains non-finite values")
        if d.size and d.min() < 0:
            raise ValueError("depth values must be non-negative")
        object.__setattr__(self, "data", d)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class VoxelParams:
    """Two-stage voxel sizes: coarse for correspondence search, fine for storage."""

    correspondence_voxel_mm: float = 100.0
    final_voxel_mm: float = 50.0

    def __post_init__(self):
        if self.correspondence_voxel_mm <= 0 or self.final_voxel_mm <= 0:
            raise ValueError("voxel sizes must be positive")
        if self.final_voxel_mm >= self.correspondence_voxel_mm:
            raise ValueError("final voxel must be smaller than correspondence voxel")


def backproject(depth: DepthImage, k: CameraIntrinsics, mask=None) -> np.ndarray:
    """Lift valid depth pixels to camera-frame 3-D points.

    Points come out in row-major scan order as
    (z*(u-cx)/fx, z*(v-cy)/fy, z) for each pixel (u, v) with depth z > 0
    (and mask true, when a mask is given).
    """
    if (depth.height, depth.width) != (k.height, k.width):
        raise ValueError(
            f"depth raster {depth.width}x{depth.height} does not match "
            f"intrinsics {k.width}x{k.height}")
    valid = depth.data > 0
    if mask is not None:
        m = np.asarray(mask, dtype=bool)
        if m.shape != depth.data.shape:
            raise ValueError(f"mask shape {m.shape} does not match depth {depth.data.shape}")
        valid &= m
    v, u = np.nonzero(valid)
    z = depth.data[v, u]
    x = z * (u - k.cx) / k.fx
    y = z * (v - k.cy) / k.fy
    return np.column_stack([x, y, z]) if z.size else np.empty((0, 3))


def project(cloud, k: CameraIntrinsics) -> np.ndarray:
    """Forward pinhole model: (n, 3) camera-frame points to (n, 2) pixel coords."""
    pts = as_points(cloud)
    z = pts[:, 2]
    u = pts[:, 0] * k.fx / z + k.cx
    v = pts[:, 1] * k.fy / z + k.cy
    return np.column_stack([u, v])


def transform(cloud, pose: Pose) -> np.ndarray:
    """Apply a rigid transform to every point."""
    pts = as_points(cloud)
    return pts @ pose.rotation.T + pose.translation


def voxel_downsample(cloud, voxel_mm: float) -> np.ndarray:
    """One centroid per occupied voxel; empty input gives an empty cloud.

    The voxel index of a point is floor(p / voxel_mm) per axis with the world
    origin as grid origin (true floor for negative coordinates).
    """
    if voxel_mm <= 0:
        raise ValueError("voxel size must be positive")
    return kernels.voxel_downsample(as_points(cloud), voxel_mm)


def nearest_neighbor(query, cloud) -> tuple[int, float]:
    """Index and Euclidean distance of the cloud point nearest to ``query``.

    Ties break to the lowest index.
    """
    pts = as_points(cloud)
    if pts.shape[0] == 0:
        raise ValueError("nearest_neighbor requires a nonempty cloud")
    q = np.asarray(query, dtype=np.float64).reshape(1, 3)
    idx, d2 = kernels.nn_directed(q, pts)
    return int(idx[0]), float(np.sqrt(d2[0]))

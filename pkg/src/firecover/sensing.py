"""Downward camera geometry, footprints, importance and neighbour relations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# outward edge normals in order: +x, +y, -x, -y
EDGE_NORMALS = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])


@dataclass(frozen=True)
class CameraIntrinsics:
    S1: float = 1e-4
    b: float = 10.0
    theta1: float = math.radians(30.0)
    theta2: float = math.radians(45.0)
    I_min: float = 5.0
    I_max: float = 100.0
    kappa: float = 1e-3

    def __post_init__(self):
        if self.S1 <= 0:
            raise ValueError("pixel area S1 must be positive")
        if self.b <= 0:
            raise ValueError("focal length b must be positive")
        for name in ("theta1", "theta2"):
            a = getattr(self, name)
            if not 0.0 < a < math.pi / 2:
                raise ValueError(f"{name} must lie in (0, pi/2), got {a}")
        if not self.I_min < self.I_max:
            raise ValueError("I_min must be below I_max")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")

    @property
    def tan1(self) -> float:
        return math.tan(self.theta1)

    @property
    def tan2(self) -> float:
        return math.tan(self.theta2)

    @property
    def footprint_scale(self) -> float:
        """S1 / b**2."""
        return self.S1 / (self.b * self.b)


@dataclass(frozen=True)
class UavPose:
    c: tuple[float, float]
    z: float

    def __post_init__(self):
        if self.z < 0:
            raise ValueError("altitude must be non-negative")

    @classmethod
    def of(cls, p) -> "UavPose":
        return cls((float(p[0]), float(p[1])), float(p[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.c[0], self.c[1], self.z])


@dataclass(frozen=True)
class FovRect:
    center: tuple[float, float]
    half_extents: tuple[float, float]

    @property
    def xmin(self) -> float:
        return self.center[0] - self.half_extents[0]

    @property
    def xmax(self) -> float:
        return self.center[0] + self.half_extents[0]

    @property
    def ymin(self) -> float:
        return self.center[1] - self.half_extents[1]

    @property
    def ymax(self) -> float:
        return self.center[1] + self.half_extents[1]

    @property
    def normals(self) -> np.ndarray:
        return EDGE_NORMALS

    def edges(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Edge segments (start, end) matching ``EDGE_NORMALS`` order."""
        x0, x1, y0, y1 = self.xmin, self.xmax, self.ymin, self.ymax
        return [
            (np.array([x1, y0]), np.array([x1, y1])),
            (np.array([x0, y1]), np.array([x1, y1])),
            (np.array([x0, y0]), np.array([x0, y1])),
            (np.array([x0, y0]), np.array([x1, y0])),
        ]

    def contains(self, q) -> bool:
        return self.xmin <= q[0] <= self.xmax and self.ymin <= q[1] <= self.ymax

    def intersects(self, other: "FovRect") -> bool:
        return (abs(self.center[0] - other.center[0]) <= self.half_extents[0] + other.half_extents[0]
                and abs(self.center[1] - other.center[1]) <= self.half_extents[1] + other.half_extents[1])


def _pose(p) -> UavPose:
    return p if isinstance(p, UavPose) else UavPose.of(p)


def fov_rect(pose, cam: CameraIntrinsics) -> FovRect:
    pose = _pose(pose)
    return FovRect(pose.c, (pose.z * cam.tan1, pose.z * cam.tan2))


def fov_contains(pose, cam: CameraIntrinsics, q) -> bool:
    """Per-edge test ``(q - c) . n_k <= z tan(theta_k)`` for all four edges."""
    pose = _pose(pose)
    d = np.array([q[0] - pose.c[0], q[1] - pose.c[1]])
    limits = pose.z * np.array([cam.tan1, cam.tan2, cam.tan1, cam.tan2])
    return bool(np.all(EDGE_NORMALS @ d <= limits))


def pixel_footprint(pose, cam: CameraIntrinsics, q=None) -> float:
    """Ground area imaged by one pixel; the same for every point in the FOV."""
    pose = _pose(pose)
    if q is not None and not fov_contains(pose, cam, q):
        raise ValueError(f"point {tuple(q)} lies outside the field of view")
    return cam.footprint_scale * (cam.b - pose.z) ** 2


def clamp_intensity(I, cam: CameraIntrinsics):
    return np.clip(I, cam.I_min, cam.I_max)


def importance(I, cam: CameraIntrinsics):
    """kappa * (I_max - I) with I clamped into the camera's range."""
    out = cam.kappa * (cam.I_max - clamp_intensity(I, cam))
    return float(out) if np.ndim(out) == 0 else out


def fused_footprint(footprints, w: float) -> float:
    """``(sum 1/f + 1/w)**-1``; a zero footprint gives 0."""
    if w <= 0:
        raise ValueError("prior constant w must be positive")
    total = 1.0 / w
    for f in footprints:
        if f == 0:
            return 0.0
        total += 1.0 / f
    return 1.0 / total


def physical_neighbors(poses, i: int, r: float) -> set[int]:
    if r <= 0:
        raise ValueError("communication radius must be positive")
    P = np.asarray(poses, dtype=float)
    dist = np.linalg.norm(P - P[i], axis=1)
    return {j for j in np.flatnonzero(dist <= r).tolist() if j != i}


def coverage_neighbors(poses, i: int, cam: CameraIntrinsics) -> set[int]:
    P = np.asarray(poses, dtype=float)
    hx, hy = P[:, 2] * cam.tan1, P[:, 2] * cam.tan2
    ok = (np.abs(P[:, 0] - P[i, 0]) <= hx + hx[i]) & (np.abs(P[:, 1] - P[i, 1]) <= hy + hy[i])
    return {j for j in np.flatnonzero(ok).tolist() if j != i}


def sensing_neighbor_bound(z_i: float, z_j: float, cam: CameraIntrinsics, r: float) -> bool:
    """Necessary altitude-sum condition for two UAVs to be sensing neighbours."""
    return z_i + z_j <= r / math.hypot(cam.tan1, cam.tan2)

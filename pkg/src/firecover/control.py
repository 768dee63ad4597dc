"""Two-level UAV controller.

Upper level: gradient of the coverage objective drives a virtual desired
pose.  Lower level: potential fields pull the UAV toward the rendezvous
point (before it sees fire) or its virtual pose (after), and push it away
from neighbours closer than the safe distance.

The objective is integrated over a fire field that is piecewise constant on
grid cells.  FOV rectangles are axis aligned, so the integral splits exactly
into sub-rectangles bounded by grid lines and FOV edges.  The gradient below
is the exact derivative of that discretised objective: edge terms are exact
line integrals along each FOV edge, the altitude interior term is an exact
area integral over the FOV.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fire import GridSpec, IntensityGrid, NumericDomainError
from .sensing import CameraIntrinsics, FovRect, fov_rect, pixel_footprint


@dataclass(frozen=True)
class ControlGains:
    k_s: float = 1.0
    k_step: float = 1.0
    k_r: float = 0.01
    k_d: float = 0.1
    nu: float = 1.0
    d: float = 30.0
    r: float = 100.0
    w: float = 0.01
    zeta_latch: bool = False
    alt_eps: float = 1e-6
    coincident_eps: float = 1e-9

    def __post_init__(self):
        for name in ("k_s", "k_step", "k_r", "k_d", "nu", "d", "r", "w", "alt_eps", "coincident_eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.d < self.r:
            raise ValueError(f"safe distance d={self.d} must be below communication radius r={self.r}")


@dataclass(frozen=True)
class WeightField:
    """Importance ``kappa * dI`` on burning cells, zero elsewhere."""

    grid: GridSpec
    weights: np.ndarray
    burning: np.ndarray

    def lookup(self, xs, ys) -> np.ndarray:
        """Weights on the mesh ``ys x xs`` (shape ``(len(ys), len(xs))``), zero off-grid."""
        g = self.grid
        col = np.floor((np.asarray(xs, dtype=float) - g.origin[0]) / g.cell_size).astype(np.int64)
        row = np.floor((np.asarray(ys, dtype=float) - g.origin[1]) / g.cell_size).astype(np.int64)
        okc = (col >= 0) & (col < g.nx)
        okr = (row >= 0) & (row < g.ny)
        out = self.weights[np.clip(row, 0, g.ny - 1)[:, None], np.clip(col, 0, g.nx - 1)[None, :]]
        return np.where(okr[:, None] & okc[None, :], out, 0.0)


def weight_field(intensity: IntensityGrid, cam: CameraIntrinsics, threshold: float | None = None) -> WeightField:
    """Build the integrand field from an intensity grid.

    A cell burns when it is above both the ignition threshold and the sensor
    floor; its weight is ``kappa * (I_max - clamp(I))``.
    """
    I = intensity.cells
    floor = cam.I_min if threshold is None else max(threshold, cam.I_min)
    burning = I >= floor
    w = np.where(burning, cam.kappa * (cam.I_max - np.clip(I, cam.I_min, cam.I_max)), 0.0)
    return WeightField(intensity.grid, w, burning)


@dataclass(frozen=True)
class SensedPatch:
    """Everything one UAV needs to evaluate its coverage gradient."""

    field: WeightField
    rect: FovRect
    footprint: float
    neighbor_ids: tuple[int, ...]
    # rows of (cx, cy, hx, hy) for each known coverage neighbour
    neighbor_rects: np.ndarray
    neighbor_footprints: np.ndarray

    def _cell_window(self):
        g = self.field.grid
        r = self.rect
        s = g.cell_size
        c0 = max(int(np.floor((r.xmin - g.origin[0]) / s)), 0)
        c1 = min(int(np.ceil((r.xmax - g.origin[0]) / s)), g.nx)
        r0 = max(int(np.floor((r.ymin - g.origin[1]) / s)), 0)
        r1 = min(int(np.ceil((r.ymax - g.origin[1]) / s)), g.ny)
        return r0, r1, c0, c1

    @property
    def sees_fire(self) -> bool:
        """True when a burning cell overlaps the FOV with positive area."""
        r = self.rect
        if r.half_extents[0] <= 0 or r.half_extents[1] <= 0:
            return False
        r0, r1, c0, c1 = self._cell_window()
        if r0 >= r1 or c0 >= c1:
            return False
        return bool(self.field.burning[r0:r1, c0:c1].any())


def _rects_of(poses, cam: CameraIntrinsics) -> np.ndarray:
    P = np.atleast_2d(np.asarray(poses, dtype=float))
    return np.stack([P[:, 0], P[:, 1], P[:, 2] * cam.tan1, P[:, 2] * cam.tan2], axis=1)


def sense(poses, i: int, cam: CameraIntrinsics, field: WeightField, neighbor_ids=()) -> SensedPatch:
    P = np.asarray(poses, dtype=float)
    ids = tuple(sorted(int(j) for j in neighbor_ids if j != i))
    nb = P[list(ids)] if ids else np.zeros((0, 3))
    return SensedPatch(
        field=field,
        rect=fov_rect(P[i], cam),
        footprint=pixel_footprint(P[i], cam),
        neighbor_ids=ids,
        neighbor_rects=_rects_of(nb, cam) if ids else np.zeros((0, 4)),
        neighbor_footprints=cam.footprint_scale * (cam.b - nb[:, 2]) ** 2,
    )


def _breaks(lo: float, hi: float, *candidates: np.ndarray) -> np.ndarray:
    pts = [np.array([lo, hi])]
    for c in candidates:
        c = np.asarray(c, dtype=float).ravel()
        pts.append(c[(c > lo) & (c < hi)])
    return np.unique(np.concatenate(pts))


def _inverse_sum(rects: np.ndarray, footprints: np.ndarray, xs, ys) -> np.ndarray:
    """Sum of 1/f over rectangles covering each mesh point (closed rectangles)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    total = np.zeros((len(ys), len(xs)))
    for (cx, cy, hx, hy), f in zip(rects, footprints):
        inv = np.inf if f == 0 else 1.0 / f
        inx = np.abs(xs - cx) <= hx
        iny = np.abs(ys - cy) <= hy
        total += np.where(iny[:, None] & inx[None, :], inv, 0.0)
    return total


def _fuse(inv_sum: np.ndarray, w: float) -> np.ndarray:
    return 1.0 / (inv_sum + 1.0 / w)


def coverage_objective(poses, cam: CameraIntrinsics, w: float, field: WeightField) -> float:
    """Integral of fused footprint times importance over the burning grid."""
    P = np.atleast_2d(np.asarray(poses, dtype=float))
    g = field.grid
    base = w * field.weights.sum() * g.cell_area
    if len(P) == 0:
        return float(base)
    rects = _rects_of(P, cam)
    fps = cam.footprint_scale * (cam.b - P[:, 2]) ** 2
    xmin, xmax, ymin, ymax = g.extent
    lo_x = max(xmin, float(np.min(rects[:, 0] - rects[:, 2])))
    hi_x = min(xmax, float(np.max(rects[:, 0] + rects[:, 2])))
    lo_y = max(ymin, float(np.min(rects[:, 1] - rects[:, 3])))
    hi_y = min(ymax, float(np.max(rects[:, 1] + rects[:, 3])))
    if lo_x >= hi_x or lo_y >= hi_y:
        return float(base)
    xb = _breaks(lo_x, hi_x, g.x_lines(), rects[:, 0] - rects[:, 2], rects[:, 0] + rects[:, 2])
    yb = _breaks(lo_y, hi_y, g.y_lines(), rects[:, 1] - rects[:, 3], rects[:, 1] + rects[:, 3])
    xm, ym = 0.5 * (xb[1:] + xb[:-1]), 0.5 * (yb[1:] + yb[:-1])
    area = np.outer(np.diff(yb), np.diff(xb))
    h = _fuse(_inverse_sum(rects, fps, xm, ym), w)
    return float(base + np.sum((h - w) * field.lookup(xm, ym) * area))


def _edge_integral(patch: SensedPatch, w: float, k: int) -> float:
    """Integral of ``(h_with_i - h_without_i) * weight`` along FOV edge ``k``."""
    r = patch.rect
    g = patch.field.grid
    nb, nf = patch.neighbor_rects, patch.neighbor_footprints
    if k in (0, 2):
        x = r.xmax if k == 0 else r.xmin
        lo, hi = r.ymin, r.ymax
        if hi <= lo:
            return 0.0
        b = _breaks(lo, hi, g.y_lines(), nb[:, 1] - nb[:, 3], nb[:, 1] + nb[:, 3])
        mid = 0.5 * (b[1:] + b[:-1])
        others = _inverse_sum(nb, nf, [x], mid)[:, 0]
        weight = patch.field.lookup([x], mid)[:, 0]
    else:
        y = r.ymax if k == 1 else r.ymin
        lo, hi = r.xmin, r.xmax
        if hi <= lo:
            return 0.0
        b = _breaks(lo, hi, g.x_lines(), nb[:, 0] - nb[:, 2], nb[:, 0] + nb[:, 2])
        mid = 0.5 * (b[1:] + b[:-1])
        others = _inverse_sum(nb, nf, mid, [y])[0, :]
        weight = patch.field.lookup(mid, [y])[0, :]
    own = np.inf if patch.footprint == 0 else 1.0 / patch.footprint
    diff = _fuse(others + own, w) - _fuse(others, w)
    return float(np.sum(diff * weight * np.diff(b)))


def coverage_gradient(pose, cam: CameraIntrinsics, gains: ControlGains, patch: SensedPatch):
    """Exact gradient of the discretised objective w.r.t. one UAV's pose.

    Returns ``(dO/dc, dO/dz)`` with ``dO/dc`` a length-2 array.
    """
    p = np.asarray(pose, dtype=float)
    z = p[2]
    if abs(cam.b - z) < gains.alt_eps:
        raise NumericDomainError(f"altitude {z} within {gains.alt_eps} of focal length {cam.b}")
    w = gains.w
    E = [_edge_integral(patch, w, k) for k in range(4)]
    grad_c = np.array([E[0] - E[2], E[1] - E[3]])
    grad_z = cam.tan1 * (E[0] + E[2]) + cam.tan2 * (E[1] + E[3])

    r = patch.rect
    if r.half_extents[0] > 0 and r.half_extents[1] > 0:
        g = patch.field.grid
        nb = patch.neighbor_rects
        xb = _breaks(r.xmin, r.xmax, g.x_lines(), nb[:, 0] - nb[:, 2], nb[:, 0] + nb[:, 2])
        yb = _breaks(r.ymin, r.ymax, g.y_lines(), nb[:, 1] - nb[:, 3], nb[:, 1] + nb[:, 3])
        xm, ym = 0.5 * (xb[1:] + xb[:-1]), 0.5 * (yb[1:] + yb[:-1])
        weight = patch.field.lookup(xm, ym)
        if weight.any():
            h = _fuse(_inverse_sum(nb, patch.neighbor_footprints, xm, ym) + 1.0 / patch.footprint, w)
            area = np.outer(np.diff(yb), np.diff(xb))
            denom = cam.footprint_scale * (cam.b - z) ** 3
            grad_z -= float(np.sum(2.0 * h * h / denom * weight * area))
    return grad_c, float(grad_z)


def update_virtual_pose(p_d, delta_u, gains: ControlGains) -> np.ndarray:
    return np.asarray(p_d, dtype=float) - gains.k_step * np.asarray(delta_u, dtype=float)


def attract(target, pose, gain: float) -> np.ndarray:
    return -gain * (np.asarray(pose, dtype=float) - np.asarray(target, dtype=float))


def repulse(pose_i, neighbor_poses, gains: ControlGains, self_id: int = 0, neighbor_ids=None) -> np.ndarray:
    """Sum of repulsive pushes from neighbours closer than the safe distance.

    Coincident neighbours (closer than ``coincident_eps``) push along x, the
    higher id in +x, with magnitude ``nu / eps**2``.
    """
    p = np.asarray(pose_i, dtype=float)
    force = np.zeros(3)
    nbs = np.atleast_2d(np.asarray(neighbor_poses, dtype=float)) if len(neighbor_poses) else np.zeros((0, 3))
    ids = range(len(nbs)) if neighbor_ids is None else neighbor_ids
    for q, j in zip(nbs, ids):
        diff = p - q
        dist = float(np.sqrt(diff @ diff))
        if dist < gains.coincident_eps:
            sign = 1.0 if self_id > j else -1.0
            force[0] += sign * gains.nu / gains.coincident_eps ** 2
        elif dist < gains.d:
            force += gains.nu * (1.0 / dist - 1.0 / gains.d) / dist ** 3 * diff
    return force


def control_law(pose, p_d, zeta: int, p_r, gains: ControlGains, neighbor_poses=(),
                self_id: int = 0, neighbor_ids=None) -> np.ndarray:
    """Velocity command: repulsion plus the gated rendezvous / virtual-pose pull."""
    u = repulse(pose, neighbor_poses, gains, self_id, neighbor_ids)
    if zeta:
        u = u + attract(p_d, pose, gains.k_d)
    else:
        u = u + attract(p_r, pose, gains.k_r)
    return u


def zeta_update(prev_zeta: int, patch: SensedPatch, latch: bool = False) -> int:
    if latch and prev_zeta:
        return 1
    return int(patch.sees_fire)

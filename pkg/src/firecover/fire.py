"""Wildfire growth on a regular grid.

Fire fronts are point heat sources.  Each front radiates a bivariate Gaussian
whose amplitude decays with the front's age, and spreads downwind by the
centre offset of the elliptical growth model.

Spreading rule: every front keeps a spread cursor confined to its own grid
cell.  Each step the cursor advances by ``dt * c * (sin theta, cos theta)``.
When the advanced point leaves the home cell and lands in a cell that has
never burned, a new front is born there (at most ``new_front_budget`` per
step, one per cell); the parent keeps radiating either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


class NumericDomainError(ValueError):
    """Raised when a formula is evaluated outside its mathematical domain."""


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned world rectangle split into square cells.

    Arrays over the grid have shape ``(ny, nx)``; row 0 is the lowest y.
    """

    origin: tuple[float, float] = (0.0, 0.0)
    cell_size: float = 5.0
    nx: int = 200
    ny: int = 200

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid must have at least one cell per axis")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def extent(self) -> tuple[float, float, float, float]:
        x0, y0 = self.origin
        return (x0, x0 + self.nx * self.cell_size, y0, y0 + self.ny * self.cell_size)

    @property
    def cell_area(self) -> float:
        return self.cell_size * self.cell_size

    def x_centers(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.nx) + 0.5) * self.cell_size

    def y_centers(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.ny) + 0.5) * self.cell_size

    def x_lines(self) -> np.ndarray:
        return self.origin[0] + np.arange(self.nx + 1) * self.cell_size

    def y_lines(self) -> np.ndarray:
        return self.origin[1] + np.arange(self.ny + 1) * self.cell_size

    def cell_of(self, xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(row, col) of points, clipped into the grid."""
        xy = np.asarray(xy, dtype=float)
        col = np.floor((xy[..., 0] - self.origin[0]) / self.cell_size).astype(np.int64)
        row = np.floor((xy[..., 1] - self.origin[1]) / self.cell_size).astype(np.int64)
        return np.clip(row, 0, self.ny - 1), np.clip(col, 0, self.nx - 1)

    def clamp(self, xy: np.ndarray) -> np.ndarray:
        xmin, xmax, ymin, ymax = self.extent
        out = np.array(xy, dtype=float, copy=True)
        out[..., 0] = np.clip(out[..., 0], xmin, xmax)
        out[..., 1] = np.clip(out[..., 1], ymin, ymax)
        return out


@dataclass(frozen=True)
class WindParams:
    mu_speed: float = 5.0
    sigma_speed: float = 2.0
    mu_theta: float = math.pi / 8
    sigma_theta: float = 1.0

    def __post_init__(self):
        if self.sigma_speed < 0 or self.sigma_theta < 0:
            raise ValueError("wind standard deviations must be non-negative")


@dataclass(frozen=True)
class WindSample:
    U: float
    theta: float


@dataclass(frozen=True)
class FireModelParams:
    lam: float = 0.01
    dt: float = 1.0
    ignition_threshold: float = 5.0
    grid: GridSpec = field(default_factory=GridSpec)
    # amplitude multiplying every Gaussian source; 1.0 is the bare density
    source_strength: float = 1.0
    new_front_budget: int = 200
    # fronts whose decay factor falls below this stop radiating and spreading
    prune_ratio: float = 0.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("decay rate must be non-negative")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.ignition_threshold <= 0:
            raise ValueError("ignition_threshold must be positive")
        if self.source_strength <= 0:
            raise ValueError("source_strength must be positive")
        if self.new_front_budget < 0:
            raise ValueError("new_front_budget must be non-negative")
        if not 0.0 <= self.prune_ratio < 1.0:
            raise ValueError("prune_ratio must lie in [0, 1)")


@dataclass(frozen=True)
class FireFront:
    pos: tuple[float, float]
    sigma: tuple[float, float] = (10.0, 10.0)
    birth_t: int = 0
    R: float = 0.2

    def __post_init__(self):
        if min(self.sigma) <= 0:
            raise ValueError("front deviations must be positive")
        if self.R < 0:
            raise ValueError("spread rate must be non-negative")


@dataclass
class Fronts:
    """Column store of fire fronts (one row per front)."""

    pos: np.ndarray
    sigma: np.ndarray
    birth_t: np.ndarray
    R: np.ndarray
    cursor: np.ndarray

    @classmethod
    def from_list(cls, fronts) -> "Fronts":
        fronts = list(fronts)
        if not fronts:
            return cls.empty()
        pos = np.array([f.pos for f in fronts], dtype=float)
        return cls(
            pos=pos,
            sigma=np.array([f.sigma for f in fronts], dtype=float),
            birth_t=np.array([f.birth_t for f in fronts], dtype=np.int64),
            R=np.array([f.R for f in fronts], dtype=float),
            cursor=pos.copy(),
        )

    @classmethod
    def empty(cls) -> "Fronts":
        return cls(
            pos=np.zeros((0, 2)),
            sigma=np.zeros((0, 2)),
            birth_t=np.zeros(0, dtype=np.int64),
            R=np.zeros(0),
            cursor=np.zeros((0, 2)),
        )

    def __len__(self) -> int:
        return len(self.birth_t)

    def to_list(self) -> list[FireFront]:
        return [
            FireFront(tuple(p), tuple(s), int(b), float(r))
            for p, s, b, r in zip(self.pos, self.sigma, self.birth_t, self.R)
        ]

    def select(self, keep: np.ndarray) -> "Fronts":
        return Fronts(self.pos[keep], self.sigma[keep], self.birth_t[keep], self.R[keep], self.cursor[keep])

    def copy(self) -> "Fronts":
        return Fronts(self.pos.copy(), self.sigma.copy(), self.birth_t.copy(), self.R.copy(), self.cursor.copy())


@dataclass
class IntensityGrid:
    cells: np.ndarray
    grid: GridSpec
    t: int


def _as_fronts(fronts) -> Fronts:
    return fronts if isinstance(fronts, Fronts) else Fronts.from_list(fronts)


def sample_wind(rng: np.random.Generator, params: WindParams) -> WindSample:
    """Draw one mid-flame wind (speed clamped at 0, azimuth wrapped to [0, 2pi))."""
    U = rng.normal(params.mu_speed, params.sigma_speed)
    theta = rng.normal(params.mu_theta, params.sigma_theta)
    return WindSample(U=max(0.0, float(U)), theta=float(theta) % TWO_PI)


def _lb_minus_one(U: float) -> float:
    # 0.936 + 0.461 - 0.397 == 1, so regroup with expm1 to make LB(0) exactly 1
    return 0.936 * math.expm1(0.2566 * U) + 0.461 * math.expm1(-0.1548 * U)


def length_to_breadth(U: float) -> float:
    return 1.0 + _lb_minus_one(U)


def ellipse_offset(R: float, U: float) -> float:
    """Distance from the ignition point to the centre of the growth ellipse."""
    if R < 0 or U < 0:
        raise NumericDomainError(f"ellipse_offset needs R >= 0 and U >= 0, got R={R}, U={U}")
    m = _lb_minus_one(U)
    if m < 0.0:
        raise NumericDomainError(f"length-to-breadth ratio {1.0 + m} < 1")
    # (LB + s) / (LB - s) == (LB + s)**2 because (LB + s)(LB - s) == 1;
    # LB**2 - 1 == m (m + 2) avoids cancellation at light wind
    HB = (1.0 + m + math.sqrt(m * (m + 2.0))) ** 2
    return (R - R / HB) / 2.0


def advance(pos: np.ndarray, c, theta: float, dt: float) -> np.ndarray:
    """Move points by ``dt * c`` along azimuth ``theta`` (clockwise from +y)."""
    pos = np.asarray(pos, dtype=float)
    c = np.asarray(c, dtype=float)
    step = dt * c[..., None] * np.array([math.sin(theta), math.cos(theta)])
    return pos + step


def spread_step(fronts, wind: WindSample, t_new: int, params: FireModelParams,
                burned: np.ndarray | None = None) -> Fronts:
    """Advance every front's cursor and ignite new fronts for one step.

    ``burned`` is a boolean grid of cells that ever held a front; it is
    updated in place.  When omitted it is rebuilt from the fronts.
    """
    fronts = _as_fronts(fronts).copy()
    grid = params.grid
    if burned is None:
        burned = np.zeros(grid.shape, dtype=bool)
        if len(fronts):
            r, c = grid.cell_of(fronts.pos)
            burned[r, c] = True
    if not len(fronts):
        return fronts

    rates, which = np.unique(fronts.R, return_inverse=True)
    offsets = np.array([ellipse_offset(float(R), wind.U) for R in rates])[which]
    cand = grid.clamp(advance(fronts.cursor, offsets, wind.theta, params.dt))

    home_r, home_c = grid.cell_of(fronts.pos)
    cand_r, cand_c = grid.cell_of(cand)
    leaving = (cand_r != home_r) | (cand_c != home_c)

    new_idx = np.flatnonzero(leaving & ~burned[cand_r, cand_c])
    if len(new_idx) and params.new_front_budget:
        flat = cand_r[new_idx] * grid.nx + cand_c[new_idx]
        _, first = np.unique(flat, return_index=True)
        new_idx = np.sort(new_idx[first])[: params.new_front_budget]
    else:
        new_idx = new_idx[:0]

    # cursors stay inside the home cell
    s = grid.cell_size
    lo = np.stack([grid.origin[0] + home_c * s, grid.origin[1] + home_r * s], axis=1)
    fronts.cursor = np.clip(cand, lo, lo + s)

    if len(new_idx):
        burned[cand_r[new_idx], cand_c[new_idx]] = True
        born = Fronts(
            pos=cand[new_idx].copy(),
            sigma=fronts.sigma[new_idx].copy(),
            birth_t=np.full(len(new_idx), t_new, dtype=np.int64),
            R=fronts.R[new_idx].copy(),
            cursor=cand[new_idx].copy(),
        )
        fronts = Fronts(
            np.concatenate([fronts.pos, born.pos]),
            np.concatenate([fronts.sigma, born.sigma]),
            np.concatenate([fronts.birth_t, born.birth_t]),
            np.concatenate([fronts.R, born.R]),
            np.concatenate([fronts.cursor, born.cursor]),
        )
    return fronts


def prune_mask(fronts: Fronts, t: int, params: FireModelParams) -> np.ndarray:
    """Fronts to keep: those whose decay factor is at least ``params.prune_ratio``."""
    if params.prune_ratio <= 0 or params.lam == 0:
        return np.ones(len(fronts), dtype=bool)
    max_age = -math.log(params.prune_ratio) / params.lam
    return (t - fronts.birth_t) <= max_age


def prune(fronts: Fronts, t: int, params: FireModelParams) -> Fronts:
    return fronts.select(prune_mask(fronts, t, params))


def intensity_at(q, fronts, t: int, lam: float, strength: float = 1.0) -> float:
    """Sum of age-decayed Gaussian heat sources at point ``q``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    total = 0.0
    for f in _as_fronts(fronts).to_list():
        sx, sy = f.sigma
        dx = (q[0] - f.pos[0]) / sx
        dy = (q[1] - f.pos[1]) / sy
        peak = strength / (2.0 * math.pi * sx * sy)
        total += peak * math.exp(-0.5 * dx * dx) * math.exp(-0.5 * dy * dy) * math.exp(-lam * (t - f.birth_t))
    return total


def _superpose(fronts: Fronts, decay: np.ndarray, params: FireModelParams) -> np.ndarray:
    # each source is separable, so the sum is Gy.T @ (a * Gx)
    grid = params.grid
    xs, ys = grid.x_centers(), grid.y_centers()
    sx, sy = fronts.sigma[:, 0], fronts.sigma[:, 1]
    gx = np.exp(-0.5 * ((xs[None, :] - fronts.pos[:, :1]) / sx[:, None]) ** 2)
    gy = np.exp(-0.5 * ((ys[None, :] - fronts.pos[:, 1:]) / sy[:, None]) ** 2)
    amp = params.source_strength / (2.0 * math.pi * sx * sy) * decay
    return gy.T @ (amp[:, None] * gx)


def rasterize(fronts, t: int, params: FireModelParams) -> IntensityGrid:
    """Evaluate the intensity field at every cell centre."""
    fronts = _as_fronts(fronts)
    grid = params.grid
    if not len(fronts):
        return IntensityGrid(np.zeros(grid.shape), grid, t)
    cells = _superpose(fronts, np.exp(-params.lam * (t - fronts.birth_t)), params)
    np.maximum(cells, 0.0, out=cells)
    return IntensityGrid(cells, grid, t)


class IncrementalRaster:
    """Running rasterisation for fronts that never move once born.

    All sources share one decay rate, so the field at ``t`` is
    ``exp(-lam (t - t_ref)) * A`` where ``A`` holds every live source
    decayed to ``t_ref``.  Births add kernels, prunes subtract them.
    """

    REBASE = 30.0

    def __init__(self, params: FireModelParams, fronts: Fronts, t: int):
        self.params = params
        self.t_ref = t
        self.acc = np.zeros(params.grid.shape)
        self.add(fronts)

    def _kernel(self, fronts: Fronts) -> np.ndarray:
        return _superpose(fronts, np.exp(-self.params.lam * (self.t_ref - fronts.birth_t)), self.params)

    def add(self, fronts: Fronts):
        if len(fronts):
            self.acc += self._kernel(fronts)

    def remove(self, fronts: Fronts):
        if len(fronts):
            self.acc -= self._kernel(fronts)

    def grid_at(self, t: int) -> IntensityGrid:
        lam = self.params.lam
        if lam * (t - self.t_ref) > self.REBASE:
            self.acc *= math.exp(-lam * (t - self.t_ref))
            self.t_ref = t
        cells = self.acc * math.exp(-lam * (t - self.t_ref))
        np.maximum(cells, 0.0, out=cells)
        return IntensityGrid(cells, self.params.grid, t)


def fire_region(grid: IntensityGrid, ignition_threshold: float) -> np.ndarray:
    """Boolean mask of burning cells."""
    return grid.cells >= ignition_threshold

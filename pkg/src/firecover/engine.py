"""Deterministic stepped world for the UAV team and the fire."""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from .config import SimConfig
from .control import (
    SensedPatch,
    WeightField,
    control_law,
    coverage_gradient,
    coverage_objective,
    sense,
    update_virtual_pose,
    weight_field,
    zeta_update,
)
from .fire import (
    Fronts,
    IntensityGrid,
    NumericDomainError,
    IncrementalRaster,
    fire_region,
    prune_mask,
    rasterize,
    sample_wind,
    spread_step,
)

log = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Snapshot:
    """Frozen view every controller reads during one step."""

    poses: np.ndarray
    p_d: np.ndarray
    zeta: np.ndarray
    field: WeightField
    physical: tuple[tuple[int, ...], ...]
    sensing: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class UavOutput:
    u: np.ndarray
    p_d: np.ndarray
    zeta: int


@dataclass(frozen=True)
class StepMetrics:
    t: int
    min_distance: float
    n_zeta: int
    boundary_coverage: float
    mean_altitude: float
    max_altitude: float
    objective: float
    n_fronts: int
    n_burning: int


@dataclass(frozen=True)
class TraceRecord:
    t: int
    uav_id: int
    x: float
    y: float
    z: float
    zeta: int
    u_x: float
    u_y: float
    u_z: float
    n_physical_neighbors: int


@dataclass
class WorldState:
    t: int
    fronts: Fronts
    burned: np.ndarray
    intensity: IntensityGrid
    field: WeightField
    q_mask: np.ndarray
    poses: np.ndarray
    p_d: np.ndarray
    zeta: np.ndarray
    rng: np.random.Generator
    last_u: np.ndarray = None
    n_physical: np.ndarray = None
    metrics: StepMetrics | None = None
    raster: IncrementalRaster | None = None


Controller = Callable[[int, Snapshot, SimConfig], UavOutput]


def _neighbor_sets(poses: np.ndarray, cfg: SimConfig):
    P = poses
    diff = P[:, None, :] - P[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(dist, np.inf)
    physical = dist <= cfg.gains.r
    hx, hy = P[:, 2] * cfg.cam.tan1, P[:, 2] * cfg.cam.tan2
    cover = ((np.abs(P[:, None, 0] - P[None, :, 0]) <= hx[:, None] + hx[None, :])
             & (np.abs(P[:, None, 1] - P[None, :, 1]) <= hy[:, None] + hy[None, :]))
    np.fill_diagonal(cover, False)
    sensing = physical & cover
    as_tuples = lambda m: tuple(tuple(np.flatnonzero(row).tolist()) for row in m)  # noqa: E731
    return as_tuples(physical), as_tuples(sensing), dist


def uav_controller(i: int, snap: Snapshot, cfg: SimConfig) -> UavOutput:
    """One UAV's full two-level control step, reading only the snapshot."""
    gains, cam = cfg.gains, cfg.cam
    pose = snap.poses[i]
    patch: SensedPatch = sense(snap.poses, i, cam, snap.field, snap.sensing[i])
    zeta = zeta_update(int(snap.zeta[i]), patch, gains.zeta_latch)
    p_d = snap.p_d[i]
    if zeta:
        if not snap.zeta[i]:
            p_d = pose.copy()
        grad_c, grad_z = coverage_gradient(pose, cam, gains, patch)
        delta_u = gains.k_s * np.array([grad_c[0], grad_c[1], grad_z])
        p_d = update_virtual_pose(p_d, delta_u, gains)
    nb = snap.physical[i]
    u = control_law(pose, p_d, zeta, cfg.p_r, gains, snap.poses[list(nb)] if nb else (), i, nb)
    return UavOutput(u=u, p_d=np.array(p_d, dtype=float), zeta=zeta)


def boundary_cells(intensity: IntensityGrid, cfg: SimConfig) -> np.ndarray:
    I = intensity.cells
    return (I >= cfg.cam.I_min) & (I <= 0.5 * cfg.cam.I_max)


def coverage_mask_per_uav(poses: np.ndarray, cfg: SimConfig) -> np.ndarray:
    """Cells whose centre lies in at least one FOV, accumulated UAV by UAV."""
    g = cfg.fire.grid
    xs, ys = g.x_centers(), g.y_centers()
    mask = np.zeros(g.shape, dtype=bool)
    for x, y, z in poses:
        inx = np.abs(xs - x) <= z * cfg.cam.tan1
        iny = np.abs(ys - y) <= z * cfg.cam.tan2
        mask |= iny[:, None] & inx[None, :]
    return mask


def boundary_coverage_per_uav(intensity: IntensityGrid, poses: np.ndarray, cfg: SimConfig) -> float:
    b = boundary_cells(intensity, cfg)
    n = int(b.sum())
    return float((b & coverage_mask_per_uav(poses, cfg)).sum() / n) if n else 0.0


def boundary_coverage_per_cell(intensity: IntensityGrid, poses: np.ndarray, cfg: SimConfig) -> float:
    """Same quantity as :func:`boundary_coverage_per_uav`, scanning boundary cells."""
    b = boundary_cells(intensity, cfg)
    rows, cols = np.nonzero(b)
    if not len(rows):
        return 0.0
    g = cfg.fire.grid
    cx = g.x_centers()[cols]
    cy = g.y_centers()[rows]
    P = poses
    inside = ((np.abs(cx[:, None] - P[None, :, 0]) <= P[None, :, 2] * cfg.cam.tan1)
              & (np.abs(cy[:, None] - P[None, :, 1]) <= P[None, :, 2] * cfg.cam.tan2))
    return float(inside.any(axis=1).sum() / len(rows))


def compute_metrics(world: WorldState, cfg: SimConfig, dist: np.ndarray | None = None) -> StepMetrics:
    P = world.poses
    if dist is None:
        _, _, dist = _neighbor_sets(P, cfg)
    min_d = float(dist.min()) if len(P) > 1 else math.inf
    return StepMetrics(
        t=world.t,
        min_distance=min_d,
        n_zeta=int(world.zeta.sum()),
        boundary_coverage=boundary_coverage_per_uav(world.intensity, P, cfg),
        mean_altitude=float(P[:, 2].mean()),
        max_altitude=float(P[:, 2].max()),
        objective=coverage_objective(P, cfg.cam, cfg.gains.w, world.field),
        n_fronts=len(world.fronts),
        n_burning=int(world.q_mask.sum()),
    )


def init(cfg: SimConfig, incremental: bool = True) -> WorldState:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_uavs
    c = np.asarray(cfg.spawn_center, dtype=float)
    xy = c + rng.uniform(-cfg.spawn_half_width, cfg.spawn_half_width, size=(n, 2))
    poses = np.column_stack([xy, np.zeros(n)])
    fronts = Fronts.from_list(cfg.fronts)
    g = cfg.fire.grid
    burned = np.zeros(g.shape, dtype=bool)
    if len(fronts):
        r, cc = g.cell_of(fronts.pos)
        burned[r, cc] = True
    raster = IncrementalRaster(cfg.fire, fronts, 0) if incremental else None
    intensity = raster.grid_at(0) if raster else rasterize(fronts, 0, cfg.fire)
    world = WorldState(
        t=0,
        fronts=fronts,
        burned=burned,
        intensity=intensity,
        field=weight_field(intensity, cfg.cam, cfg.fire.ignition_threshold),
        q_mask=fire_region(intensity, cfg.fire.ignition_threshold),
        poses=poses,
        p_d=poses.copy(),
        zeta=np.zeros(n, dtype=np.int64),
        rng=rng,
        last_u=np.zeros((n, 3)),
        n_physical=np.zeros(n, dtype=np.int64),
        raster=raster,
    )
    phys, _, dist = _neighbor_sets(poses, cfg)
    world.n_physical = np.array([len(s) for s in phys], dtype=np.int64)
    world.metrics = compute_metrics(world, cfg, dist)
    return world


def advance_fire(world: WorldState, cfg: SimConfig):
    """Fire phase of a step; returns (fronts, burned, intensity) at ``t + 1``.

    Updates ``world.raster`` in place when present, otherwise rasterises
    from scratch.
    """
    t_new = world.t + 1
    wind = sample_wind(world.rng, cfg.wind)
    burned = world.burned.copy()
    n_old = len(world.fronts)
    fronts = spread_step(world.fronts, wind, t_new, cfg.fire, burned)
    keep = prune_mask(fronts, t_new, cfg.fire)
    raster = world.raster
    if raster is None:
        fronts = fronts.select(keep)
        return fronts, burned, rasterize(fronts, t_new, cfg.fire)
    born = np.zeros(len(fronts), dtype=bool)
    born[n_old:] = True
    raster.add(fronts.select(born & keep))
    raster.remove(fronts.select(~born & ~keep))
    fronts = fronts.select(keep)
    return fronts, burned, raster.grid_at(t_new)


def step(world: WorldState, cfg: SimConfig, controller: Controller = uav_controller,
         order=None) -> WorldState:
    """Advance the world by one step.

    Phases: fire, neighbour sets, controllers on a frozen snapshot, Euler
    integration with a ground floor, metrics, clock.  ``order`` permutes
    controller evaluation; results do not depend on it.
    """
    # (1) fire
    fronts, burned, intensity = advance_fire(world, cfg)
    field = weight_field(intensity, cfg.cam, cfg.fire.ignition_threshold)
    q_mask = fire_region(intensity, cfg.fire.ignition_threshold)

    # (2) neighbours on the frozen pose snapshot
    poses = world.poses.copy()
    poses.setflags(write=False)
    physical, sensing, _ = _neighbor_sets(poses, cfg)
    p_d = world.p_d.copy()
    p_d.setflags(write=False)
    zeta = world.zeta.copy()
    zeta.setflags(write=False)
    snap = Snapshot(poses, p_d, zeta, field, physical, sensing)

    # (3) controllers
    n = len(poses)
    outputs: list[UavOutput | None] = [None] * n
    for i in (range(n) if order is None else order):
        try:
            outputs[i] = controller(i, snap, cfg)
        except NumericDomainError as e:
            raise SimulationError(f"UAV {i} at step {world.t}: {e}") from e
    u = np.array([o.u for o in outputs])

    # (4) integrate
    new_poses = poses + cfg.dt * u
    np.maximum(new_poses[:, 2], 0.0, out=new_poses[:, 2])

    new = WorldState(
        t=world.t + 1,
        fronts=fronts,
        burned=burned,
        intensity=intensity,
        field=field,
        q_mask=q_mask,
        poses=new_poses,
        p_d=np.array([o.p_d for o in outputs]),
        zeta=np.array([o.zeta for o in outputs], dtype=np.int64),
        rng=world.rng,
        last_u=u,
        n_physical=np.array([len(s) for s in physical], dtype=np.int64),
        raster=world.raster,
    )
    # (5) metrics, (6) clock already advanced
    new.metrics = compute_metrics(new, cfg)
    return new


def trace_records(world: WorldState, prev_poses: np.ndarray) -> list[TraceRecord]:
    """Records for the step that just ran: pose at its start, command applied."""
    t = world.t - 1
    return [
        TraceRecord(t, i, float(p[0]), float(p[1]), float(p[2]), int(z), float(u[0]), float(u[1]), float(u[2]),
                    int(k))
        for i, (p, z, u, k) in enumerate(zip(prev_poses, world.zeta, world.last_u, world.n_physical))
    ]


class Sink(Protocol):
    def traces(self, records: list[TraceRecord]) -> None: ...
    def metrics(self, m: StepMetrics) -> None: ...
    def snapshot(self, world: WorldState, cfg: SimConfig) -> None: ...
    def close(self) -> None: ...


@dataclass
class MemorySink:
    records: list[TraceRecord] = field(default_factory=list)
    metric_rows: list[StepMetrics] = field(default_factory=list)
    snapshots: list[int] = field(default_factory=list)

    def traces(self, records):
        self.records.extend(records)

    def metrics(self, m):
        self.metric_rows.append(m)

    def snapshot(self, world, cfg):
        self.snapshots.append(world.t)

    def close(self):
        pass


@dataclass(frozen=True)
class RunSummary:
    steps: int
    final_t: int
    final_boundary_coverage: float
    min_distance: float
    min_distance_after_transient: float
    first_all_zeta_step: int | None
    final_mean_altitude: float
    final_objective: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


TRANSIENT_STEPS = 500


def run(cfg: SimConfig, sinks=(), on_step: Callable[[WorldState], None] | None = None) -> RunSummary:
    """Run ``cfg.steps`` steps, streaming outputs to ``sinks`` at their strides."""
    sinks = list(sinks)
    out = cfg.output
    world = init(cfg)
    min_d = world.metrics.min_distance
    min_after = math.inf
    first_all = 0 if world.zeta.all() else None

    def emit_state(w):
        for s in sinks:
            if w.t % out.metrics_stride == 0:
                s.metrics(w.metrics)
            if w.t % out.snapshot_stride == 0 or w.t == cfg.steps:
                s.snapshot(w, cfg)

    try:
        emit_state(world)
        if on_step:
            on_step(world)
        for _ in range(cfg.steps):
            prev = world.poses
            world = step(world, cfg)
            if (world.t - 1) % out.trace_stride == 0:
                recs = trace_records(world, prev)
                for s in sinks:
                    s.traces(recs)
            emit_state(world)
            if on_step:
                on_step(world)
            m = world.metrics
            min_d = min(min_d, m.min_distance)
            if world.t > TRANSIENT_STEPS:
                min_after = min(min_after, m.min_distance)
            if first_all is None and world.zeta.all():
                first_all = world.t
            if world.t % 500 == 0:
                log.info("t=%d zeta=%d cover=%.3f min_d=%.2f mean_z=%.1f fronts=%d",
                         world.t, m.n_zeta, m.boundary_coverage, m.min_distance, m.mean_altitude, m.n_fronts)
    finally:
        for s in sinks:
            s.close()

    m = world.metrics
    return RunSummary(
        steps=cfg.steps,
        final_t=world.t,
        final_boundary_coverage=m.boundary_coverage,
        min_distance=min_d,
        min_distance_after_transient=min_after,
        first_all_zeta_step=first_all,
        final_mean_altitude=m.mean_altitude,
        final_objective=m.objective,
    )


def copy_world(world: WorldState) -> WorldState:
    """Independent deep copy, including generator and raster state."""
    return copy.deepcopy(world)

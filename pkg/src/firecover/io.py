"""Output formats: CSV traces and metrics, grid snapshots, SVG frames.

CSV: header row, one record per line, LF line endings, integers as plain
decimals, floats with ``%.9g``.  Snapshots: ``intensity_<t>.txt`` is a
space-separated ``%.9g`` matrix with the first line holding the lowest-y
grid row; ``intensity_<t>.pgm`` is binary P5 with maxval 255, top image row
= highest y, gray level ``round(255 * min(I, I_max) / I_max)``.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .config import SimConfig
from .engine import StepMetrics, TraceRecord, WorldState
from .sensing import fov_rect

TRACE_FIELDS = [f.name for f in dataclasses.fields(TraceRecord)]
METRIC_FIELDS = [f.name for f in dataclasses.fields(StepMetrics)]


class OutputError(OSError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.9g" % v


def _row(obj, fields, require_finite: bool) -> list[str]:
    out = []
    for name in fields:
        v = getattr(obj, name)
        if isinstance(v, float):
            if math.isnan(v) or (require_finite and not math.isfinite(v)):
                raise ValueError(f"non-finite value {v!r} in field {name!r} of {obj!r}")
        out.append(_fmt(v))
    return out


def _write_rows(path, fields, rows, mode="w"):
    path = Path(path)
    try:
        with path.open(mode, newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if mode == "w":
                w.writerow(fields)
            w.writerows(rows)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e


def write_traces(records, path) -> None:
    rows = [_row(r, TRACE_FIELDS, True) for r in records]
    _write_rows(path, TRACE_FIELDS, rows)


def write_metrics(metrics, path) -> None:
    rows = [_row(m, METRIC_FIELDS, False) for m in metrics]
    _write_rows(path, METRIC_FIELDS, rows)


def read_traces(path) -> list[TraceRecord]:
    types = {f.name: f.type for f in dataclasses.fields(TraceRecord)}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [TraceRecord(**{k: (int(v) if types[k] in ("int", int) else float(v)) for k, v in r.items()})
            for r in rows]


def read_metrics(path) -> list[StepMetrics]:
    types = {f.name: f.type for f in dataclasses.fields(StepMetrics)}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [StepMetrics(**{k: (int(v) if types[k] in ("int", int) else float(v)) for k, v in r.items()})
            for r in rows]


def matrix_text(cells: np.ndarray) -> str:
    return "".join(" ".join("%.9g" % v for v in row) + "\n" for row in cells)


def pgm_bytes(cells: np.ndarray, i_max: float) -> bytes:
    gray = np.rint(255.0 * np.clip(cells, 0.0, i_max) / i_max).astype(np.uint8)
    gray = gray[::-1]
    ny, nx = gray.shape
    return f"P5\n{nx} {ny}\n255\n".encode("ascii") + gray.tobytes()


def _heat_color(frac: float) -> str:
    # yellow (cool edge) to dark red (saturated core)
    r = int(round(255 - 115 * frac))
    g = int(round(220 * (1.0 - frac)))
    return f"#{r:02x}{g:02x}00"


def render_frame(world: WorldState, cfg: SimConfig) -> str:
    """Top-down SVG: burning cells, FOV rectangles, neighbour links, UAV markers."""
    g = cfg.fire.grid
    xmin, xmax, ymin, ymax = g.extent
    W, H = xmax - xmin, ymax - ymin

    def X(x):
        return "%.3f" % (x - xmin)

    def Y(y):
        return "%.3f" % (ymax - y)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:g}" height="{H:g}" viewBox="0 0 {W:g} {H:g}">',
        f'<title>t={world.t}</title>',
        f'<rect x="0" y="0" width="{W:g}" height="{H:g}" fill="#2e7d32"/>',
        '<g id="fire">',
    ]
    I = world.intensity.cells
    s = g.cell_size
    rows, cols = np.nonzero(world.q_mask)
    for r, c in zip(rows.tolist(), cols.tolist()):
        frac = min(I[r, c], cfg.cam.I_max) / cfg.cam.I_max
        x0 = g.origin[0] + c * s
        y1 = g.origin[1] + (r + 1) * s
        out.append(f'<rect x="{X(x0)}" y="{Y(y1)}" width="{s:g}" height="{s:g}" fill="{_heat_color(frac)}"/>')
    out.append("</g>")

    P = world.poses
    out.append('<g id="fov" fill="none" stroke="#ffffff" stroke-width="1">')
    for i, p in enumerate(P):
        rect = fov_rect(p, cfg.cam)
        out.append(f'<rect id="fov{i}" x="{X(rect.xmin)}" y="{Y(rect.ymax)}" '
                   f'width="{2 * rect.half_extents[0]:.3f}" height="{2 * rect.half_extents[1]:.3f}"/>')
    out.append("</g>")

    out.append('<g id="links" stroke="#1e40ff" stroke-width="1.5">')
    for i in range(len(P)):
        for j in range(i + 1, len(P)):
            if np.linalg.norm(P[i] - P[j]) <= cfg.gains.r:
                out.append(f'<line x1="{X(P[i, 0])}" y1="{Y(P[i, 1])}" x2="{X(P[j, 0])}" y2="{Y(P[j, 1])}"/>')
    out.append("</g>")

    out.append('<g id="uavs">')
    for i, p in enumerate(P):
        color = "#000000" if world.zeta[i] else "#777777"
        out.append(f'<circle id="uav{i}" cx="{X(p[0])}" cy="{Y(p[1])}" r="4" fill="{color}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


class DirectorySink:
    """Writes traces.csv, metrics.csv, snapshots/ and frames/ under ``root``."""

    def __init__(self, root, frames: bool = False):
        self.root = Path(root)
        self.frames = frames
        try:
            (self.root / "snapshots").mkdir(parents=True, exist_ok=True)
            if frames:
                (self.root / "frames").mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OutputError(f"cannot create output directory {self.root}: {e}") from e
        self._traces = self.root / "traces.csv"
        self._metrics = self.root / "metrics.csv"
        write_traces([], self._traces)
        write_metrics([], self._metrics)

    def traces(self, records):
        _write_rows(self._traces, TRACE_FIELDS, [_row(r, TRACE_FIELDS, True) for r in records], mode="a")

    def metrics(self, m):
        _write_rows(self._metrics, METRIC_FIELDS, [_row(m, METRIC_FIELDS, False)], mode="a")

    def snapshot(self, world, cfg):
        stem = f"intensity_{world.t:06d}"
        try:
            (self.root / "snapshots" / f"{stem}.txt").write_text(matrix_text(world.intensity.cells),
                                                                 encoding="utf-8", newline="\n")
            (self.root / "snapshots" / f"{stem}.pgm").write_bytes(pgm_bytes(world.intensity.cells, cfg.cam.I_max))
            if self.frames:
                (self.root / "frames" / f"frame_{world.t:06d}.svg").write_text(render_frame(world, cfg),
                                                                              encoding="utf-8", newline="\n")
        except OSError as e:
            raise OutputError(f"cannot write snapshot under {self.root}: {e}") from e

    def close(self):
        pass


def write_summary(summary, path) -> None:
    d = {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in summary.as_dict().items()}
    try:
        Path(path).write_text(json.dumps(d, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e

"""Scenario configuration: dataclasses, TOML parsing/emission and presets.

Config grammar (TOML).  Every key is optional; missing keys take the value
of the ``paper-sec5`` preset, so an empty document is that preset.  Unknown
sections or keys are rejected.

    seed = 7
    steps = 6000
    dt = 1.0

    [swarm]
    n_uavs = 10
    spawn_center = [300.0, 300.0]
    spawn_half_width = 20.0
    rendezvous = [500.0, 500.0, 60.0]

    [camera]
    focal_length = 10.0
    pixel_area = 1e-4
    half_angle_x_deg = 30.0
    half_angle_y_deg = 45.0
    intensity_min = 5.0
    intensity_max = 100.0
    kappa = 1e-3

    [gains]         k_s, k_step, k_r, k_d, nu, safe_distance, comm_radius,
                    prior_w, zeta_latch, alt_epsilon, coincident_epsilon
    [fire]          decay_rate, ignition_threshold, source_strength, sigma,
                    spread_rate, new_front_budget, prune_ratio,
                    fronts = [[x, y], ...]
    [wind]          speed_mean, speed_std, direction_mean_rad, direction_std_rad
    [grid]          origin = [x, y], cell_size, nx, ny
    [output]        trace_stride, metrics_stride, snapshot_stride, frames
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import tomli
import tomli_w

from .control import ControlGains
from .fire import FireFront, FireModelParams, GridSpec, WindParams
from .sensing import CameraIntrinsics


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists one diagnostic per field."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))


@dataclass(frozen=True)
class OutputConfig:
    trace_stride: int = 1
    metrics_stride: int = 1
    snapshot_stride: int = 500
    frames: bool = False


@dataclass(frozen=True)
class SimConfig:
    n_uavs: int = 10
    spawn_center: tuple[float, float] = (300.0, 300.0)
    spawn_half_width: float = 20.0
    p_r: tuple[float, float, float] = (500.0, 500.0, 60.0)
    steps: int = 6000
    dt: float = 1.0
    seed: int = 7
    gains: ControlGains = field(default_factory=ControlGains)
    cam: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    fire: FireModelParams = field(default_factory=FireModelParams)
    wind: WindParams = field(default_factory=WindParams)
    fronts: tuple[FireFront, ...] = ()
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.n_uavs < 1:
            raise ValueError("n_uavs must be at least 1")


# Five initial fronts in a plus shape around the reported fire location.
# Grid size, spread rate, kernel width and gains are tuned choices; see the
# README section "Scenario parameters".
_SCENARIO_FRONTS = ((500.0, 500.0), (510.0, 500.0), (490.0, 500.0), (500.0, 510.0), (500.0, 490.0))


def paper_sec5() -> SimConfig:
    grid = GridSpec(origin=(0.0, 0.0), cell_size=5.0, nx=200, ny=200)
    fire = FireModelParams(
        lam=0.01, dt=1.0, ignition_threshold=5.0, grid=grid,
        source_strength=8000.0, new_front_budget=200, prune_ratio=1e-4,
    )
    sigma, rate = 10.0, 0.25
    return SimConfig(
        n_uavs=10,
        spawn_center=(300.0, 300.0),
        spawn_half_width=20.0,
        p_r=(500.0, 500.0, 60.0),
        steps=6000,
        dt=1.0,
        seed=7,
        gains=ControlGains(k_s=1.0, k_step=10.0, k_r=0.01, k_d=0.04, nu=2.5e5, d=30.0, r=100.0, w=0.01),
        cam=CameraIntrinsics(S1=1e-4, b=10.0, theta1=math.radians(30.0), theta2=math.radians(45.0),
                             I_min=5.0, I_max=100.0, kappa=1e-3),
        fire=fire,
        wind=WindParams(mu_speed=5.0, sigma_speed=2.0, mu_theta=math.pi / 8, sigma_theta=1.0),
        fronts=tuple(FireFront(p, (sigma, sigma), 0, rate) for p in _SCENARIO_FRONTS),
        output=OutputConfig(),
    )


PRESETS = {"paper-sec5": paper_sec5}


def preset(name: str) -> SimConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError([f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"]) from None


def to_dict(cfg: SimConfig) -> dict:
    g, c, f, wd, o = cfg.gains, cfg.cam, cfg.fire, cfg.wind, cfg.output
    sig = cfg.fronts[0].sigma[0] if cfg.fronts else 10.0
    rate = cfg.fronts[0].R if cfg.fronts else 0.2
    return {
        "seed": cfg.seed,
        "steps": cfg.steps,
        "dt": cfg.dt,
        "swarm": {
            "n_uavs": cfg.n_uavs,
            "spawn_center": list(cfg.spawn_center),
            "spawn_half_width": cfg.spawn_half_width,
            "rendezvous": list(cfg.p_r),
        },
        "camera": {
            "focal_length": c.b,
            "pixel_area": c.S1,
            "half_angle_x_deg": round(math.degrees(c.theta1), 10),
            "half_angle_y_deg": round(math.degrees(c.theta2), 10),
            "intensity_min": c.I_min,
            "intensity_max": c.I_max,
            "kappa": c.kappa,
        },
        "gains": {
            "k_s": g.k_s, "k_step": g.k_step, "k_r": g.k_r, "k_d": g.k_d, "nu": g.nu,
            "safe_distance": g.d, "comm_radius": g.r, "prior_w": g.w,
            "zeta_latch": g.zeta_latch, "alt_epsilon": g.alt_eps, "coincident_epsilon": g.coincident_eps,
        },
        "fire": {
            "decay_rate": f.lam,
            "ignition_threshold": f.ignition_threshold,
            "source_strength": f.source_strength,
            "sigma": sig,
            "spread_rate": rate,
            "new_front_budget": f.new_front_budget,
            "prune_ratio": f.prune_ratio,
            "fronts": [list(fr.pos) for fr in cfg.fronts],
        },
        "wind": {
            "speed_mean": wd.mu_speed, "speed_std": wd.sigma_speed,
            "direction_mean_rad": wd.mu_theta, "direction_std_rad": wd.sigma_theta,
        },
        "grid": {
            "origin": list(f.grid.origin), "cell_size": f.grid.cell_size, "nx": f.grid.nx, "ny": f.grid.ny,
        },
        "output": {
            "trace_stride": o.trace_stride, "metrics_stride": o.metrics_stride,
            "snapshot_stride": o.snapshot_stride, "frames": o.frames,
        },
    }


def emit_config(cfg: SimConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))


def _line_of(text: str, section: str | None, key: str) -> int | None:
    current = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[([^\]]+)\]$", s)
        if m:
            current = m.group(1).strip()
            continue
        if current == section and re.match(rf"^{re.escape(key)}\s*=", s):
            return n
    return None


def _where(text: str, section: str | None, key: str) -> str:
    name = f"{section}.{key}" if section else key
    line = _line_of(text, section, key)
    return f"{name} (line {line})" if line else name


class _Reader:
    """Pulls typed values out of the parsed document, collecting diagnostics."""

    def __init__(self, doc: dict, defaults: dict, text: str):
        self.doc, self.defaults, self.text = doc, defaults, text
        self.problems: list[str] = []

    def get(self, section, key, kind):
        src = self.doc.get(section, {}) if section else self.doc
        dflt = self.defaults[section][key] if section else self.defaults[key]
        if key not in src:
            return dflt
        v = src[key]
        where = _where(self.text, section, key)
        if kind is bool:
            if not isinstance(v, bool):
                self.problems.append(f"{where}: expected true/false, got {v!r}")
                return dflt
            return v
        if kind is int:
            if isinstance(v, bool) or not isinstance(v, int):
                self.problems.append(f"{where}: expected an integer, got {v!r}")
                return dflt
            return v
        if kind is float:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                self.problems.append(f"{where}: expected a finite number, got {v!r}")
                return dflt
            return float(v)
        if isinstance(kind, tuple):  # fixed-length numeric vector
            n = kind[0]
            if (not isinstance(v, list) or len(v) != n
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
                self.problems.append(f"{where}: expected a list of {n} numbers, got {v!r}")
                return dflt
            return [float(x) for x in v]
        raise TypeError(kind)

    def check(self, ok: bool, section, key, msg):
        if not ok:
            self.problems.append(f"{_where(self.text, section, key)}: {msg}")


_SCHEMA = {
    None: {"seed": int, "steps": int, "dt": float},
    "swarm": {"n_uavs": int, "spawn_center": (2,), "spawn_half_width": float, "rendezvous": (3,)},
    "camera": {"focal_length": float, "pixel_area": float, "half_angle_x_deg": float, "half_angle_y_deg": float,
               "intensity_min": float, "intensity_max": float, "kappa": float},
    "gains": {"k_s": float, "k_step": float, "k_r": float, "k_d": float, "nu": float, "safe_distance": float,
              "comm_radius": float, "prior_w": float, "zeta_latch": bool, "alt_epsilon": float,
              "coincident_epsilon": float},
    "fire": {"decay_rate": float, "ignition_threshold": float, "source_strength": float, "sigma": float,
             "spread_rate": float, "new_front_budget": int, "prune_ratio": float, "fronts": "fronts"},
    "wind": {"speed_mean": float, "speed_std": float, "direction_mean_rad": float, "direction_std_rad": float},
    "grid": {"origin": (2,), "cell_size": float, "nx": int, "ny": int},
    "output": {"trace_stride": int, "metrics_stride": int, "snapshot_stride": int, "frames": bool},
}


def parse_config(text: str) -> SimConfig:
    """Parse and fully validate a TOML scenario document."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        raise ConfigError([f"syntax error: {e}"]) from None

    problems = []
    for key, value in doc.items():
        if isinstance(value, dict):
            if key not in _SCHEMA or key is None:
                problems.append(f"[{key}] (line {_section_line(text, key)}): unknown section")
                continue
            for sub in value:
                if sub not in _SCHEMA[key]:
                    problems.append(f"{_where(text, key, sub)}: unknown key")
        elif key not in _SCHEMA[None]:
            problems.append(f"{_where(text, None, key)}: unknown key")
    if problems:
        raise ConfigError(problems)

    rd = _Reader(doc, to_dict(paper_sec5()), text)
    seed, steps, dt = rd.get(None, "seed", int), rd.get(None, "steps", int), rd.get(None, "dt", float)
    rd.check(steps >= 0, None, "steps", "must be >= 0")
    rd.check(dt > 0, None, "dt", "must be > 0")

    n_uavs = rd.get("swarm", "n_uavs", int)
    rd.check(n_uavs >= 1, "swarm", "n_uavs", "must be >= 1")
    spawn_center = rd.get("swarm", "spawn_center", (2,))
    spawn_hw = rd.get("swarm", "spawn_half_width", float)
    rd.check(spawn_hw >= 0, "swarm", "spawn_half_width", "must be >= 0")
    p_r = rd.get("swarm", "rendezvous", (3,))
    rd.check(p_r[2] >= 0, "swarm", "rendezvous", "altitude must be >= 0")

    cam_vals = {k: rd.get("camera", k, float) for k in _SCHEMA["camera"]}
    rd.check(cam_vals["pixel_area"] > 0, "camera", "pixel_area", "must be > 0")
    rd.check(cam_vals["focal_length"] > 0, "camera", "focal_length", "must be > 0")
    for k in ("half_angle_x_deg", "half_angle_y_deg"):
        rd.check(0 < cam_vals[k] < 90, "camera", k, "must lie in (0, 90) degrees")
    rd.check(cam_vals["intensity_min"] < cam_vals["intensity_max"], "camera", "intensity_min",
             "must be below intensity_max")
    rd.check(cam_vals["kappa"] >= 0, "camera", "kappa", "must be >= 0")

    gv = {k: rd.get("gains", k, _SCHEMA["gains"][k]) for k in _SCHEMA["gains"]}
    for k, v in gv.items():
        if k != "zeta_latch":
            rd.check(v > 0, "gains", k, "must be > 0")
    rd.check(gv["safe_distance"] < gv["comm_radius"], "gains", "safe_distance",
             f"safe distance {gv['safe_distance']} must be below comm_radius {gv['comm_radius']}")

    fv = {k: rd.get("fire", k, _SCHEMA["fire"][k]) for k in _SCHEMA["fire"] if k != "fronts"}
    rd.check(fv["decay_rate"] >= 0, "fire", "decay_rate", "must be >= 0")
    rd.check(fv["ignition_threshold"] > 0, "fire", "ignition_threshold", "must be > 0")
    rd.check(fv["source_strength"] > 0, "fire", "source_strength", "must be > 0")
    rd.check(fv["sigma"] > 0, "fire", "sigma", "must be > 0")
    rd.check(fv["spread_rate"] >= 0, "fire", "spread_rate", "must be >= 0")
    rd.check(fv["new_front_budget"] >= 0, "fire", "new_front_budget", "must be >= 0")
    rd.check(0 <= fv["prune_ratio"] < 1, "fire", "prune_ratio", "must lie in [0, 1)")
    fronts = doc.get("fire", {}).get("fronts", rd.defaults["fire"]["fronts"])
    if (not isinstance(fronts, list) or not all(
            isinstance(p, list) and len(p) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in p) for p in fronts)):
        rd.problems.append(f"{_where(text, 'fire', 'fronts')}: expected a list of [x, y] pairs")
        fronts = []

    wv = {k: rd.get("wind", k, float) for k in _SCHEMA["wind"]}
    rd.check(wv["speed_std"] >= 0, "wind", "speed_std", "must be >= 0")
    rd.check(wv["direction_std_rad"] >= 0, "wind", "direction_std_rad", "must be >= 0")

    origin = rd.get("grid", "origin", (2,))
    cell = rd.get("grid", "cell_size", float)
    nx, ny = rd.get("grid", "nx", int), rd.get("grid", "ny", int)
    rd.check(cell > 0, "grid", "cell_size", "must be > 0")
    rd.check(nx >= 1, "grid", "nx", "must be >= 1")
    rd.check(ny >= 1, "grid", "ny", "must be >= 1")

    ov = {k: rd.get("output", k, _SCHEMA["output"][k]) for k in _SCHEMA["output"]}
    for k in ("trace_stride", "metrics_stride", "snapshot_stride"):
        rd.check(ov[k] >= 1, "output", k, "must be >= 1")

    if rd.problems:
        raise ConfigError(rd.problems)

    grid = GridSpec(tuple(origin), cell, nx, ny)
    sigma = fv["sigma"]
    return SimConfig(
        n_uavs=n_uavs,
        spawn_center=tuple(spawn_center),
        spawn_half_width=spawn_hw,
        p_r=tuple(p_r),
        steps=steps,
        dt=dt,
        seed=seed,
        gains=ControlGains(
            k_s=gv["k_s"], k_step=gv["k_step"], k_r=gv["k_r"], k_d=gv["k_d"], nu=gv["nu"],
            d=gv["safe_distance"], r=gv["comm_radius"], w=gv["prior_w"], zeta_latch=gv["zeta_latch"],
            alt_eps=gv["alt_epsilon"], coincident_eps=gv["coincident_epsilon"],
        ),
        cam=CameraIntrinsics(
            S1=cam_vals["pixel_area"], b=cam_vals["focal_length"],
            theta1=math.radians(cam_vals["half_angle_x_deg"]), theta2=math.radians(cam_vals["half_angle_y_deg"]),
            I_min=cam_vals["intensity_min"], I_max=cam_vals["intensity_max"], kappa=cam_vals["kappa"],
        ),
        fire=FireModelParams(
            lam=fv["decay_rate"], dt=dt, ignition_threshold=fv["ignition_threshold"], grid=grid,
            source_strength=fv["source_strength"], new_front_budget=fv["new_front_budget"],
            prune_ratio=fv["prune_ratio"],
        ),
        wind=WindParams(wv["speed_mean"], wv["speed_std"], wv["direction_mean_rad"], wv["direction_std_rad"]),
        fronts=tuple(FireFront((float(x), float(y)), (sigma, sigma), 0, fv["spread_rate"]) for x, y in fronts),
        output=OutputConfig(**ov),
    )


def _section_line(text: str, section: str) -> int | None:
    for n, line in enumerate(text.splitlines(), 1):
        if line.strip() == f"[{section}]":
            return n
    return None


def with_overrides(cfg: SimConfig, **kw) -> SimConfig:
    """Copy of ``cfg`` with top-level fields or output fields replaced."""
    out_keys = {k: kw.pop(k) for k in list(kw) if k in OutputConfig.__dataclass_fields__}
    if out_keys:
        kw["output"] = replace(cfg.output, **out_keys)
    return replace(cfg, **kw)

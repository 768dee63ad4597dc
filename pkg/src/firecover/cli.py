"""Command-line entry point.

    firecover run --config PATH --steps N --seed S --out DIR --stride K --frames on|off
    firecover preset --name paper-sec5 --out PATH
    firecover validate --config PATH

``FIRECOVER_OUT`` supplies the default output directory for ``run`` and
``FIRECOVER_LOG`` the log level (DEBUG, INFO, WARNING, ...).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, PRESETS, emit_config, parse_config, preset, with_overrides
from .engine import SimulationError, run
from .io import DirectorySink, OutputError, write_summary

log = logging.getLogger("firecover")


def _read_config(path: str | None):
    if path is None:
        return parse_config("")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError([f"cannot read {path}: {e.strerror or e}"]) from None
    return parse_config(text)


def _on_off(v: str) -> bool:
    if v not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return v == "on"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="firecover", description="Multi-UAV wildfire coverage simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write outputs")
    r.add_argument("--config", help="TOML scenario file (default: paper-sec5 preset)")
    r.add_argument("--steps", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", default=os.environ.get("FIRECOVER_OUT"))
    r.add_argument("--stride", type=int, help="trace and metrics stride")
    r.add_argument("--frames", type=_on_off, help="write SVG frames at the snapshot stride (on|off)")

    pr = sub.add_parser("preset", help="emit a named preset as TOML")
    pr.add_argument("--name", required=True, choices=sorted(PRESETS))
    pr.add_argument("--out", help="output path (default: stdout)")

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("--config", required=True)
    return p


def _cmd_run(args) -> int:
    cfg = _read_config(args.config)
    over = {}
    if args.steps is not None:
        if args.steps < 0:
            raise ConfigError(["--steps: must be >= 0"])
        over["steps"] = args.steps
    if args.seed is not None:
        over["seed"] = args.seed
    if args.stride is not None:
        if args.stride < 1:
            raise ConfigError(["--stride: must be >= 1"])
        over["trace_stride"] = over["metrics_stride"] = args.stride
    if args.frames is not None:
        over["frames"] = args.frames
    cfg = with_overrides(cfg, **over)
    if not args.out:
        raise ConfigError(["--out: no output directory given (flag or FIRECOVER_OUT)"])
    out = Path(args.out)
    sink = DirectorySink(out, frames=cfg.output.frames)
    (out / "config.toml").write_text(emit_config(cfg), encoding="utf-8", newline="\n")
    summary = run(cfg, [sink])
    write_summary(summary, out / "summary.json")
    log.info("done: %s", summary)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("FIRECOVER_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "preset":
            text = emit_config(preset(args.name))
            if args.out:
                Path(args.out).write_text(text, encoding="utf-8", newline="\n")
            else:
                sys.stdout.write(text)
            return 0
        if args.command == "validate":
            _read_config(args.config)
            print(f"{args.config}: ok")
            return 0
    except ConfigError as e:
        print(f"firecover: {e}", file=sys.stderr)
        return 1
    except (SimulationError, OutputError) as e:
        print(f"firecover: {e}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())

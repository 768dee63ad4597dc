"""Decentralised multi-UAV wildfire coverage and tracking simulator."""

from .config import SimConfig, parse_config, preset
from .engine import init, run, step

__all__ = ["SimConfig", "init", "parse_config", "preset", "run", "step"]
__version__ = "0.1.0"

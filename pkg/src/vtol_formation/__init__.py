"""Distributed leader-follower trajectory tracking for multiple VTOL UAVs."""

from .config import ConfigError, ScenarioConfig, load_config
from .engine import SimLog, SimulationAbort, run
from .graph import CommGraph, GainSet

__all__ = ["CommGraph", "ConfigError", "GainSet", "ScenarioConfig", "SimLog", "SimulationAbort", "load_config", "run"]
__version__ = "0.1.0"

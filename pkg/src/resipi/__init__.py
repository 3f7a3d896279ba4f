"""Cycle-accurate simulator of a chiplet system on a reconfigurable photonic interposer."""
from .config import SystemConfig, load_config, parse_config_text
from .simulation import PRESETS, Simulation, run_experiment
from .traffic import TrafficSpec

__all__ = ["SystemConfig", "load_config", "parse_config_text", "PRESETS", "Simulation",
           "run_experiment", "TrafficSpec"]
__version__ = "0.1.0"

"""Experiment harness: configs, presets, runs and output files."""
from .config import ConfigError, ExperimentConfig, list_presets, load_config
from .runner import Checkpoint, RunError, RunResult, emit_outputs, format_float, run_experiment

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "list_presets",
    "Checkpoint",
    "RunError",
    "RunResult",
    "run_experiment",
    "emit_outputs",
    "format_float",
]

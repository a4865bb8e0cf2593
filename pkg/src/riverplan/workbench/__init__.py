"""Planning workbench: configuration, run persistence, CLI and HTTP API."""

from .config import ConfigError, PlanningConfig, dump_config, load_config
from .runs import RunError, RunRecord, RunStore
from .pipeline import (
    design_step,
    filter_step,
    load_inputs,
    optimize_step,
    screen_step,
    whatif_step,
)

__all__ = [
    "ConfigError",
    "PlanningConfig",
    "dump_config",
    "load_config",
    "RunError",
    "RunRecord",
    "RunStore",
    "load_inputs",
    "screen_step",
    "design_step",
    "filter_step",
    "optimize_step",
    "whatif_step",
]

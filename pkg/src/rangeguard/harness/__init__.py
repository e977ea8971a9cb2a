"""Scenario configuration, simulation loop, logging and CLI."""

from .config import ScenarioConfig, load_config, parse_config
from .export import export, import_csv
from .simlog import COLUMNS, SimLog
from .simulation import BatchResult, run_batch, run_episode

__all__ = [
    "COLUMNS", "BatchResult", "ScenarioConfig", "SimLog",
    "export", "import_csv", "load_config", "parse_config", "run_batch", "run_episode",
]

"""Parameter sweeps, result files and the command-line interface."""

from .config import ConfigError, SweepConfig
from .runs import RunRecord, run_fig1, run_fig2a, run_fig2b, run_realistic, run_sbs_steady

__all__ = [
    "ConfigError",
    "RunRecord",
    "SweepConfig",
    "run_fig1",
    "run_fig2a",
    "run_fig2b",
    "run_realistic",
    "run_sbs_steady",
]

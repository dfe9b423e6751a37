"""Simulation benchmark for monitoring methods on dynamic networks."""

from .graph import Graph, StatKind, summary_vector
from .harness import ExperimentConfig, run_grid, run_replication
from .monitors import MONITOR_NAMES, make_monitor

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "Graph",
    "MONITOR_NAMES",
    "StatKind",
    "make_monitor",
    "run_grid",
    "run_replication",
    "summary_vector",
]

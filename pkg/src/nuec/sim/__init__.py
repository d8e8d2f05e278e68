"""Deterministic simulation harness: config, workload, runner, metrics."""

from .config import ConfigError, SimConfig
from .metrics import CSV_HEADER, SAMPLES_HEADER, MetricsReport
from .runner import Cluster, observably_equivalent, run_simulation
from .workload import WorkloadGen

__all__ = [
    "ConfigError",
    "SimConfig",
    "MetricsReport",
    "CSV_HEADER",
    "SAMPLES_HEADER",
    "Cluster",
    "run_simulation",
    "observably_equivalent",
    "WorkloadGen",
]

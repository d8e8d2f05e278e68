"""Relevance-filtered operation replication for top-k style data types.

Replicas apply every operation locally but only propagate the subset that
can still affect some replica's query result, reaching states that agree on
every query without holding identical data.  The package bundles the generic
replication engine, four data types built for it, two full-replication
baselines, and a deterministic simulator that meters bandwidth and replica
size.
"""

__version__ = "0.1.0"

from .sim import MetricsReport, SimConfig, run_simulation

__all__ = ["SimConfig", "MetricsReport", "run_simulation", "__version__"]

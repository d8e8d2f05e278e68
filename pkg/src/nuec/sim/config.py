"""Simulation configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Any

from ..datatypes import DATA_TYPES

ENGINES = ("nuec", "fullop", "stateship")
DELIVERY_MODES = ("fifo", "random")

__all__ = ["SimConfig", "ENGINES", "DELIVERY_MODES", "ConfigError"]


class ConfigError(ValueError):
    """Invalid configuration; message names the offending field."""


@dataclass(frozen=True)
class SimConfig:
    """One simulation run.  Defaults are the desk-scale workload: large
    enough to show the bandwidth/storage orderings, small enough that a full
    engine matrix runs in minutes."""

    engine: str = "nuec"
    data_type: str = "topk-rmv"
    n_replicas: int = 5
    f: int = 2
    k: int = 100
    n_ops: int = 50000
    n_ids: int = 1000
    max_score: int = 250000
    max_amount: int = 100
    remove_ratio: float = 0.0
    n_bins: int = 50
    sync_every: int = 100
    delivery_mode: str = "fifo"
    max_extra_delay: int = 3
    seed: int = 1
    crashes: tuple[tuple[int, int], ...] = ()
    sample_every: int = 0

    def validate(self) -> None:
        if self.engine not in ENGINES:
            raise ConfigError(f"engine: {self.engine!r} not one of {ENGINES}")
        if self.data_type not in DATA_TYPES:
            raise ConfigError(f"data_type: {self.data_type!r} not one of {DATA_TYPES}")
        if self.n_replicas < 1:
            raise ConfigError("n_replicas: must be positive")
        if not 0 <= self.f < self.n_replicas:
            raise ConfigError("f: need 0 <= f < n_replicas")
        if self.k < 1:
            raise ConfigError("k: must be positive")
        if self.n_ops < 0:
            raise ConfigError("n_ops: must be non-negative")
        for name in ("n_ids", "max_score", "max_amount", "n_bins", "sync_every"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be positive")
        if not 0.0 <= self.remove_ratio <= 1.0:
            raise ConfigError("remove_ratio: must be within [0, 1]")
        if self.remove_ratio > 0 and self.data_type != "topk-rmv":
            raise ConfigError("remove_ratio: only topk-rmv supports removes")
        if self.delivery_mode not in DELIVERY_MODES:
            raise ConfigError(f"delivery_mode: {self.delivery_mode!r} not one of {DELIVERY_MODES}")
        if self.max_extra_delay < 0:
            raise ConfigError("max_extra_delay: must be non-negative")
        if self.sample_every < 0:
            raise ConfigError("sample_every: must be non-negative")
        if self.crashes:
            if self.engine != "nuec":
                raise ConfigError("crashes: only the nuec engine implements crash recovery duty")
            if len(self.crashes) > self.f:
                raise ConfigError("crashes: at most f replicas may crash")
            seen_ids = set()
            for entry in self.crashes:
                if len(entry) != 2:
                    raise ConfigError("crashes: entries must be (replica_id, at_event)")
                rid, at = entry
                if not 0 <= rid < self.n_replicas:
                    raise ConfigError(f"crashes: replica {rid} out of range")
                if rid in seen_ids:
                    raise ConfigError(f"crashes: replica {rid} listed twice")
                if not 0 <= at <= self.n_ops:
                    raise ConfigError(f"crashes: event index {at} outside [0, n_ops]")
                seen_ids.add(rid)

    def replaced(self, **changes: Any) -> "SimConfig":
        from dataclasses import replace

        return replace(self, **changes)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

"""Per-run metrics.

Byte counters are per delivery destination: a broadcast to four live peers
counts its metered size four times, and durability point-to-point sends count
once per peer.  Durability traffic is included in totalPayloadBytes and also
reported on its own.  avgReplicaBytes is a time average of the live-replica
mean, sampled once per sync round.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

__all__ = ["MetricsReport", "CSV_HEADER", "SAMPLES_HEADER"]

CSV_HEADER = (
    "engine,dataType,seed,nOps,removeRatio,totalPayloadBytes,messageCount,"
    "avgReplicaBytes,quiescent,oracleMatch,durabilityPayloadBytes"
)

SAMPLES_HEADER = "engine,dataType,seed,opsExecuted,cumulativePayloadBytes,avgReplicaBytes"


@dataclass(frozen=True)
class MetricsReport:
    engine: str
    data_type: str
    seed: int
    n_ops: int
    remove_ratio: float
    total_payload_bytes: int
    message_count: int
    avg_replica_bytes: float
    quiescent: bool
    oracle_match: bool
    durability_payload_bytes: int
    final_replica_bytes: tuple[int, ...] = ()
    samples: tuple[tuple[int, int, float], ...] = ()

    def ok(self) -> bool:
        return self.quiescent and self.oracle_match

    def csv_row(self) -> str:
        return ",".join(
            (
                self.engine,
                self.data_type,
                str(self.seed),
                str(self.n_ops),
                str(self.remove_ratio),
                str(self.total_payload_bytes),
                str(self.message_count),
                f"{self.avg_replica_bytes:.2f}",
                "true" if self.quiescent else "false",
                "true" if self.oracle_match else "false",
                str(self.durability_payload_bytes),
            )
        )

    def sample_rows(self) -> list[str]:
        prefix = f"{self.engine},{self.data_type},{self.seed}"
        return [
            f"{prefix},{ops},{payload},{avg:.2f}"
            for ops, payload, avg in self.samples
        ]

    def to_dict(self) -> dict[str, Any]:
        return {
            "engine": self.engine,
            "dataType": self.data_type,
            "seed": self.seed,
            "nOps": self.n_ops,
            "removeRatio": self.remove_ratio,
            "totalPayloadBytes": self.total_payload_bytes,
            "messageCount": self.message_count,
            "avgReplicaBytes": round(self.avg_replica_bytes, 2),
            "quiescent": self.quiescent,
            "oracleMatch": self.oracle_match,
            "durabilityPayloadBytes": self.durability_payload_bytes,
            "finalReplicaBytes": list(self.final_replica_bytes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

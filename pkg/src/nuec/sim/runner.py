"""Deterministic discrete-event simulation.

Logical time advances one tick per generated operation.  A message posted at
tick t reaches each destination at t+1 in fifo mode (global posting order
breaks ties, so sender order is preserved), or at t+1+U[0, max_extra_delay]
drawn independently per destination in random mode.

Crash semantics: a crashed replica stops generating, sending, receiving and
being counted.  A broadcast posts all its copies atomically at send time and
they deliver even if the sender crashes afterwards, which realizes the
all-or-none rule for faulty senders.  The crashed sender's point-to-point
durability sends still in flight are lost, so a never-broadcast op survives
only if some durability copy was already delivered.  Deliveries addressed to
a crashed replica are dropped.

After the operation stream ends, sync rounds run until no live replica has
anything left to propagate (bounded by n_ops * n_replicas rounds; hitting
the bound is reported as quiescent=false rather than raised).
"""

from __future__ import annotations

import heapq
import random
from typing import Any, Optional, Sequence

from .. import sizing
from ..baselines import FullOpEngine, StateShipReplica, ship_adapter
from ..datatypes import make_contract
from ..datatypes.oracle import result_for
from ..engine import ReplicaEngine
from ..envelope import StateMessage, SyncMessage
from .config import SimConfig
from .metrics import MetricsReport
from .workload import WorkloadGen

__all__ = ["Cluster", "run_simulation", "observably_equivalent"]


class _Network:
    __slots__ = ("heap", "rng", "max_extra", "_seq")

    def __init__(self, rng: Optional[random.Random], max_extra: int) -> None:
        self.heap: list = []
        self.rng = rng
        self.max_extra = max_extra
        self._seq = 0

    def post(self, now: int, target: int, message: Any) -> None:
        delay = 1
        if self.rng is not None and self.max_extra > 0:
            # scaled random() is several times cheaper than randrange here
            delay += int(self.rng.random() * (self.max_extra + 1))
        heapq.heappush(self.heap, (now + delay, self._seq, target, message))
        self._seq += 1

    def due(self, now: int) -> list[tuple[int, int, Any]]:
        out = []
        heap = self.heap
        while heap and heap[0][0] <= now:
            at, _, target, message = heapq.heappop(heap)
            out.append((at, target, message))
        return out

    def drain(self) -> list[tuple[int, int, Any]]:
        out = []
        heap = self.heap
        while heap:
            at, _, target, message = heapq.heappop(heap)
            out.append((at, target, message))
        return out

    def drop_point_to_point_from(self, sender: int) -> None:
        """Forget undelivered point-to-point sends of a crashed sender.

        Broadcast copies stay queued: they were posted atomically, so every
        live target still gets them (all-or-none delivery)."""
        self.heap = [
            entry for entry in self.heap if not (entry[3].sender == sender and _point_to_point(entry[3]))
        ]
        heapq.heapify(self.heap)

    def __len__(self) -> int:
        return len(self.heap)


def _point_to_point(message: Any) -> bool:
    if type(message) is StateMessage:
        return message.kind == "item"
    return not message.broadcast


def _build_replicas(cfg: SimConfig, contract=None):
    if contract is None:
        contract = make_contract(cfg.data_type, cfg.k, cfg.n_replicas)
    if cfg.engine == "nuec":
        return contract, [ReplicaEngine(i, contract, cfg.n_replicas, cfg.f) for i in range(cfg.n_replicas)]
    if cfg.engine == "fullop":
        return contract, [FullOpEngine(i, contract, cfg.n_replicas, cfg.f) for i in range(cfg.n_replicas)]
    replicas = [
        StateShipReplica(i, ship_adapter(cfg.data_type, cfg.k), cfg.n_replicas, cfg.f)
        for i in range(cfg.n_replicas)
    ]
    return contract, replicas


class Cluster:
    """Replicas plus the network between them, with byte metering.

    ``contract`` overrides the data type's stock contract (used by the
    verification suites to test deliberately wrong hook implementations).
    """

    def __init__(
        self,
        cfg: SimConfig,
        captured_broadcasts: Optional[list] = None,
        contract=None,
    ) -> None:
        self.cfg = cfg
        self.contract, self.replicas = _build_replicas(cfg, contract)
        self.live: set[int] = set(range(cfg.n_replicas))
        self.live_order: tuple[int, ...] = tuple(range(cfg.n_replicas))
        rng = random.Random(f"{cfg.seed}:net") if cfg.delivery_mode == "random" else None
        self.network = _Network(rng, cfg.max_extra_delay)
        self.total_payload_bytes = 0
        self.durability_payload_bytes = 0
        self.message_count = 0
        self.generated: list[tuple[Any, Any]] = []
        self.captured = captured_broadcasts

    def crash(self, rid: int) -> None:
        if rid in self.live:
            self.live.discard(rid)
            self.live_order = tuple(sorted(self.live))
            self.network.drop_point_to_point_from(rid)

    def generate(self, now: int, rid: int, op: tuple) -> None:
        env, send = self.replicas[rid].exec_op(op)
        self.generated.append((env.op_id, env.payload))
        if send is not None:
            self._post(now, send.message, send.targets)

    def sync_replica(self, now: int, rid: int) -> None:
        msg = self.replicas[rid].sync()
        if msg is not None:
            if self.captured is not None:
                self.captured.append(msg)
            self._post(now, msg, None)

    def _post(self, now: int, message: Any, targets: Optional[Sequence[int]]) -> None:
        if targets is None:
            dests = [t for t in self.live_order if t != message.sender]
        else:
            dests = [t for t in targets if t in self.live]
        if not dests:
            return
        if type(message) is StateMessage:
            nbytes = sizing.HEADER + message.nbytes
            durability = message.kind == "item"
        else:
            nbytes = sizing.sync_message_size(self.contract, message)
            durability = not message.broadcast
        for t in dests:
            self.network.post(now, t, message)
        self.total_payload_bytes += nbytes * len(dests)
        self.message_count += len(dests)
        if durability:
            self.durability_payload_bytes += nbytes * len(dests)

    def _deliver(self, batch: list[tuple[int, int, Any]]) -> int:
        latest = 0
        for at, target, message in batch:
            latest = at
            if target in self.live:
                self.replicas[target].on_receive(message)
        return latest

    def deliver_due(self, now: int) -> None:
        self._deliver(self.network.due(now))

    def deliver_all(self, now: int) -> int:
        return max(now, self._deliver(self.network.drain()))

    def pending_anywhere(self) -> bool:
        return any(self.replicas[r].has_pending() for r in self.live_order)

    def mean_replica_bytes(self) -> float:
        if not self.live:
            return 0.0
        return sum(self.replicas[r].replica_size() for r in self.live) / len(self.live)


def observably_equivalent(results: Sequence[Any]) -> bool:
    return all(r == results[0] for r in results[1:]) if results else True


def run_simulation(
    cfg: SimConfig,
    script: Optional[Sequence[tuple[int, tuple]]] = None,
    captured_broadcasts: Optional[list] = None,
) -> MetricsReport:
    """Drive one run to quiescence and report metrics.

    ``script`` replaces the generated workload with explicit (replica, op)
    pairs; ``captured_broadcasts``, if given, collects every broadcast
    message emitted during the run.
    """
    cfg.validate()
    cluster = Cluster(cfg, captured_broadcasts)
    n_ops = len(script) if script is not None else cfg.n_ops
    workload = None if script is not None else WorkloadGen(cfg)
    crash_at: dict[int, list[int]] = {}
    for rid, at in cfg.crashes:
        crash_at.setdefault(at, []).append(rid)

    ops_since = [0] * cfg.n_replicas
    size_samples: list[float] = []
    series: list[tuple[int, int, float]] = []
    rounds_seen = 0

    def sample_round(ops_executed: int) -> None:
        nonlocal rounds_seen
        rounds_seen += 1
        mean = cluster.mean_replica_bytes()
        size_samples.append(mean)
        if cfg.sample_every and rounds_seen % cfg.sample_every == 0:
            series.append((ops_executed, cluster.total_payload_bytes, mean))

    now = 0
    for g in range(n_ops):
        now = g
        cluster.deliver_due(now)
        for rid in crash_at.get(g, ()):
            cluster.crash(rid)
        if not cluster.live:
            break
        if script is not None:
            rid, op = script[g]
            if rid not in cluster.live:
                continue
        else:
            rid, op = workload.next_op(cluster.live_order)
        cluster.generate(now, rid, op)
        ops_since[rid] += 1
        if ops_since[rid] >= cfg.sync_every:
            ops_since[rid] = 0
            cluster.sync_replica(now, rid)
            sample_round(g + 1)

    now = n_ops
    for rid in crash_at.get(n_ops, ()):
        cluster.crash(rid)

    bound = max(n_ops, 1) * cfg.n_replicas
    cascade_rounds = 0
    quiescent = False
    while True:
        now = cluster.deliver_all(now)
        if not cluster.pending_anywhere():
            quiescent = True
            break
        if cascade_rounds >= bound:
            break
        cascade_rounds += 1
        for rid in cluster.live_order:
            cluster.sync_replica(now, rid)
        sample_round(n_ops)

    live_sorted = sorted(cluster.live)
    results = [cluster.replicas[r].query() for r in live_sorted]
    equivalent = observably_equivalent(results)
    if cfg.crashes:
        survivor_seen: set = set()
        for r in live_sorted:
            survivor_seen |= cluster.replicas[r].seen
        payloads = [p for oid, p in cluster.generated if oid in survivor_seen]
    else:
        payloads = [p for _, p in cluster.generated]
    oracle = result_for(cfg.data_type, payloads, cfg.k)
    oracle_match = equivalent and bool(results) and results[0] == oracle
    quiescent = quiescent and len(cluster.network) == 0

    if size_samples:
        avg_bytes = sum(size_samples) / len(size_samples)
    else:
        avg_bytes = cluster.mean_replica_bytes()

    return MetricsReport(
        engine=cfg.engine,
        data_type=cfg.data_type,
        seed=cfg.seed,
        n_ops=n_ops,
        remove_ratio=cfg.remove_ratio,
        total_payload_bytes=cluster.total_payload_bytes,
        message_count=cluster.message_count,
        avg_replica_bytes=avg_bytes,
        quiescent=quiescent,
        oracle_match=oracle_match,
        durability_payload_bytes=cluster.durability_payload_bytes,
        final_replica_bytes=tuple(cluster.replicas[r].replica_size() for r in live_sorted),
        samples=tuple(series),
    )

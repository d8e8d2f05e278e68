"""Full-replication comparators.

``FullOpEngine`` broadcasts every locally generated op exactly once (with the
data type's compaction, so e.g. per-id sums still fold); it reuses the log
engine but ignores relevance hooks.  Durability copies it receives are
applied and retained, never re-broadcast.

``StateShipReplica`` keeps no logs: it applies ops to a full data-type state
and, on sync, broadcasts a mergeable rendering of that state whenever the
rendering changed since the last broadcast.  Durability copies travel as
idempotent per-item deltas so redelivery and interleaving with full-state
merges cannot double count.
"""

from __future__ import annotations

from typing import Any, Optional

from . import sizing
from .clocks import Timestamp
from .contract import BareLog
from .datatypes import histogram, top_sum, topk_plain, topk_rmv
from .engine import ReplicaEngine
from .envelope import OperationEnvelope, OpId, Send, StateMessage

__all__ = ["FullOpEngine", "StateShipReplica", "ship_adapter"]


class FullOpEngine(ReplicaEngine):
    engine_name = "fullop"
    log_factory = BareLog

    def ops_to_propagate(self) -> list[OperationEnvelope]:
        own = [env for env in self.log_local if env.op_id.site == self.replica_id]
        own.sort(key=lambda env: env.op_id)
        return own

    def has_pending(self) -> bool:
        return any(env.op_id.site == self.replica_id for env in self.log_local)


# ---- state shipping ---------------------------------------------------------


class TopKRmvShip:
    """Ships the displayed top plus the whole removes map.

    Per-id frozen covers are cached (``dirty_covers`` names what to refresh)
    so an incoming map entry equal to ours skips the merge, which is the
    common case once covers converge.
    """

    def __init__(self, k: int) -> None:
        self.contract = topk_rmv.TopKRmvContract(k)
        self.state = self.contract.initial_state()
        self._frozen: dict[Any, Any] = {}
        self._removes_snap: Optional[tuple] = ()

    def apply_op(self, op: tuple, replica_id: int) -> tuple[Any, Any, int]:
        payload = self.contract.prepare(self.state, op, replica_id)
        self.contract.apply_effect(self.state, payload)
        return payload, payload, self.contract.payload_size(payload)

    def merge_item(self, item: Any) -> None:
        if type(item) is topk_rmv.Add:
            self._merge_tuple(item.id, item.score, item.ts)
        else:
            self.state.apply_remove(item.id, item.clock)

    def _merge_tuple(self, id: Any, score: int, ts: Timestamp) -> None:
        self.state.vc.raise_to(ts.site, ts.val)
        if self.state.covered(id, ts):
            return
        group = self.state.elems.get(id)
        if group is not None and ts in group:
            return
        self.state.insert(id, score, ts)

    def _settle_covers(self) -> None:
        state = self.state
        if state.dirty_covers:
            for id in state.dirty_covers:
                self._frozen[id] = state.removes[id].freeze()
            state.dirty_covers.clear()
            self._removes_snap = None

    def snapshot(self) -> tuple[Any, int]:
        self._settle_covers()
        if self._removes_snap is None:
            self._removes_snap = tuple(sorted(self._frozen.items()))
        tops = tuple(self.state.top_entries())
        nbytes = len(tops) * (sizing.ID + sizing.VALUE + sizing.TS) + self.state.removes_nbytes
        return (tops, self._removes_snap), nbytes

    def merge_body(self, body: Any) -> None:
        tops, removes = body
        self._settle_covers()
        frozen = self._frozen
        for id, clock in removes:
            if frozen.get(id) != clock:
                self.state.apply_remove(id, clock)
        for id, score, ts in tops:
            self._merge_tuple(id, score, ts)

    def query(self) -> Any:
        return self.state.query_result()

    def replica_size(self) -> int:
        return self.contract.state_size(self.state)


class _ContributionShip:
    """Per-(source, key) monotone contribution map; merge is entrywise max.

    Durability items carry the source's cumulative per-key total, so applying
    an item commutes with applying any full-map broadcast that may already
    include it.
    """

    entry_nbytes = 4 + sizing.ID + sizing.VALUE

    def __init__(self) -> None:
        self.contributions: dict[tuple[int, Any], int] = {}

    def _raise(self, source: int, key: Any, total: int) -> int:
        slot = (source, key)
        cur = self.contributions.get(slot, 0)
        if total <= cur:
            return 0
        self.contributions[slot] = total
        return total - cur

    def snapshot(self) -> tuple[Any, int]:
        body = tuple(sorted(self.contributions.items()))
        return body, len(body) * self.entry_nbytes

    def merge_body(self, body: Any) -> None:
        for (source, key), total in body:
            delta = self._raise(source, key, total)
            if delta:
                self._bump(key, delta)

    def merge_item(self, item: Any) -> None:
        source, key, total = item
        delta = self._raise(source, key, total)
        if delta:
            self._bump(key, delta)

    def replica_size(self) -> int:
        return len(self.contributions) * self.entry_nbytes

    def _bump(self, key: Any, delta: int) -> None:
        raise NotImplementedError


class TopSumShip(_ContributionShip):
    def __init__(self, k: int) -> None:
        super().__init__()
        self.totals = top_sum.TopSumState(k)

    def apply_op(self, op: tuple, replica_id: int) -> tuple[Any, Any, int]:
        kind, id, amount = op
        if kind != "add" or not isinstance(amount, int) or amount <= 0:
            raise ValueError("top-sum only supports positive integer adds")
        payload = top_sum.Add(id, amount)
        total = self.contributions.get((replica_id, id), 0) + amount
        self.contributions[(replica_id, id)] = total
        self.totals.add(id, amount)
        return payload, (replica_id, id, total), self.entry_nbytes

    def _bump(self, key: Any, delta: int) -> None:
        self.totals.add(key, delta)

    def query(self) -> Any:
        return dict(self.totals.top_sums())


class HistogramShip(_ContributionShip):
    def __init__(self) -> None:
        super().__init__()
        self.bins: dict[Any, int] = {}

    def apply_op(self, op: tuple, replica_id: int) -> tuple[Any, Any, int]:
        if op[0] != "add":
            raise ValueError("histogram shipping only supports single-bin adds")
        bin = op[1]
        payload = histogram.Merge(((bin, 1),))
        total = self.contributions.get((replica_id, bin), 0) + 1
        self.contributions[(replica_id, bin)] = total
        self.bins[bin] = self.bins.get(bin, 0) + 1
        return payload, (replica_id, bin, total), self.entry_nbytes

    def _bump(self, key: Any, delta: int) -> None:
        self.bins[key] = self.bins.get(key, 0) + delta

    def query(self) -> Any:
        return dict(self.bins)


class TopKPlainShip:
    def __init__(self, k: int) -> None:
        self.contract = topk_plain.TopKPlainContract(k)
        self.state = self.contract.initial_state()

    def apply_op(self, op: tuple, replica_id: int) -> tuple[Any, Any, int]:
        payload = self.contract.prepare(self.state, op, replica_id)
        self.contract.apply_effect(self.state, payload)
        return payload, payload, self.contract.payload_size(payload)

    def merge_item(self, item: Any) -> None:
        self.state.add(item.id, item.score)

    def snapshot(self) -> tuple[Any, int]:
        body = tuple(sorted(self.state.elems.items()))
        return body, len(body) * (sizing.ID + sizing.VALUE)

    def merge_body(self, body: Any) -> None:
        for id, score in body:
            self.state.add(id, score)

    def query(self) -> Any:
        return frozenset(self.state.elems.items())

    def replica_size(self) -> int:
        return self.contract.state_size(self.state)


def ship_adapter(data_type: str, k: int):
    if data_type == "topk-rmv":
        return TopKRmvShip(k)
    if data_type == "top-sum":
        return TopSumShip(k)
    if data_type == "topk":
        return TopKPlainShip(k)
    if data_type == "histogram":
        return HistogramShip()
    raise ValueError(f"unknown data type {data_type!r}")


class StateShipReplica:
    engine_name = "stateship"

    def __init__(self, replica_id: int, adapter, n_replicas: int, f: int) -> None:
        if not 0 <= f < n_replicas:
            raise ValueError("need 0 <= f < n_replicas")
        self.replica_id = replica_id
        self.adapter = adapter
        self.n_replicas = n_replicas
        self.f = f
        self._next_seq = 1
        self._last_shipped = adapter.snapshot()[0]

    def exec_op(self, op: tuple) -> tuple[OperationEnvelope, Optional[Send]]:
        payload, item, item_nbytes = self.adapter.apply_op(op, self.replica_id)
        env = OperationEnvelope(OpId(self.replica_id, self._next_seq), payload)
        self._next_seq += 1
        if self.f == 0:
            return env, None
        peers = tuple((self.replica_id + i) % self.n_replicas for i in range(1, self.f + 1))
        return env, Send(StateMessage(self.replica_id, "item", item, item_nbytes), peers)

    def sync(self) -> Optional[StateMessage]:
        body, nbytes = self.adapter.snapshot()
        if body == self._last_shipped:
            return None
        self._last_shipped = body
        return StateMessage(self.replica_id, "ship", body, nbytes)

    def on_receive(self, msg: StateMessage) -> None:
        if msg.kind == "item":
            self.adapter.merge_item(msg.body)
        else:
            self.adapter.merge_body(msg.body)

    def has_pending(self) -> bool:
        return self.adapter.snapshot()[0] != self._last_shipped

    def query(self) -> Any:
        return self.adapter.query()

    def replica_size(self) -> int:
        return self.adapter.replica_size()

"""Data-type contract consumed by the replication engine.

A contract bundles the sequential behaviour of a replicated object (prepare,
effect application, query) with the relevance hooks that decide which logged
operations must travel to other replicas:

* ``masked_forever``  - ops that can never again affect any query result
  anywhere; the engine discards them permanently.
* ``has_observable_impact`` - ops that are visible in the current query
  result (or, for removes, suppress something that would be visible).
* ``may_have_observable_impact`` - ops that cannot be ruled out because
  combining them with unseen remote ops could change the result.

Hooks are pure functions of ``(local log, state, received log)``; the engine
owns all mutation.
"""

from __future__ import annotations

from typing import Any, Iterable, Iterator, Optional

from .envelope import OperationEnvelope, OpId

__all__ = ["LogView", "BareLog", "NuTypeContract"]


class LogView:
    """Envelope set with the indexes the relevance hooks need.

    Indexed by payload class, by payload ``id`` (for payloads that have one),
    and by add timestamp.  ``amount_sums`` keeps per-id totals for payloads
    with an ``amount`` field, ``rmv_groups`` groups clock-bearing payloads by
    id, ``best_add`` tracks the strongest timestamped add per id, and
    ``nbytes`` is the running serialized size of the whole log.  ``touched``
    collects the ids whose membership changed since the last
    ``consume_touched``; scan-heavy hooks use it to skip groups that cannot
    have produced anything new.
    """

    __slots__ = (
        "envs", "by_class", "by_id", "by_ts", "touched", "rmv_groups",
        "best_add", "amount_sums", "nbytes", "_sizes",
    )

    def __init__(self, envelopes: Iterable[OperationEnvelope] = ()) -> None:
        self.envs: dict[OpId, OperationEnvelope] = {}
        self.by_class: dict[type, dict[OpId, OperationEnvelope]] = {}
        self.by_id: dict[Any, dict[OpId, OperationEnvelope]] = {}
        self.by_ts: dict[Any, OperationEnvelope] = {}
        self.touched: set = set()
        self.rmv_groups: dict[Any, dict[OpId, OperationEnvelope]] = {}
        self.best_add: dict[Any, OperationEnvelope] = {}
        self.amount_sums: dict[Any, int] = {}
        self.nbytes = 0
        self._sizes: dict[OpId, int] = {}
        for env in envelopes:
            self.add(env)

    def add(self, env: OperationEnvelope, nbytes: int = 0) -> None:
        oid = env.op_id
        if oid in self.envs:
            return
        self.envs[oid] = env
        self._sizes[oid] = nbytes
        self.nbytes += nbytes
        payload = env.payload
        cls = type(payload)
        cgroup = self.by_class.get(cls)
        if cgroup is None:
            cgroup = self.by_class[cls] = {}
        cgroup[oid] = env
        shape = _FIELD_SHAPE.get(cls)
        if shape is None:
            shape = _learn_shape(cls, payload)
        has_id, has_amount, has_clock, has_ts = shape
        key = None
        if has_id:
            key = payload.id
            igroup = self.by_id.get(key)
            if igroup is None:
                igroup = self.by_id[key] = {}
            igroup[oid] = env
            self.touched.add(key)
            if has_amount:
                self.amount_sums[key] = self.amount_sums.get(key, 0) + payload.amount
            elif has_clock:
                rgroup = self.rmv_groups.get(key)
                if rgroup is None:
                    rgroup = self.rmv_groups[key] = {}
                rgroup[oid] = env
        if has_ts:
            ts = payload.ts
            self.by_ts[ts] = env
            if has_id:
                cur = self.best_add.get(key)
                if cur is None or (-payload.score, ts) < (-cur.payload.score, cur.payload.ts):
                    self.best_add[key] = env

    def discard(self, op_id: OpId) -> Optional[OperationEnvelope]:
        env = self.envs.pop(op_id, None)
        if env is None:
            return None
        self.nbytes -= self._sizes.pop(op_id)
        payload = env.payload
        cls = type(payload)
        self.by_class[cls].pop(op_id)
        shape = _FIELD_SHAPE.get(cls)
        if shape is None:
            shape = _learn_shape(cls, payload)
        has_id, has_amount, has_clock, has_ts = shape
        key = None
        if has_id:
            key = payload.id
            group = self.by_id[key]
            group.pop(op_id)
            if not group:
                del self.by_id[key]
            self.touched.add(key)
            if has_amount:
                left = self.amount_sums[key] - payload.amount
                if left:
                    self.amount_sums[key] = left
                else:
                    del self.amount_sums[key]
            elif has_clock:
                rgroup = self.rmv_groups[key]
                rgroup.pop(op_id)
                if not rgroup:
                    del self.rmv_groups[key]
        if has_ts:
            self.by_ts.pop(payload.ts, None)
            if has_id and self.best_add.get(key) is env:
                self._reseat_best(key)
        return env

    def _reseat_best(self, key: Any) -> None:
        best = None
        best_key = None
        for env in self.by_id.get(key, _EMPTY).values():
            p = env.payload
            ts = getattr(p, "ts", None)
            if ts is None:
                continue
            k = (-p.score, ts)
            if best_key is None or k < best_key:
                best_key, best = k, env
        if best is None:
            self.best_add.pop(key, None)
        else:
            self.best_add[key] = best

    def consume_touched(self) -> set:
        """Ids changed since the previous call; resets the change marker."""
        out = self.touched
        self.touched = set()
        return out

    def size_of(self, op_id: OpId) -> int:
        return self._sizes[op_id]

    def group(self, key: Any) -> dict[OpId, OperationEnvelope]:
        return self.by_id.get(key, _EMPTY)

    def of_class(self, cls: type) -> dict[OpId, OperationEnvelope]:
        return self.by_class.get(cls, _EMPTY)

    def __contains__(self, op_id: OpId) -> bool:
        return op_id in self.envs

    def __len__(self) -> int:
        return len(self.envs)

    def __iter__(self) -> Iterator[OperationEnvelope]:
        return iter(self.envs.values())


_EMPTY: dict = {}

# Which optional payload fields a class carries, probed once per class; the
# per-envelope getattr chain was the hottest line in large simulations.
_FIELD_SHAPE: dict[type, tuple[bool, bool, bool, bool]] = {}


def _learn_shape(cls: type, sample: Any) -> tuple[bool, bool, bool, bool]:
    shape = (
        hasattr(sample, "id"),
        hasattr(sample, "amount"),
        hasattr(sample, "clock"),
        hasattr(sample, "ts"),
    )
    _FIELD_SHAPE[cls] = shape
    return shape


class BareLog:
    """Envelope set with byte accounting only.

    Engines that never consult the relevance hooks (full replication) use
    this in place of ``LogView`` to skip index upkeep.
    """

    __slots__ = ("envs", "nbytes", "_sizes")

    def __init__(self) -> None:
        self.envs: dict[OpId, OperationEnvelope] = {}
        self.nbytes = 0
        self._sizes: dict[OpId, int] = {}

    def add(self, env: OperationEnvelope, nbytes: int = 0) -> None:
        if env.op_id in self.envs:
            return
        self.envs[env.op_id] = env
        self._sizes[env.op_id] = nbytes
        self.nbytes += nbytes

    def discard(self, op_id: OpId) -> Optional[OperationEnvelope]:
        env = self.envs.pop(op_id, None)
        if env is not None:
            self.nbytes -= self._sizes.pop(op_id)
        return env

    def size_of(self, op_id: OpId) -> int:
        return self._sizes[op_id]

    def __contains__(self, op_id: OpId) -> bool:
        return op_id in self.envs

    def __len__(self) -> int:
        return len(self.envs)

    def __iter__(self) -> Iterator[OperationEnvelope]:
        return iter(self.envs.values())


class NuTypeContract:
    """Base contract; data types override the hooks that are not degenerate."""

    name = "abstract"

    def initial_state(self) -> Any:
        raise NotImplementedError

    def prepare(self, state: Any, op: tuple, replica_id: int) -> Any:
        """Map a prepare request to an effect payload; may raise ValueError."""
        raise NotImplementedError

    def apply_effect(self, state: Any, payload: Any) -> None:
        raise NotImplementedError

    def query(self, state: Any) -> Any:
        raise NotImplementedError

    # ---- relevance hooks -------------------------------------------------

    def masked_forever(self, local: LogView, state: Any, recv: LogView) -> list[OperationEnvelope]:
        return []

    def has_observable_impact(self, local: LogView, state: Any, recv: LogView) -> list[OperationEnvelope]:
        raise NotImplementedError

    def may_have_observable_impact(self, local: LogView, state: Any, recv: LogView) -> list[OperationEnvelope]:
        return []

    def compact(self, envelopes: list[OperationEnvelope]) -> list[OperationEnvelope]:
        """Fold a batch of same-source envelopes before broadcast; default identity."""
        return envelopes

    def subtract_payload(self, payload: Any, applied: list[Any]) -> Any:
        """Residual of a compacted payload after removing already-applied constituents.

        Only data types whose ``compact`` merges payloads can receive a
        partially-seen compacted envelope, and exactly those types have
        invertible effects.
        """
        raise NotImplementedError(f"{self.name} payloads are never merged")

    # ---- piggybacked metadata -------------------------------------------

    def make_metadata(self, state: Any) -> Any:
        return None

    def absorb_metadata(self, state: Any, metadata: Any) -> None:
        pass

    def metadata_size(self, metadata: Any) -> int:
        return 0

    # ---- canonical wire/state costs -------------------------------------

    def payload_size(self, payload: Any) -> int:
        raise NotImplementedError

    def state_size(self, state: Any) -> int:
        raise NotImplementedError

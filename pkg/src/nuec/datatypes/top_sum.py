"""Top-K sums.

Each id accumulates an integer total; the query shows the K ids with the
largest totals.  Increments commute, so there is no masking and no clock
bookkeeping.  What keeps traffic low is the demarcation rule in
``may_have_observable_impact``: a replica may hold back its local increments
for an id as long as they are provably too small to lift that id into any
replica's top, even if every other replica is sitting on increments of the
same size for it.
"""

from __future__ import annotations

import heapq
from typing import Any, NamedTuple, Optional

from ..contract import LogView, NuTypeContract
from ..envelope import OperationEnvelope, merged_envelope
from .. import sizing

__all__ = ["Add", "TopSumState", "TopSumContract"]


class Add(NamedTuple):
    id: Any
    amount: int


class TopSumState:
    __slots__ = ("k", "sums", "_top", "_top_ids", "_kth_key", "_min_top", "_stale")

    def __init__(self, k: int) -> None:
        self.k = k
        self.sums: dict[Any, int] = {}
        self._top: dict[Any, int] = {}
        self._top_ids: frozenset = frozenset()
        self._kth_key: Optional[tuple] = None
        self._min_top = 0
        self._stale = False

    def add(self, id: Any, amount: int) -> None:
        total = self.sums.get(id, 0) + amount
        self.sums[id] = total
        if not self._stale:
            if id in self._top_ids or self._kth_key is None or (-total, id) < self._kth_key:
                self._stale = True

    def _refresh(self) -> None:
        items = self.sums.items()
        if len(self.sums) > self.k:
            best = heapq.nsmallest(self.k, items, key=lambda p: (-p[1], p[0]))
            self._kth_key = (-best[-1][1], best[-1][0])
            self._min_top = best[-1][1]
        else:
            best = sorted(items, key=lambda p: (-p[1], p[0]))
            self._kth_key = None
            # an underfull top imposes no entry bar
            self._min_top = 0
        self._top = dict(best)
        self._top_ids = frozenset(self._top)
        self._stale = False

    def top_sums(self) -> dict[Any, int]:
        if self._stale:
            self._refresh()
        return self._top

    def top_ids(self) -> frozenset:
        if self._stale:
            self._refresh()
        return self._top_ids

    def min_top(self) -> int:
        if self._stale:
            self._refresh()
        return self._min_top


_ADD_NBYTES = sizing.TAG + sizing.ID + sizing.VALUE


class TopSumContract(NuTypeContract):
    name = "top-sum"

    def __init__(self, k: int, n_replicas: int) -> None:
        if k < 1:
            raise ValueError("k must be at least 1")
        if n_replicas < 1:
            raise ValueError("n_replicas must be at least 1")
        self.k = k
        self.n_replicas = n_replicas

    def initial_state(self) -> TopSumState:
        return TopSumState(self.k)

    def prepare(self, state: TopSumState, op: tuple, replica_id: int) -> Add:
        kind = op[0]
        if kind != "add":
            raise ValueError(f"unknown operation {kind!r}")
        _, id, amount = op
        if not isinstance(amount, int) or amount <= 0:
            raise ValueError("amount must be a positive integer")
        return Add(id, amount)

    def apply_effect(self, state: TopSumState, payload: Add) -> None:
        state.add(payload.id, payload.amount)

    def query(self, state: TopSumState) -> dict[Any, int]:
        return dict(state.top_sums())

    def has_observable_impact(self, local: LogView, state: TopSumState, recv: LogView) -> list[OperationEnvelope]:
        out = []
        for id in state.top_ids():
            out.extend(local.group(id).values())
        return out

    def may_have_observable_impact(self, local: LogView, state: TopSumState, recv: LogView) -> list[OperationEnvelope]:
        top_ids = state.top_ids()
        bar = state.min_top()
        n = self.n_replicas
        sums = state.sums
        out = []
        # held-back total s for an id may matter once s >= (bar - rest)/n,
        # where rest is what the id already has from everyone else; below
        # that, even n replicas all holding s cannot reach the bar
        for id, held in local.amount_sums.items():
            if id in top_ids:
                continue
            rest = sums.get(id, 0) - held
            if held * n >= bar - rest:
                out.extend(local.group(id).values())
        return out

    def compact(self, envelopes: list[OperationEnvelope]) -> list[OperationEnvelope]:
        groups: dict[Any, list[OperationEnvelope]] = {}
        for env in envelopes:
            groups.setdefault(env.payload.id, []).append(env)
        out = []
        for id, parts in groups.items():
            if len(parts) == 1:
                out.append(parts[0])
            else:
                total = sum(e.payload.amount for e in parts)
                out.append(merged_envelope(Add(id, total), parts))
        return out

    def subtract_payload(self, payload: Add, applied: list[Add]) -> Add:
        seen = sum(p.amount for p in applied)
        rest = payload.amount - seen
        if rest <= 0:
            raise ValueError("compacted amount not larger than its applied parts")
        return Add(payload.id, rest)

    def payload_size(self, payload: Add) -> int:
        return _ADD_NBYTES

    def state_size(self, state: TopSumState) -> int:
        return len(state.sums) * (sizing.ID + sizing.VALUE)

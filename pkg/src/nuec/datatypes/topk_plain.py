"""Top-K set without removals.

The query keeps the K best (id, score) pairs, one per id; higher score wins,
ties prefer the larger id.  Because nothing is ever removed, replica state is
just the current K pairs and a logged add becomes irrelevant the moment a
better add for its id is received.
"""

from __future__ import annotations

from typing import Any, NamedTuple, Optional

from ..contract import LogView, NuTypeContract
from ..envelope import OperationEnvelope
from .. import sizing

__all__ = ["Add", "TopKPlainState", "TopKPlainContract"]


class Add(NamedTuple):
    id: Any
    score: int


class TopKPlainState:
    __slots__ = ("k", "elems", "_min_key")

    def __init__(self, k: int) -> None:
        self.k = k
        self.elems: dict[Any, int] = {}
        self._min_key: Optional[tuple] = None

    def _weakest(self) -> tuple:
        if self._min_key is None:
            self._min_key = min((score, id) for id, score in self.elems.items())
        return self._min_key

    def add(self, id: Any, score: int) -> None:
        cur = self.elems.get(id)
        if cur is not None:
            if score > cur:
                self.elems[id] = score
                if self._min_key is not None and self._min_key[1] == id:
                    self._min_key = None
            return
        if len(self.elems) < self.k:
            self.elems[id] = score
            if self._min_key is not None and (score, id) < self._min_key:
                self._min_key = (score, id)
            return
        weakest = self._weakest()
        if (score, id) > weakest:
            del self.elems[weakest[1]]
            self.elems[id] = score
            self._min_key = None


_ADD_NBYTES = sizing.TAG + sizing.ID + sizing.VALUE


class TopKPlainContract(NuTypeContract):
    name = "topk"

    def __init__(self, k: int) -> None:
        if k < 1:
            raise ValueError("k must be at least 1")
        self.k = k

    def initial_state(self) -> TopKPlainState:
        return TopKPlainState(self.k)

    def prepare(self, state: TopKPlainState, op: tuple, replica_id: int) -> Add:
        kind = op[0]
        if kind != "add":
            raise ValueError(f"unknown operation {kind!r}")
        _, id, score = op
        if not isinstance(score, int):
            raise ValueError("score must be an integer")
        return Add(id, score)

    def apply_effect(self, state: TopKPlainState, payload: Add) -> None:
        state.add(payload.id, payload.score)

    def query(self, state: TopKPlainState) -> frozenset:
        return frozenset(state.elems.items())

    def masked_forever(self, local: LogView, state: TopKPlainState, recv: LogView) -> list[OperationEnvelope]:
        out = []
        # a local add loses forever once any replica has seen a better score
        # for the same id; "seen elsewhere" means it reached us as a received
        # op, local rivals still need to race remotely
        for id, group in local.by_id.items():
            rivals = recv.group(id)
            if not rivals:
                continue
            best = max(env.payload.score for env in rivals.values())
            for env in group.values():
                if env.payload.score < best:
                    out.append(env)
        return out

    def has_observable_impact(self, local: LogView, state: TopKPlainState, recv: LogView) -> list[OperationEnvelope]:
        out = []
        for id, score in state.elems.items():
            for env in local.group(id).values():
                if env.payload.score == score:
                    out.append(env)
        return out

    def payload_size(self, payload: Add) -> int:
        return _ADD_NBYTES

    def state_size(self, state: TopKPlainState) -> int:
        return len(state.elems) * (sizing.ID + sizing.VALUE)

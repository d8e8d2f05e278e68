"""Histogram of counters.

Every increment changes the query result, so nothing is masked and nothing
can be held back.  The savings come entirely from compaction: all increments
a replica accumulated since its last exchange fold into a single bin-delta
payload before going out.
"""

from __future__ import annotations

from typing import Any, NamedTuple

from ..contract import LogView, NuTypeContract
from ..envelope import OperationEnvelope, merged_envelope
from .. import sizing

__all__ = ["Merge", "HistogramState", "HistogramContract"]


class Merge(NamedTuple):
    bins: tuple  # ((bin, count), ...) sorted, counts positive


class HistogramState:
    __slots__ = ("bins",)

    def __init__(self) -> None:
        self.bins: dict[Any, int] = {}

    def merge(self, items: tuple) -> None:
        bins = self.bins
        for b, count in items:
            bins[b] = bins.get(b, 0) + count


_BIN_NBYTES = sizing.ID + sizing.VALUE


class HistogramContract(NuTypeContract):
    name = "histogram"

    def initial_state(self) -> HistogramState:
        return HistogramState()

    def prepare(self, state: HistogramState, op: tuple, replica_id: int) -> Merge:
        kind = op[0]
        if kind == "add":
            return Merge(((op[1], 1),))
        if kind == "merge":
            items = sorted(dict(op[1]).items())
            if not items or any(c <= 0 for _, c in items):
                raise ValueError("merge needs positive bin counts")
            return Merge(tuple(items))
        raise ValueError(f"unknown operation {kind!r}")

    def apply_effect(self, state: HistogramState, payload: Merge) -> None:
        state.merge(payload.bins)

    def query(self, state: HistogramState) -> dict[Any, int]:
        return dict(state.bins)

    def has_observable_impact(self, local: LogView, state: HistogramState, recv: LogView) -> list[OperationEnvelope]:
        return list(local)

    def compact(self, envelopes: list[OperationEnvelope]) -> list[OperationEnvelope]:
        if len(envelopes) < 2:
            return envelopes
        bins: dict[Any, int] = {}
        for env in envelopes:
            for b, count in env.payload.bins:
                bins[b] = bins.get(b, 0) + count
        return [merged_envelope(Merge(tuple(sorted(bins.items()))), envelopes)]

    def subtract_payload(self, payload: Merge, applied: list[Merge]) -> Merge:
        bins = dict(payload.bins)
        for part in applied:
            for b, count in part.bins:
                bins[b] = bins.get(b, 0) - count
        left = tuple(sorted((b, c) for b, c in bins.items() if c > 0))
        if not left:
            raise ValueError("compacted payload fully covered by its applied parts")
        return Merge(left)

    def payload_size(self, payload: Merge) -> int:
        return sizing.TAG + len(payload.bins) * _BIN_NBYTES

    def state_size(self, state: HistogramState) -> int:
        return len(state.bins) * (sizing.ID + sizing.VALUE)

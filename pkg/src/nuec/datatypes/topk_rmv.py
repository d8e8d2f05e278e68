"""Top-K set with removals.

Elements are (id, score) pairs; each add carries the unique timestamp that
names it.  The query returns the K best pairs, at most one per id (highest
score per id wins).  Removing an id erases every add of that id the remover
has seen; adds it has not seen survive, so concurrent add wins over remove.

Display order: higher score first, ties broken by smaller id, then by the
timestamp (site, counter) of the winning add.
"""

from __future__ import annotations

import heapq
from itertools import chain
from typing import Any, NamedTuple, Optional

from ..clocks import FrozenClock, Timestamp, VectorClock
from ..contract import LogView, NuTypeContract
from ..envelope import OperationEnvelope
from .. import sizing

__all__ = ["Add", "Rmv", "TopKRmvState", "TopKRmvContract"]


class Add(NamedTuple):
    id: Any
    score: int
    ts: Timestamp


class Rmv(NamedTuple):
    id: Any
    clock: FrozenClock


def _global_key(entry: tuple) -> tuple:
    id, score, ts = entry
    return (-score, id, ts.site, ts.val)


class TopKRmvState:
    """Surviving add tuples, per-id remove coverage, and the replica clock.

    The displayed top is cached and refreshed lazily; mutations mark it stale
    only when they can actually change it.
    """

    __slots__ = (
        "k", "elems", "removes", "vc", "ntuples", "removes_nbytes",
        "dirty_covers", "_best", "_top", "_top_ids", "_kth_key", "_stale",
        "_result",
    )

    def __init__(self, k: int) -> None:
        self.k = k
        self.elems: dict[Any, dict[Timestamp, int]] = {}
        self.removes: dict[Any, VectorClock] = {}
        self.vc = VectorClock()
        self.ntuples = 0
        self.removes_nbytes = 0
        self.dirty_covers: set = set()
        self._best: dict[Any, tuple[int, Timestamp]] = {}
        self._top: list[tuple[Any, int, Timestamp]] = []
        self._top_ids: frozenset = frozenset()
        self._kth_key: Optional[tuple] = None
        self._stale = False
        self._result: frozenset = frozenset()

    def covered(self, id: Any, ts: Timestamp) -> bool:
        cover = self.removes.get(id)
        return cover is not None and ts.val <= cover[ts.site]

    def insert(self, id: Any, score: int, ts: Timestamp) -> None:
        group = self.elems.get(id)
        if group is None:
            group = self.elems[id] = {}
        group[ts] = score
        self.ntuples += 1
        best = self._best.get(id)
        if best is None or (-score, ts) < (-best[0], best[1]):
            self._best[id] = (score, ts)
            if not self._stale:
                if len(self._top) < self.k or id in self._top_ids:
                    self._stale = True
                elif (-score, id, ts.site, ts.val) < self._kth_key:
                    self._stale = True

    def apply_remove(self, id: Any, clock: FrozenClock) -> None:
        cover = self.removes.get(id)
        if cover is None:
            cover = self.removes[id] = VectorClock()
            self.removes_nbytes += sizing.ID + sizing.VC_BASE
        self.dirty_covers.add(id)
        before = len(cover)
        cover.merge(clock)
        self.removes_nbytes += sizing.VC_ENTRY * (len(cover) - before)
        group = self.elems.get(id)
        if not group:
            return
        dead = [ts for ts in group if ts.val <= cover[ts.site]]
        if not dead:
            return
        for ts in dead:
            del group[ts]
        self.ntuples -= len(dead)
        if group:
            score, ts = min(((s, t) for t, s in group.items()), key=lambda p: (-p[0], p[1]))
            self._best[id] = (score, ts)
        else:
            del self.elems[id]
            del self._best[id]
        if id in self._top_ids:
            self._stale = True

    def _refresh(self) -> None:
        entries = [(id, sc, ts) for id, (sc, ts) in self._best.items()]
        if len(entries) > self.k:
            entries = heapq.nsmallest(self.k, entries, key=_global_key)
        else:
            entries.sort(key=_global_key)
        self._top = entries
        self._top_ids = frozenset(e[0] for e in entries)
        self._kth_key = _global_key(entries[-1]) if len(entries) == self.k else None
        self._result = frozenset((id, sc) for id, sc, _ in entries)
        self._stale = False

    def top_entries(self) -> list[tuple[Any, int, Timestamp]]:
        if self._stale:
            self._refresh()
        return self._top

    def query_result(self) -> frozenset:
        if self._stale:
            self._refresh()
        return self._result

    def would_display(self, id: Any, score: int, ts: Timestamp) -> bool:
        """Would an add tuple appear in the query result if (re)inserted now?"""
        best = self._best.get(id)
        if best is not None and (-best[0], best[1]) < (-score, ts):
            return False
        if self._stale:
            self._refresh()
        if len(self._top) < self.k or id in self._top_ids:
            return True
        return (-score, id, ts.site, ts.val) < self._kth_key


_ADD_NBYTES = sizing.TAG + sizing.ID + sizing.VALUE + sizing.TS
_RMV_BASE = sizing.TAG + sizing.ID + sizing.VC_BASE


class TopKRmvContract(NuTypeContract):
    name = "topk-rmv"

    def __init__(self, k: int) -> None:
        if k < 1:
            raise ValueError("k must be at least 1")
        self.k = k

    def initial_state(self) -> TopKRmvState:
        return TopKRmvState(self.k)

    def prepare(self, state: TopKRmvState, op: tuple, replica_id: int) -> Any:
        kind = op[0]
        if kind == "add":
            _, id, score = op
            if not isinstance(score, int):
                raise ValueError("score must be an integer")
            return Add(id, score, Timestamp(replica_id, state.vc.bump(replica_id)))
        if kind == "rmv":
            return Rmv(op[1], state.vc.freeze())
        raise ValueError(f"unknown operation {kind!r}")

    def apply_effect(self, state: TopKRmvState, payload: Any) -> None:
        if type(payload) is Add:
            # the clock advances even when the add lost to a known remove,
            # so later removes here keep covering it
            state.vc.raise_to(payload.ts.site, payload.ts.val)
            if not state.covered(payload.id, payload.ts):
                state.insert(payload.id, payload.score, payload.ts)
        else:
            state.apply_remove(payload.id, payload.clock)

    def query(self, state: TopKRmvState) -> frozenset:
        return state.query_result()

    def masked_forever(self, local: LogView, state: TopKRmvState, recv: LogView) -> list[OperationEnvelope]:
        """Scans incrementally: an add can only become masked when its id
        group gains a member or its remove cover rises, so only ids flagged
        dirty since the previous scan are revisited.  Callers must discard
        the reported envelopes; a second scan over an unchanged log says
        nothing about them again."""
        out: dict = {}
        dirty = local.consume_touched()
        dirty.update(state.dirty_covers)
        state.dirty_covers.clear()
        removes = state.removes
        for id in dirty:
            group = local.by_id.get(id)
            if group is None:
                continue
            cover = removes.get(id)
            by_site: dict[int, list[OperationEnvelope]] = {}
            for env in group.values():
                p = env.payload
                if type(p) is not Add:
                    continue
                # an add covered by a remove this replica knows;
                # state.removes is the pointwise max over every remove
                # ever applied here
                if cover is not None and p.ts.val <= cover[p.ts.site]:
                    out[env.op_id] = env
                else:
                    by_site.setdefault(p.ts.site, []).append(env)
            # an add obsoleted by a same-site, same-id add with higher score
            # and higher counter; cross-site counters are incomparable so
            # they never mask each other
            for entries in by_site.values():
                if len(entries) < 2:
                    continue
                entries.sort(key=lambda e: -e.payload.ts.val)
                best = entries[0].payload.score
                for env in entries[1:]:
                    score = env.payload.score
                    if score < best:
                        out[env.op_id] = env
                    elif score > best:
                        best = score
        # a remove strictly dominated by another known remove of the same id
        for id, rmvs in local.rmv_groups.items():
            others = recv.rmv_groups.get(id)
            for env in rmvs.values():
                if env.op_id in out:
                    continue
                clock = env.payload.clock
                dominated = any(
                    other is not env and _frozen_less(clock, other.payload.clock)
                    for other in rmvs.values()
                )
                if not dominated and others:
                    dominated = any(
                        _frozen_less(clock, other.payload.clock) for other in others.values()
                    )
                if dominated:
                    out[env.op_id] = env
        return list(out.values())

    def has_observable_impact(self, local: LogView, state: TopKRmvState, recv: LogView) -> list[OperationEnvelope]:
        out = []
        for id, score, ts in state.top_entries():
            env = local.by_ts.get(ts)
            if env is not None:
                out.append(env)
        # a remove is in play while it suppresses an add someone would
        # otherwise display; if even the strongest known add of the id would
        # not display, no suppressed one would either
        for id, rmvs in local.rmv_groups.items():
            best = local.best_add.get(id)
            other = recv.best_add.get(id)
            if best is None:
                best = other
            elif other is not None and (-other.payload.score, other.payload.ts) < (
                -best.payload.score,
                best.payload.ts,
            ):
                best = other
            if best is None:
                continue
            bp = best.payload
            if not state.would_display(bp.id, bp.score, bp.ts):
                continue
            for env in rmvs.values():
                cover = dict(env.payload.clock)
                if bp.ts.val <= cover.get(bp.ts.site, 0):
                    out.append(env)
                    continue
                for add_env in chain(local.group(id).values(), recv.group(id).values()):
                    p = add_env.payload
                    if (
                        type(p) is Add
                        and p.ts.val <= cover.get(p.ts.site, 0)
                        and state.would_display(p.id, p.score, p.ts)
                    ):
                        out.append(env)
                        break
        return out

    # broadcasts carry the sender clock so receivers treat every add they
    # have not seen as concurrent with their own removes
    def make_metadata(self, state: TopKRmvState) -> FrozenClock:
        return state.vc.freeze()

    def absorb_metadata(self, state: TopKRmvState, metadata: FrozenClock) -> None:
        state.vc.merge(metadata)

    def metadata_size(self, metadata: FrozenClock) -> int:
        return sizing.clock_size(len(metadata))

    def payload_size(self, payload: Any) -> int:
        if type(payload) is Add:
            return _ADD_NBYTES
        return _RMV_BASE + sizing.VC_ENTRY * len(payload.clock)

    def state_size(self, state: TopKRmvState) -> int:
        tuples = state.ntuples * (sizing.ID + sizing.VALUE + sizing.TS)
        return tuples + state.removes_nbytes + sizing.clock_size(len(state.vc))


def _frozen_less(a: FrozenClock, b: FrozenClock) -> bool:
    if a == b:
        return False
    cover = dict(b)
    return all(val <= cover.get(site, 0) for site, val in a)

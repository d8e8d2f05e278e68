"""Logical timestamps and vector clocks used by the replicated data types.

A ``Timestamp`` identifies one add operation: the replica that generated it
and a per-replica counter value.  A ``VectorClock`` summarises, per replica,
the highest add counter known locally; missing entries read as zero.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple

__all__ = ["Timestamp", "VectorClock", "FrozenClock", "pointwise_max"]

# immutable wire form of a vector clock: ((site, val), ...) sorted by site
FrozenClock = tuple[tuple[int, int], ...]


class Timestamp(NamedTuple):
    site: int
    val: int


class VectorClock(dict):
    """Map of replica id to highest known counter; absent entries are 0."""

    __slots__ = ()

    def __missing__(self, site: int) -> int:
        return 0

    def bump(self, site: int) -> int:
        """Increment and return this site's entry (used when generating adds)."""
        nxt = self[site] + 1
        self[site] = nxt
        return nxt

    def raise_to(self, site: int, val: int) -> None:
        if val > self[site]:
            self[site] = val

    def merge(self, other: Iterable[tuple[int, int]]) -> None:
        """Pointwise max with ``other`` (a clock or an iterable of pairs), in place."""
        items = other.items() if isinstance(other, dict) else other
        for site, val in items:
            if val > self[site]:
                self[site] = val

    def covers(self, ts: Timestamp) -> bool:
        """True when an add with timestamp ``ts`` is dominated by this clock."""
        return ts.val <= self[ts.site]

    def leq(self, other: dict) -> bool:
        """Componentwise <= (the standard partial order; absent entries are 0)."""
        for site, val in self.items():
            if val > other.get(site, 0):
                return False
        return True

    def less(self, other: dict) -> bool:
        """Strict partial order: leq and not equal."""
        return self.leq(other) and self.trimmed() != _trim(other)

    def freeze(self) -> FrozenClock:
        """Immutable snapshot, zero entries dropped, sorted by site."""
        return tuple(sorted((s, v) for s, v in self.items() if v > 0))

    def trimmed(self) -> dict[int, int]:
        return {s: v for s, v in self.items() if v > 0}

    def copy(self) -> "VectorClock":
        fresh = VectorClock()
        fresh.update(self)
        return fresh

    @classmethod
    def from_items(cls, items: Iterable[tuple[int, int]]) -> "VectorClock":
        vc = cls()
        for site, val in items:
            if val > vc[site]:
                vc[site] = val
        return vc


def _trim(clock: dict) -> dict[int, int]:
    return {s: v for s, v in clock.items() if v > 0}


def pointwise_max(a: Iterable[tuple[int, int]], b: Iterable[tuple[int, int]]) -> FrozenClock:
    """Entrywise max of two frozen clocks, returned frozen."""
    merged = VectorClock.from_items(a)
    merged.merge(b)
    return merged.freeze()

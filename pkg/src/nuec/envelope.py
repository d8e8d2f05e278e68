"""Operation envelopes and the messages that carry them between replicas."""

from __future__ import annotations

from typing import Any, NamedTuple, Optional, Sequence

__all__ = ["OpId", "OperationEnvelope", "SyncMessage", "StateMessage", "Send", "merged_envelope"]


class OpId(NamedTuple):
    """Identity of an operation: source replica plus per-source sequence number.

    ``merged`` marks the derived identity of a payload produced by compacting
    several constituent operations; it keeps derived ids disjoint from the
    plain id space.
    """

    site: int
    seq: int
    merged: bool = False


class OperationEnvelope(NamedTuple):
    op_id: OpId
    payload: Any
    durability_copy: bool = False
    # set only on compacted payloads: the plain ids folded into this envelope
    constituents: Optional[tuple[OpId, ...]] = None


class SyncMessage(NamedTuple):
    sender: int
    envelopes: tuple[OperationEnvelope, ...]
    metadata: Any = None
    broadcast: bool = True


class StateMessage(NamedTuple):
    """State shipment used by the state-shipping baseline.

    ``kind`` is "ship" for a broadcast rendering of the full state and "item"
    for a point-to-point durability delta.  ``nbytes`` is the metered body
    size, computed by the adapter that built the body.
    """

    sender: int
    kind: str
    body: Any
    nbytes: int = 0


class Send(NamedTuple):
    """A message handed to the network; ``targets=None`` means all other live replicas."""

    message: Any
    targets: Optional[tuple[int, ...]] = None


def merged_envelope(payload: Any, parts: Sequence[OperationEnvelope]) -> OperationEnvelope:
    """Envelope for a payload that folds ``parts`` together.

    All parts must come from the same source replica; the derived id reuses
    the smallest constituent sequence number so it is deterministic and never
    collides across syncs (an operation is compacted at most once).
    """
    ids = sorted(p.op_id for p in parts)
    site = ids[0].site
    if any(i.site != site or i.merged for i in ids):
        raise ValueError("compaction may only merge plain ops from one source")
    return OperationEnvelope(OpId(site, ids[0].seq, True), payload, False, tuple(ids))

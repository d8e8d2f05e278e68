"""Canonical size model for metering.

All byte counts in the simulator derive from the constants below.  The model
is a flat binary encoding, not what Python objects weigh in memory:

    field                       bytes
    -------------------------   -----
    payload tag                   1
    element id                    8
    score / amount / bin count    8
    timestamp (site + counter)   12   = 4 + 8
    op identifier                12   = site 4 + seq 8
    vector clock                  4 + 12 per nonzero entry
    message header               16   = sender 4 + kind 1 + count 3 + seq 8

Envelope cost is its payload plus one op id, plus one op id per constituent
when the envelope is the result of compaction (receivers need the original
identities for deduplication).  Replica size is the serialized state plus
both operation logs; baseline replicas count the analogous quantities so the
comparison across engines is apples to apples.
"""

from __future__ import annotations

from typing import Optional

from .envelope import OperationEnvelope, SyncMessage

__all__ = [
    "TAG", "ID", "VALUE", "TS", "OPID", "VC_BASE", "VC_ENTRY", "HEADER",
    "clock_size", "envelope_size", "sync_message_size",
]

TAG = 1
ID = 8
VALUE = 8
TS = 12
OPID = 12
VC_BASE = 4
VC_ENTRY = 12
HEADER = 16


def clock_size(entries: int) -> int:
    return VC_BASE + VC_ENTRY * entries


def envelope_size(payload_nbytes: int, env: OperationEnvelope) -> int:
    parts = len(env.constituents) if env.constituents else 0
    return payload_nbytes + OPID * (1 + parts)


def sync_message_size(contract, msg: SyncMessage) -> int:
    total = HEADER
    for env in msg.envelopes:
        total += envelope_size(contract.payload_size(env.payload), env)
    if msg.metadata is not None:
        total += contract.metadata_size(msg.metadata)
    return total

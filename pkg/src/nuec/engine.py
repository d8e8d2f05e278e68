"""Log-based replication engine with relevance-filtered propagation.

A replica applies every operation locally on arrival, but only forwards the
ones its data type's contract cannot prove irrelevant.  Locally known ops
wait in ``log_local``; a sync pass asks the contract which of them are
masked forever (dropped), observable now, or potentially observable
(broadcast), and moves broadcast ops to ``log_recv`` where they stay as
received knowledge.

Durability: each locally generated op is also copied point-to-point to the
next ``f`` replicas on the ring.  A copy lands in the receiver's
``log_local``, so the receiver re-broadcasts it if it ever becomes relevant,
which keeps the op alive through up to ``f`` crashes.  Once the origin's own
broadcast of that op arrives, the copy moves to ``log_recv`` and the
receiver's forwarding duty ends.

Every envelope carries a globally unique op id; compacted envelopes list the
ids they fold together, so a receiver that already applied some constituents
(through an earlier point-to-point copy) applies only the residue.
"""

from __future__ import annotations

from typing import Any, Optional

from . import sizing
from .contract import LogView, NuTypeContract
from .envelope import OperationEnvelope, OpId, Send, SyncMessage

__all__ = ["ReplicaEngine"]


class ReplicaEngine:
    engine_name = "nuec"
    log_factory = LogView

    def __init__(self, replica_id: int, contract: NuTypeContract, n_replicas: int, f: int) -> None:
        if not 0 <= f < n_replicas:
            raise ValueError("need 0 <= f < n_replicas")
        self.replica_id = replica_id
        self.contract = contract
        self.n_replicas = n_replicas
        self.f = f
        self.state = contract.initial_state()
        self.log_local = self.log_factory()
        self.log_recv = self.log_factory()
        self.seen: set[OpId] = set()
        self._next_seq = 1
        self._ring_peers = tuple((replica_id + i) % n_replicas for i in range(1, f + 1))

    # ---- local operations ------------------------------------------------

    def exec_op(self, op: tuple) -> tuple[OperationEnvelope, Optional[Send]]:
        """Apply a client operation locally; returns the envelope flowing out
        of prepare and, when f > 0, the point-to-point durability send."""
        payload = self.contract.prepare(self.state, op, self.replica_id)
        env = OperationEnvelope(OpId(self.replica_id, self._next_seq), payload)
        self._next_seq += 1
        self.contract.apply_effect(self.state, payload)
        self.seen.add(env.op_id)
        self.log_local.add(env, self._env_size(env))
        if self.f == 0:
            return env, None
        copy = OperationEnvelope(env.op_id, payload, True)
        return env, Send(SyncMessage(self.replica_id, (copy,), None, broadcast=False), self._ring_peers)

    def query(self) -> Any:
        return self.contract.query(self.state)

    # ---- propagation -----------------------------------------------------

    def ops_to_propagate(self) -> list[OperationEnvelope]:
        """Relevant local ops, in op-id order.  Commits masking: ops ruled
        out forever are discarded from the local log as a side effect."""
        contract = self.contract
        for env in contract.masked_forever(self.log_local, self.state, self.log_recv):
            self.log_local.discard(env.op_id)
        out = {
            env.op_id: env
            for env in contract.has_observable_impact(self.log_local, self.state, self.log_recv)
        }
        for env in contract.may_have_observable_impact(self.log_local, self.state, self.log_recv):
            out[env.op_id] = env
        return [out[oid] for oid in sorted(out)]

    def has_pending(self) -> bool:
        """Would a sync now send anything?  Leaves the logs as they were."""
        contract = self.contract
        masked = contract.masked_forever(self.log_local, self.state, self.log_recv)
        pulled = [(env, self.log_local.size_of(env.op_id)) for env in masked]
        for env, _ in pulled:
            self.log_local.discard(env.op_id)
        pending = bool(contract.has_observable_impact(self.log_local, self.state, self.log_recv)) or bool(
            contract.may_have_observable_impact(self.log_local, self.state, self.log_recv)
        )
        for env, nbytes in pulled:
            self.log_local.add(env, nbytes)
        return pending

    def sync(self) -> Optional[SyncMessage]:
        """Broadcast every currently relevant local op, compacted, and move
        the originals into the received log."""
        relevant = self.ops_to_propagate()
        if not relevant:
            return None
        own, forwarded = [], []
        for env in relevant:
            if env.op_id.site == self.replica_id:
                own.append(env)
            elif env.durability_copy:
                # a durability copy being re-broadcast travels as a normal op
                forwarded.append(OperationEnvelope(env.op_id, env.payload, False, env.constituents))
            else:
                forwarded.append(env)
        outgoing = list(self.contract.compact(own)) if own else []
        outgoing.extend(forwarded)
        for env in relevant:
            nbytes = self.log_local.size_of(env.op_id)
            self.log_local.discard(env.op_id)
            if env.durability_copy:
                env = OperationEnvelope(env.op_id, env.payload, False, env.constituents)
            self.log_recv.add(env, nbytes)
        return SyncMessage(
            self.replica_id, tuple(outgoing), self.contract.make_metadata(self.state), broadcast=True
        )

    # ---- receiving ---------------------------------------------------------

    def on_receive(self, msg: SyncMessage) -> None:
        if msg.broadcast and msg.metadata is not None:
            self.contract.absorb_metadata(self.state, msg.metadata)
        for env in msg.envelopes:
            if env.constituents:
                self._receive_compacted(env)
            else:
                self._receive_plain(env)

    def _receive_plain(self, env: OperationEnvelope) -> None:
        oid = env.op_id
        if oid in self.seen:
            if env.durability_copy:
                return
            # the origin's broadcast reached everyone, so a copy we hold no
            # longer needs forwarding; record the op as received knowledge
            moved = self.log_local.discard(oid)
            if moved is not None:
                plain = OperationEnvelope(moved.op_id, moved.payload, False, moved.constituents)
                self.log_recv.add(plain, self._env_size(env))
            elif oid not in self.log_recv:
                self.log_recv.add(env, self._env_size(env))
            return
        self.contract.apply_effect(self.state, env.payload)
        self.seen.add(oid)
        target = self.log_local if env.durability_copy else self.log_recv
        target.add(env, self._env_size(env))

    def _receive_compacted(self, env: OperationEnvelope) -> None:
        if env.op_id in self.seen:
            return
        parts = env.constituents
        unseen = [c for c in parts if c not in self.seen]
        if unseen:
            if len(unseen) == len(parts):
                payload = env.payload
            else:
                # constituents we already applied arrived as plain copies, so
                # their payloads are still on hand in one of the logs
                applied = [self._payload_of(c) for c in parts if c in self.seen]
                payload = self.contract.subtract_payload(env.payload, applied)
            self.contract.apply_effect(self.state, payload)
            self.log_recv.add(env, self._env_size(env))
        self.seen.add(env.op_id)
        self.seen.update(parts)

    def _payload_of(self, op_id: OpId) -> Any:
        env = self.log_local.envs.get(op_id) or self.log_recv.envs.get(op_id)
        if env is None:
            raise LookupError(f"applied constituent {op_id} not found in either log")
        return env.payload

    # ---- accounting --------------------------------------------------------

    def _env_size(self, env: OperationEnvelope) -> int:
        return sizing.envelope_size(self.contract.payload_size(env.payload), env)

    def replica_size(self) -> int:
        return self.contract.state_size(self.state) + self.log_local.nbytes + self.log_recv.nbytes

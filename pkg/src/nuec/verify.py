"""Property verification suites behind the ``verify`` command.

Four families of checks, each deterministic for a given budget and seed:

* commutativity: small op sets are prepared under two causality regimes and
  the resulting effect payloads are applied in every permutation to a fresh
  state; all orders must yield the same query result, equal to the
  sequential oracle.
* hook soundness: every op script up to the budget over two ids is executed
  on a real cluster under a family of sync schedules; at quiescence every
  replica must match the oracle over all generated ops, so withholding a
  relevant op is caught as a divergence.
* redelivery idempotence: captured messages from a finished run are
  delivered again (twice); no query result may change.
* crash durability: scripted and randomized crash scenarios; survivors must
  quiesce, agree, and match the oracle restricted to surviving ops.

On failure the offending run is replayed with event tracing on, and the
returned record carries the full op log and delivery order.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional, Sequence

from .contract import NuTypeContract
from .datatypes import DATA_TYPES, make_contract
from .datatypes.oracle import result_for
from .sim.config import SimConfig
from .sim.runner import Cluster, observably_equivalent
from .sim.workload import WorkloadGen

__all__ = [
    "Failure",
    "format_failure",
    "check_commutativity",
    "check_hook_soundness",
    "check_redelivery",
    "check_crash_durability",
    "run_verify",
]


# ids are small ints to match the workload's id domain
ALPHABETS: dict[str, tuple[tuple, ...]] = {
    "topk-rmv": (
        ("add", 1, 1),
        ("add", 1, 2),
        ("add", 2, 1),
        ("add", 2, 2),
        ("rmv", 1),
        ("rmv", 2),
    ),
    "top-sum": (
        ("add", 1, 1),
        ("add", 1, 3),
        ("add", 2, 1),
        ("add", 2, 3),
    ),
    "topk": (
        ("add", 1, 1),
        ("add", 1, 2),
        ("add", 2, 1),
        ("add", 2, 2),
    ),
    "histogram": (
        ("add", 1),
        ("add", 2),
    ),
}

# length-5 commutativity scripts are built from these alphabet-index triples
# (anything larger than full 5-deep enumeration allows)
LENGTH5_KIND_SETS: dict[str, tuple[tuple[int, ...], ...]] = {
    "topk-rmv": ((0, 1, 4), (1, 4, 5)),
    "top-sum": ((0, 1, 3),),
    "topk": ((0, 1, 3),),
    "histogram": ((0, 1),),
}


@dataclass
class Failure:
    check: str
    data_type: str
    detail: str
    script: tuple = ()
    schedule: Any = None
    op_log: tuple = ()
    events: tuple = ()
    expected: Any = None
    got: Any = None


def format_failure(f: Failure) -> str:
    lines = [f"FAIL [{f.check}] {f.data_type}: {f.detail}"]
    if f.script:
        lines.append("  op script:")
        for i, (rid, op) in enumerate(f.script):
            lines.append(f"    #{i} replica {rid}: {op}")
    if f.op_log:
        lines.append("  generated payloads:")
        for op_id, payload in f.op_log:
            lines.append(f"    {tuple(op_id)} -> {payload}")
    if f.schedule is not None:
        lines.append(f"  schedule: {f.schedule}")
    if f.events:
        lines.append("  delivery order:")
        for ev in f.events:
            lines.append(f"    {ev}")
    if f.expected is not None or f.got is not None:
        lines.append(f"  expected: {f.expected}")
        lines.append(f"  got:      {f.got}")
    return "\n".join(lines)


# ---- commutativity -----------------------------------------------------------


def _shared_payloads(contract: NuTypeContract, script: Sequence[tuple[int, tuple]]) -> list:
    # one pair of states that both observe every effect as it is prepared
    states = [contract.initial_state(), contract.initial_state()]
    payloads = []
    for rid, op in script:
        payload = contract.prepare(states[rid], op, rid)
        payloads.append(payload)
        for st in states:
            contract.apply_effect(st, payload)
    return payloads


def _split_payloads(contract: NuTypeContract, script: Sequence[tuple[int, tuple]]) -> list:
    # each replica only ever sees its own effects, so cross-replica ops are
    # pairwise concurrent
    states = [contract.initial_state(), contract.initial_state()]
    payloads = []
    for rid, op in script:
        payload = contract.prepare(states[rid], op, rid)
        payloads.append(payload)
        contract.apply_effect(states[rid], payload)
    return payloads


def _assignments(length: int, exhaustive: bool) -> Iterable[tuple[int, ...]]:
    if exhaustive:
        return itertools.product((0, 1), repeat=length)
    fixed = {
        4: ((0, 0, 1, 1), (0, 1, 0, 1), (0, 0, 0, 0)),
        5: ((0, 0, 0, 1, 1), (0, 1, 0, 1, 0)),
    }
    return fixed[length]

def check_commutativity(
    data_type: str, budget: int = 5, k: int = 1, limit: int = 8
) -> tuple[list[Failure], dict]:
    """All permutations of every prepared payload set must agree with the
    sequential oracle.  Scripts up to length 3 are fully enumerated over op
    kinds and replica assignments; length 4 uses fixed assignments; length 5
    uses reduced op-kind sets."""
    alphabet = ALPHABETS[data_type]
    contract = make_contract(data_type, k, 2)
    failures: list[Failure] = []
    scripts_checked = 0
    orders_checked = 0

    def kind_sequences(length: int) -> Iterable[tuple[int, ...]]:
        if length <= 4:
            return itertools.product(range(len(alphabet)), repeat=length)
        return itertools.chain.from_iterable(
            itertools.product(kinds, repeat=length) for kinds in LENGTH5_KIND_SETS[data_type]
        )

    for length in range(1, min(budget, 5) + 1):
        for kinds in kind_sequences(length):
            for assignment in _assignments(length, exhaustive=length <= 3):
                script = tuple((rid, alphabet[i]) for rid, i in zip(assignment, kinds))
                for regime, gen in (("split", _split_payloads), ("shared", _shared_payloads)):
                    payloads = gen(contract, script)
                    oracle = result_for(data_type, payloads, k)
                    scripts_checked += 1
                    for perm in itertools.permutations(payloads):
                        state = contract.initial_state()
                        for p in perm:
                            contract.apply_effect(state, p)
                        got = contract.query(state)
                        orders_checked += 1
                        if got != oracle:
                            failures.append(
                                Failure(
                                    check="commutativity",
                                    data_type=data_type,
                                    detail=f"application order changed the result (regime={regime})",
                                    script=script,
                                    schedule=tuple(str(p) for p in perm),
                                    expected=oracle,
                                    got=got,
                                )
                            )
                            if len(failures) >= limit:
                                return failures, {
                                    "scripts": scripts_checked,
                                    "orders": orders_checked,
                                }
                            break
    return failures, {"scripts": scripts_checked, "orders": orders_checked}


# ---- engine-level script driver ----------------------------------------------


def _drive(
    cfg: SimConfig,
    script: Sequence[tuple[int, tuple]],
    sync_after: Sequence[bool],
    contract: Optional[NuTypeContract] = None,
    crashes: Optional[dict[int, list[int]]] = None,
    trace: Optional[list] = None,
) -> tuple[Optional[list], Cluster]:
    """Execute a script on a real cluster under an explicit sync schedule,
    then run the quiescence cascade.  Returns (per-replica results, cluster),
    with results None if the cascade failed to settle."""
    cluster = Cluster(cfg, contract=contract)
    crashes = crashes or {}

    def note(event: tuple) -> None:
        if trace is not None:
            trace.append(event)

    def deliver(now: int) -> None:
        for at, target, message in cluster.network.due(now):
            if target in cluster.live:
                cluster.replicas[target].on_receive(message)
                note(("deliver", at, target, _describe(message)))

    for i, (rid, op) in enumerate(script):
        deliver(i)
        for crashed in crashes.get(i, ()):
            cluster.crash(crashed)
            note(("crash", i, crashed))
        if rid not in cluster.live:
            continue
        cluster.generate(i, rid, op)
        note(("exec", i, rid, op))
        if sync_after[i]:
            for r in sorted(cluster.live):
                cluster.sync_replica(i, r)
                note(("sync", i, r))

    n = len(script)
    for crashed in crashes.get(n, ()):
        cluster.crash(crashed)
        note(("crash", n, crashed))

    now = n
    rounds = 0
    bound = max(n, 1) * cfg.n_replicas + 4
    while True:
        for at, target, message in cluster.network.drain():
            now = max(now, at)
            if target in cluster.live:
                cluster.replicas[target].on_receive(message)
                note(("deliver", at, target, _describe(message)))
        if not any(cluster.replicas[r].has_pending() for r in sorted(cluster.live)):
            break
        if rounds >= bound:
            return None, cluster
        rounds += 1
        for r in sorted(cluster.live):
            cluster.sync_replica(now, r)
            note(("sync", now, r))
    results = [cluster.replicas[r].query() for r in sorted(cluster.live)]
    return results, cluster


def _describe(message: Any) -> str:
    envelopes = getattr(message, "envelopes", None)
    if envelopes is None:
        return f"state ship from {message.sender}"
    kind = "broadcast" if message.broadcast else "durability copy"
    body = ", ".join(
        f"{tuple(env.op_id)}:{env.payload}" for env in envelopes
    )
    return f"{kind} from {message.sender} [{body}]"


def _adjusted_oracle(cluster: Cluster, cfg: SimConfig) -> Any:
    live = sorted(cluster.live)
    if len(live) < cfg.n_replicas:
        survivor_seen: set = set()
        for r in live:
            survivor_seen |= cluster.replicas[r].seen
        payloads = [p for oid, p in cluster.generated if oid in survivor_seen]
    else:
        payloads = [p for _, p in cluster.generated]
    return result_for(cfg.data_type, payloads, cfg.k)


# ---- hook soundness ------------------------------------------------------------


def _soundness_cfg(data_type: str, n_replicas: int, f: int) -> SimConfig:
    return SimConfig(
        engine="nuec",
        data_type=data_type,
        n_replicas=n_replicas,
        f=f,
        k=1,
        n_bins=2,
        sync_every=10**9,
        delivery_mode="fifo",
    )


def check_hook_soundness(
    data_type: str,
    budget: int = 4,
    contract_factory: Optional[Callable[[], NuTypeContract]] = None,
    limit: int = 8,
) -> tuple[list[Failure], dict]:
    """Runs every script up to the budget under every sync mask; quiescent
    replicas must match the oracle over all generated ops, so a hook that
    wrongly drops or withholds an op shows up as a divergence.

    Cluster shapes: 2 replicas up to 4 ops (f in {0, 1}, the durability
    variant capped at 3 ops), 3 replicas up to 3 ops (f in {0, 2}, the
    durability variant capped at 2 ops).  Full 4-op enumeration on 3
    replicas is out of runtime reach, so the 2-replica family carries the
    depth and the 3-replica family the width.
    """
    alphabet = ALPHABETS[data_type]
    failures: list[Failure] = []
    runs = 0
    shapes = (
        (2, 0, min(budget, 4)),
        (2, 1, min(budget, 3)),
        (3, 0, min(budget, 3)),
        (3, 2, min(budget, 2)),
    )
    for n_replicas, f, max_len in shapes:
        cfg = _soundness_cfg(data_type, n_replicas, f)
        contract = contract_factory() if contract_factory is not None else None
        slots = tuple((rid, op) for op in alphabet for rid in range(n_replicas))
        for length in range(1, max_len + 1):
            for script in itertools.product(slots, repeat=length):
                for sync_mask in itertools.product((False, True), repeat=length):
                    runs += 1
                    results, cluster = _drive(cfg, script, sync_mask, contract=contract)
                    oracle = _adjusted_oracle(cluster, cfg)
                    if results is None or any(r != oracle for r in results):
                        detail = (
                            "cluster failed to quiesce"
                            if results is None
                            else "quiescent result differs from oracle"
                        )
                        trace: list = []
                        _drive(cfg, script, sync_mask, contract=contract, trace=trace)
                        failures.append(
                            Failure(
                                check="hook-soundness",
                                data_type=data_type,
                                detail=f"{detail} (replicas={n_replicas}, f={f})",
                                script=script,
                                schedule=tuple("sync" if s else "hold" for s in sync_mask),
                                op_log=tuple(cluster.generated),
                                events=tuple(trace),
                                expected=oracle,
                                got=results,
                            )
                        )
                        if len(failures) >= limit:
                            return failures, {"runs": runs}
    return failures, {"runs": runs}


# ---- redelivery idempotence ----------------------------------------------------


def _run_workload(cfg: SimConfig, record: Optional[list] = None) -> tuple[Optional[Cluster], int]:
    """Seeded workload run mirroring the simulator loop, keeping the cluster
    (and optionally every message with its targets) for inspection."""
    cluster = Cluster(cfg)
    workload = WorkloadGen(cfg)
    crash_at: dict[int, list[int]] = {}
    for rid, at in cfg.crashes:
        crash_at.setdefault(at, []).append(rid)
    ops_since = [0] * cfg.n_replicas

    def post_sync(now: int, rid: int) -> None:
        msg = cluster.replicas[rid].sync()
        if msg is not None:
            if record is not None:
                record.append((msg, None))
            cluster._post(now, msg, None)

    for g in range(cfg.n_ops):
        cluster.deliver_due(g)
        for rid in crash_at.get(g, ()):
            cluster.crash(rid)
        if not cluster.live:
            break
        rid, op = workload.next_op(sorted(cluster.live))
        env, send = cluster.replicas[rid].exec_op(op)
        cluster.generated.append((env.op_id, env.payload))
        if send is not None:
            if record is not None:
                record.append((send.message, send.targets))
            cluster._post(g, send.message, send.targets)
        ops_since[rid] += 1
        if ops_since[rid] >= cfg.sync_every:
            ops_since[rid] = 0
            post_sync(g, rid)

    now = cfg.n_ops
    for rid in crash_at.get(now, ()):
        cluster.crash(rid)
    rounds = 0
    bound = max(cfg.n_ops, 1) * cfg.n_replicas
    while True:
        now = cluster.deliver_all(now)
        if not cluster.pending_anywhere():
            return cluster, now
        if rounds >= bound:
            return None, now
        rounds += 1
        for rid in sorted(cluster.live):
            post_sync(now, rid)


def check_redelivery(data_type: str, seed: int, runs: int = 3) -> tuple[list[Failure], dict]:
    """Every message of a finished run is delivered twice more to its
    original audience; queries must not move."""
    failures: list[Failure] = []
    delivered = 0
    for i in range(runs):
        cfg = SimConfig(
            engine="nuec",
            data_type=data_type,
            n_replicas=3,
            f=1,
            k=2,
            n_ops=120,
            n_ids=5,
            max_score=40,
            max_amount=9,
            n_bins=3,
            remove_ratio=0.25 if data_type == "topk-rmv" else 0.0,
            sync_every=7,
            delivery_mode="random",
            seed=seed + i,
        )
        record: list = []
        cluster, _ = _run_workload(cfg, record)
        if cluster is None:
            failures.append(
                Failure("redelivery", data_type, f"run with seed {cfg.seed} failed to quiesce")
            )
            continue
        before = [cluster.replicas[r].query() for r in sorted(cluster.live)]
        for _ in range(2):
            for message, targets in record:
                audience = (
                    [t for t in sorted(cluster.live) if t != message.sender]
                    if targets is None
                    else [t for t in targets if t in cluster.live]
                )
                for t in audience:
                    cluster.replicas[t].on_receive(message)
                    delivered += 1
        after = [cluster.replicas[r].query() for r in sorted(cluster.live)]
        if before != after:
            failures.append(
                Failure(
                    check="redelivery",
                    data_type=data_type,
                    detail=f"redelivery changed a query result (seed {cfg.seed})",
                    expected=before,
                    got=after,
                )
            )
    return failures, {"runs": runs, "redelivered": delivered}


# ---- crash durability ----------------------------------------------------------


def check_crash_durability(data_type: str, seed: int, runs: int = 6) -> tuple[list[Failure], dict]:
    failures: list[Failure] = []

    # scripted: the source crashes right after executing, its durability
    # copy already delivered; survivors must still show the op
    hot = ("add", 7, 9) if data_type != "histogram" else ("add", 1)
    fillers = {
        "topk-rmv": (("add", 1, 1), ("add", 2, 2)),
        "top-sum": (("add", 1, 1), ("add", 2, 2)),
        "topk": (("add", 1, 1), ("add", 2, 2)),
        "histogram": (("add", 2), ("add", 2)),
    }[data_type]
    script = ((0, hot), (1, fillers[0]), (2, fillers[1]))
    cfg = _soundness_cfg(data_type, 3, 1)
    results, cluster = _drive(cfg, script, (False,) * 3, crashes={1: [0]})
    oracle = _adjusted_oracle(cluster, cfg)
    hot_visible = _op_visible(data_type, oracle)
    if results is None or any(r != oracle for r in results) or not hot_visible:
        failures.append(
            Failure(
                check="crash-durability",
                data_type=data_type,
                detail="durably held op missing from survivors' quiescent result",
                script=script,
                op_log=tuple(cluster.generated),
                expected=oracle,
                got=results,
            )
        )

    # scripted: crash before anything executed leaves survivors untouched
    results, cluster = _drive(cfg, ((1, fillers[0]), (2, fillers[1])), (False,) * 2, crashes={0: [0]})
    oracle = _adjusted_oracle(cluster, cfg)
    if results is None or any(r != oracle for r in results):
        failures.append(
            Failure(
                check="crash-durability",
                data_type=data_type,
                detail="crash with empty local log disturbed the survivors",
                expected=oracle,
                got=results,
            )
        )

    # randomized small runs
    rng = random.Random(f"verify-crash:{data_type}:{seed}")
    for i in range(runs):
        rids = rng.sample(range(5), 2)
        crashes = tuple(sorted((rid, rng.randint(0, 400)) for rid in rids))
        cfg = SimConfig(
            engine="nuec",
            data_type=data_type,
            n_ops=400,
            n_ids=20,
            max_score=100,
            max_amount=9,
            n_bins=4,
            remove_ratio=0.1 if data_type == "topk-rmv" else 0.0,
            sync_every=9,
            delivery_mode="random",
            seed=seed * 1000 + i,
            crashes=crashes,
        )
        record: list = []
        cluster, _ = _run_workload(cfg, record)
        ok = cluster is not None
        if ok:
            live = sorted(cluster.live)
            results = [cluster.replicas[r].query() for r in live]
            oracle = _adjusted_oracle(cluster, cfg)
            ok = observably_equivalent(results) and bool(results) and results[0] == oracle
        if not ok:
            failures.append(
                Failure(
                    check="crash-durability",
                    data_type=data_type,
                    detail=f"randomized crash run diverged (seed {cfg.seed}, crashes {crashes})",
                    expected=oracle if cluster is not None else None,
                    got=results if cluster is not None else None,
                )
            )
    return failures, {"runs": runs + 2}


def _op_visible(data_type: str, result: Any) -> bool:
    if data_type == "histogram":
        return result.get(1, 0) >= 1
    if data_type == "top-sum":
        return result.get(7, 0) == 9
    return (7, 9) in result


# ---- orchestration -------------------------------------------------------------


def run_verify(
    data_type: str,
    budget: int = 5,
    seed: int = 1,
    out: Callable[[str], None] = print,
) -> int:
    """Run all four check families; prints one line per family plus any
    counterexample traces.  Returns the number of failures."""
    if data_type not in DATA_TYPES:
        raise ValueError(f"unknown data type {data_type!r}")
    total = 0

    failures, stats = check_commutativity(data_type, budget=budget)
    out(
        f"commutativity {data_type}: {stats['scripts']} payload sets, "
        f"{stats['orders']} orders applied -> {len(failures)} violations"
    )
    total += len(failures)
    for f in failures:
        out(format_failure(f))

    failures, stats = check_hook_soundness(data_type, budget=min(budget, 4))
    out(f"hook soundness {data_type}: {stats['runs']} scheduled runs -> {len(failures)} violations")
    total += len(failures)
    for f in failures:
        out(format_failure(f))

    failures, stats = check_redelivery(data_type, seed=seed)
    out(
        f"redelivery {data_type}: {stats['runs']} runs, {stats['redelivered']} duplicate "
        f"deliveries -> {len(failures)} violations"
    )
    total += len(failures)
    for f in failures:
        out(format_failure(f))

    failures, stats = check_crash_durability(data_type, seed=seed)
    out(f"crash durability {data_type}: {stats['runs']} scenarios -> {len(failures)} violations")
    total += len(failures)
    for f in failures:
        out(format_failure(f))

    out(f"verify {data_type}: {'ok' if total == 0 else f'{total} FAILURES'}")
    return total

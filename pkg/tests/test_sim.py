"""Simulator: config validation, workload statistics, end-to-end runs, metrics."""

import pytest

from nuec.sim.config import ConfigError, SimConfig
from nuec.sim.metrics import CSV_HEADER, SAMPLES_HEADER, MetricsReport
from nuec.sim.runner import run_simulation
from nuec.sim.workload import WorkloadGen


def small(**kw):
    base = dict(
        engine="nuec",
        data_type="topk-rmv",
        n_replicas=3,
        f=0,
        k=5,
        n_ops=300,
        n_ids=20,
        max_score=1000,
        remove_ratio=0.1,
        sync_every=10,
        seed=7,
    )
    base.update(kw)
    return SimConfig(**base)


# ---- validation -----------------------------------------------------------------


@pytest.mark.parametrize(
    "changes, field",
    [
        (dict(engine="warp"), "engine"),
        (dict(data_type="set"), "data_type"),
        (dict(f=3, n_replicas=3), "f"),
        (dict(k=0), "k"),
        (dict(remove_ratio=1.5), "remove_ratio"),
        (dict(remove_ratio=0.1, data_type="histogram"), "remove_ratio"),
        (dict(delivery_mode="carrier-pigeon"), "delivery_mode"),
        (dict(sync_every=0), "sync_every"),
        (dict(max_extra_delay=-1), "max_extra_delay"),
        (dict(engine="fullop", remove_ratio=0.0, crashes=((0, 1),), f=1), "crashes"),
        (dict(crashes=((0, 1), (1, 1), (2, 1)), f=2), "crashes"),
        (dict(crashes=((1, 0), (1, 5)), f=2), "crashes"),
        (dict(crashes=((9, 0),), f=2), "crashes"),
        (dict(crashes=((0, 301),), f=2), "crashes"),
    ],
)
def test_validation_names_the_field(changes, field):
    cfg = small(**changes)
    with pytest.raises(ConfigError) as err:
        cfg.validate()
    assert str(err.value).startswith(field)


def test_valid_config_passes():
    small().validate()
    small(crashes=((1, 10),), f=1).validate()


# ---- workload -------------------------------------------------------------------


def drain(cfg, n):
    gen = WorkloadGen(cfg)
    live = list(range(cfg.n_replicas))
    return [gen.next_op(live) for _ in range(n)]


def test_same_seed_same_stream():
    cfg = small()
    assert drain(cfg, 200) == drain(cfg, 200)


def test_different_seed_different_stream():
    assert drain(small(), 200) != drain(small(seed=8), 200)


def test_zero_remove_ratio_is_all_adds():
    ops = drain(small(remove_ratio=0.0), 500)
    assert all(op[0] == "add" for _, op in ops)


def test_remove_count_tracks_the_ratio():
    cfg = small(n_ops=20000, remove_ratio=0.05)
    ops = drain(cfg, 20000)
    removes = sum(1 for _, op in ops if op[0] == "rmv")
    # binomial(20000, 0.05): mean 1000, three sigma just under 93
    assert 908 <= removes <= 1092
    added = {op[1] for _, op in ops if op[0] == "add"}
    assert all(op[1] in added for _, op in ops if op[0] == "rmv")


def test_value_bounds_per_type():
    ops = drain(small(data_type="top-sum", remove_ratio=0.0, max_amount=9), 400)
    assert all(1 <= op[2] <= 9 for _, op in ops)
    ops = drain(small(data_type="topk", remove_ratio=0.0, max_score=50), 400)
    assert all(1 <= op[2] <= 50 for _, op in ops)
    ops = drain(small(data_type="histogram", remove_ratio=0.0, n_bins=4), 400)
    assert all(1 <= op[1] <= 4 for _, op in ops)


def test_replica_assignment_respects_live_set():
    gen = WorkloadGen(small())
    rids = {gen.next_op([0, 2])[0] for _ in range(100)}
    assert rids <= {0, 2}


# ---- runs -----------------------------------------------------------------------


def test_run_is_deterministic():
    cfg = small(sample_every=2, delivery_mode="random")
    a, b = run_simulation(cfg), run_simulation(cfg)
    assert a.csv_row() == b.csv_row()
    assert a.samples == b.samples


def test_zero_ops_run_is_quiet():
    report = run_simulation(small(n_ops=0, remove_ratio=0.0))
    assert report.ok()
    assert report.total_payload_bytes == 0
    assert report.message_count == 0


def test_single_histogram_op_costs_45_bytes():
    cfg = SimConfig(
        engine="nuec",
        data_type="histogram",
        n_replicas=2,
        f=0,
        n_ops=1,
        sync_every=1,
        remove_ratio=0.0,
        seed=1,
    )
    report = run_simulation(cfg)
    assert report.ok()
    assert report.total_payload_bytes == 45
    assert report.message_count == 1
    assert report.durability_payload_bytes == 0


def test_all_engines_converge_everywhere():
    for engine in ("nuec", "fullop", "stateship"):
        for data_type in ("topk-rmv", "top-sum", "topk", "histogram"):
            cfg = small(
                engine=engine,
                data_type=data_type,
                remove_ratio=0.1 if data_type == "topk-rmv" else 0.0,
                f=1,
                delivery_mode="random",
            )
            report = run_simulation(cfg)
            assert report.ok(), f"{engine}/{data_type}: {report}"


def test_filtered_engine_sends_fewer_bytes_than_fullop():
    kw = dict(n_ops=1500, n_ids=50, k=10, sync_every=25, seed=3)
    lean = run_simulation(small(engine="nuec", **kw))
    full = run_simulation(small(engine="fullop", **kw))
    assert lean.ok() and full.ok()
    assert lean.total_payload_bytes < full.total_payload_bytes


def test_crash_run_still_converges():
    cfg = small(f=2, crashes=((1, 50), (2, 150)))
    report = run_simulation(cfg)
    assert report.ok()


def test_scripted_run():
    cfg = small(n_replicas=2, n_ops=0, remove_ratio=0.0, sync_every=1)
    script = [(0, ("add", 1, 100)), (1, ("add", 2, 105))]
    report = run_simulation(cfg, script=script)
    assert report.ok()
    assert report.n_ops == 2


# ---- metrics --------------------------------------------------------------------


def test_csv_headers_are_stable():
    assert CSV_HEADER == (
        "engine,dataType,seed,nOps,removeRatio,totalPayloadBytes,messageCount,"
        "avgReplicaBytes,quiescent,oracleMatch,durabilityPayloadBytes"
    )
    assert SAMPLES_HEADER == "engine,dataType,seed,opsExecuted,cumulativePayloadBytes,avgReplicaBytes"


def test_csv_row_formatting():
    report = MetricsReport(
        engine="nuec",
        data_type="topk-rmv",
        seed=4,
        n_ops=100,
        remove_ratio=0.05,
        total_payload_bytes=1234,
        message_count=17,
        avg_replica_bytes=88.5,
        quiescent=True,
        oracle_match=False,
        durability_payload_bytes=50,
    )
    assert report.csv_row() == "nuec,topk-rmv,4,100,0.05,1234,17,88.50,true,false,50"
    assert report.ok() is False
    assert '"avgReplicaBytes": 88.5' in report.to_json()


def test_sampling_populates_series():
    report = run_simulation(small(sample_every=1))
    assert report.samples
    ops = [s[0] for s in report.samples]
    assert ops == sorted(ops)
    rows = report.sample_rows()
    assert rows[0].startswith("nuec,topk-rmv,7,")
    payloads = [s[1] for s in report.samples]
    assert payloads == sorted(payloads)
    assert payloads[-1] <= report.total_payload_bytes

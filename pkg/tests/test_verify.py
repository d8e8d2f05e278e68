"""Verification suites must pass on the real contracts and catch broken ones."""

from nuec.contract import LogView
from nuec.datatypes import DATA_TYPES
from nuec.datatypes.top_sum import TopSumContract
from nuec.datatypes.topk_rmv import TopKRmvContract
from nuec.verify import (
    check_commutativity,
    check_crash_durability,
    check_hook_soundness,
    check_redelivery,
    format_failure,
    run_verify,
)


def test_commutativity_clean_at_small_budget():
    for data_type in DATA_TYPES:
        failures, stats = check_commutativity(data_type, budget=3)
        assert failures == [], format_failure(failures[0])
        assert stats["scripts"] > 0 and stats["orders"] > 0


def test_hook_soundness_clean_at_small_budget():
    for data_type in DATA_TYPES:
        failures, stats = check_hook_soundness(data_type, budget=2)
        assert failures == [], format_failure(failures[0])
        assert stats["runs"] > 0


def test_redelivery_clean():
    for data_type in DATA_TYPES:
        failures, stats = check_redelivery(data_type, seed=5, runs=2)
        assert failures == [], format_failure(failures[0])
        assert stats["redelivered"] > 0


def test_crash_durability_clean():
    for data_type in DATA_TYPES:
        failures, stats = check_crash_durability(data_type, seed=5, runs=2)
        assert failures == [], format_failure(failures[0])
        assert stats["runs"] == 4  # 2 scripted + 2 randomized


def test_run_verify_summarizes(capsys_lines=None):
    lines = []
    assert run_verify("histogram", budget=2, seed=3, out=lines.append) == 0
    assert lines[-1] == "verify histogram: ok"
    assert any(line.startswith("commutativity histogram:") for line in lines)
    assert any(line.startswith("hook soundness histogram:") for line in lines)
    assert any(line.startswith("redelivery histogram:") for line in lines)
    assert any(line.startswith("crash durability histogram:") for line in lines)


# ---- the suites catch deliberately broken hooks -----------------------------------


class OverEagerMasking(TopKRmvContract):
    """Wrong on purpose: treats every logged local add as permanently dead."""

    def masked_forever(self, local, state, recv):
        return [env for env in local if type(env.payload).__name__ == "Add"]


class SilentContract(TopSumContract):
    """Wrong on purpose: never volunteers anything for propagation."""

    def has_observable_impact(self, local, state, recv):
        return []

    def may_have_observable_impact(self, local, state, recv):
        return []


def test_soundness_catches_over_eager_masking():
    failures, _ = check_hook_soundness("topk-rmv", budget=2, contract_factory=lambda: OverEagerMasking(1))
    assert failures
    text = format_failure(failures[0])
    assert "op script" in text
    assert "delivery order" in text
    assert "expected" in text


def test_soundness_catches_a_silent_replica():
    failures, _ = check_hook_soundness("top-sum", budget=2, contract_factory=lambda: SilentContract(1, 2))
    assert failures
    assert failures[0].check == "hook-soundness"


def test_broken_masking_still_commutes():
    # commutativity only sees effect application, so this must stay clean;
    # the two families trap different defects
    failures, _ = check_commutativity("topk-rmv", budget=2)
    assert failures == []
    state_hooks_unused = OverEagerMasking(1)
    assert state_hooks_unused.masked_forever(LogView(), state_hooks_unused.initial_state(), LogView()) == []

"""Top-K without removals."""

import pytest

from nuec.contract import LogView
from nuec.datatypes.topk_plain import Add, TopKPlainContract
from nuec.envelope import OpId, OperationEnvelope


def make_state(contract, *payloads):
    state = contract.initial_state()
    for p in payloads:
        contract.apply_effect(state, p)
    return state


def log_of(*payloads, site=0):
    log = LogView()
    for i, p in enumerate(payloads):
        log.add(OperationEnvelope(OpId(site, i + 1), p))
    return log


def test_keeps_k_best_one_per_id():
    c = TopKPlainContract(2)
    state = make_state(c, Add("a", 1), Add("b", 2), Add("c", 3))
    assert c.query(state) == frozenset({("c", 3), ("b", 2)})


def test_score_tie_prefers_larger_id():
    c = TopKPlainContract(1)
    state = make_state(c, Add("a", 100), Add("b", 100))
    assert c.query(state) == frozenset({("b", 100)})


def test_repeated_id_keeps_best_score():
    c = TopKPlainContract(2)
    state = make_state(c, Add("a", 5), Add("a", 3), Add("a", 8))
    assert c.query(state) == frozenset({("a", 8)})


def test_eviction_drops_weakest_pair():
    c = TopKPlainContract(2)
    state = make_state(c, Add("a", 5), Add("b", 1), Add("c", 3))
    assert c.query(state) == frozenset({("a", 5), ("c", 3)})


def test_fresh_state_is_empty():
    c = TopKPlainContract(3)
    assert c.query(c.initial_state()) == frozenset()


def test_prepare_rejects_other_ops():
    c = TopKPlainContract(1)
    with pytest.raises(ValueError):
        c.prepare(c.initial_state(), ("rmv", "a"), 0)


def test_local_add_beaten_remotely_is_masked():
    c = TopKPlainContract(1)
    mine, theirs = Add("a", 1), Add("a", 9)
    state = make_state(c, mine, theirs)
    masked = c.masked_forever(log_of(mine), state, log_of(theirs, site=1))
    assert [e.payload for e in masked] == [mine]


def test_equal_remote_score_does_not_mask():
    c = TopKPlainContract(1)
    mine, theirs = Add("a", 5), Add("a", 5)
    state = make_state(c, mine, theirs)
    assert c.masked_forever(log_of(mine), state, log_of(theirs, site=1)) == []


def test_local_rival_does_not_mask():
    # both adds are ours; the weaker one may still beat the world remotely
    c = TopKPlainContract(1)
    low, high = Add("a", 1), Add("a", 9)
    state = make_state(c, low, high)
    assert c.masked_forever(log_of(low, high), state, LogView()) == []


def test_has_impact_returns_adds_backing_current_pairs():
    c = TopKPlainContract(2)
    winner, loser, other = Add("a", 9), Add("a", 2), Add("b", 4)
    state = make_state(c, winner, loser, other)
    local = log_of(winner, loser, other)
    out = c.has_observable_impact(local, state, LogView())
    assert sorted(e.payload for e in out) == [("a", 9), ("b", 4)]


def test_sizes():
    c = TopKPlainContract(2)
    assert c.payload_size(Add("a", 1)) == 17
    state = make_state(c, Add("a", 1), Add("b", 2))
    assert c.state_size(state) == 32

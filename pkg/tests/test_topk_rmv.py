"""Top-K with removals: effects, query order, and the relevance hooks.

Hook tests build the operation logs by hand.  The masking hook reports each
envelope at most once (its callers discard what it reports), so tests that
probe it call it on freshly built logs.
"""

from nuec.clocks import Timestamp, VectorClock
from nuec.contract import LogView
from nuec.datatypes.topk_rmv import Add, Rmv, TopKRmvContract
from nuec.envelope import OpId, OperationEnvelope


def make_state(contract, *payloads):
    state = contract.initial_state()
    for p in payloads:
        contract.apply_effect(state, p)
    return state


def log_of(*payloads, start=1, site=0):
    log = LogView()
    for i, p in enumerate(payloads):
        log.add(OperationEnvelope(OpId(site, start + i), p))
    return log


# ---- effects and query ------------------------------------------------------


def test_top1_picks_highest_score():
    c = TopKRmvContract(1)
    state = make_state(
        c,
        Add("a", 100, Timestamp(0, 1)),
        Add("b", 110, Timestamp(1, 1)),
        Add("c", 105, Timestamp(0, 2)),
    )
    assert c.query(state) == frozenset({("b", 110)})


def test_score_tie_prefers_smaller_id():
    c = TopKRmvContract(1)
    state = make_state(c, Add("a", 100, Timestamp(0, 1)), Add("b", 100, Timestamp(1, 1)))
    assert c.query(state) == frozenset({("a", 100)})


def test_fresh_add_lands_in_elems():
    c = TopKRmvContract(2)
    state = make_state(c, Add("a", 100, Timestamp(1, 1)))
    assert state.elems == {"a": {Timestamp(1, 1): 100}}
    assert state.vc[1] == 1


def test_covered_add_only_advances_the_clock():
    c = TopKRmvContract(2)
    state = make_state(c, Rmv("b", ((1, 3),)), Add("b", 7, Timestamp(1, 2)))
    assert c.query(state) == frozenset()
    assert state.elems == {}
    assert state.vc[1] == 2  # guard lost, clock still raised


def test_remove_erases_covered_add():
    c = TopKRmvContract(1)
    state = make_state(c, Add("b", 110, Timestamp(2, 1)), Rmv("b", ((2, 1),)))
    assert c.query(state) == frozenset()
    # redelivering the add hits the stored cover and stays invisible
    c.apply_effect(state, Add("b", 110, Timestamp(2, 1)))
    assert c.query(state) == frozenset()


def test_remove_of_unknown_id_updates_cover_only():
    c = TopKRmvContract(1)
    state = make_state(c, Rmv("x", ((0, 4),)))
    assert state.elems == {}
    assert dict(state.removes["x"]) == {0: 4}


def test_concurrent_add_survives_remove():
    c = TopKRmvContract(1)
    state = make_state(c, Add("b", 5, Timestamp(3, 4)), Rmv("b", ((3, 2),)))
    assert c.query(state) == frozenset({("b", 5)})


def test_per_id_best_prefers_score_then_earlier_timestamp():
    c = TopKRmvContract(1)
    state = make_state(c, Add("a", 5, Timestamp(2, 1)), Add("a", 5, Timestamp(1, 1)))
    assert state.top_entries() == [("a", 5, Timestamp(1, 1))]


def test_remove_reinstates_next_best_of_same_id():
    c = TopKRmvContract(1)
    state = make_state(
        c,
        Add("a", 9, Timestamp(0, 1)),
        Add("a", 4, Timestamp(1, 7)),
        Rmv("a", ((0, 1),)),
    )
    assert c.query(state) == frozenset({("a", 4)})


# ---- masking ----------------------------------------------------------------


def test_same_site_add_dominated_by_better_later_add_is_masked():
    c = TopKRmvContract(1)
    low, high = Add("a", 1, Timestamp(0, 1)), Add("a", 5, Timestamp(0, 2))
    state = make_state(c, low, high)
    local = log_of(low, high)
    masked = c.masked_forever(local, state, LogView())
    assert [e.payload for e in masked] == [low]


def test_cross_site_adds_never_mask_each_other():
    c = TopKRmvContract(1)
    low, high = Add("a", 1, Timestamp(0, 1)), Add("a", 5, Timestamp(1, 1))
    state = make_state(c, low, high)
    local = LogView()
    local.add(OperationEnvelope(OpId(0, 1), low))
    local.add(OperationEnvelope(OpId(1, 1), high))
    assert c.masked_forever(local, state, LogView()) == []


def test_add_covered_by_known_remove_is_masked():
    c = TopKRmvContract(1)
    add = Add("a", 8, Timestamp(0, 1))
    state = make_state(c, add, Rmv("a", ((0, 1),)))
    local = log_of(add)
    masked = c.masked_forever(local, state, LogView())
    assert [e.payload for e in masked] == [add]


def test_remove_dominated_by_received_remove_is_masked():
    c = TopKRmvContract(1)
    mine = Rmv("a", ((1, 1),))
    theirs = Rmv("a", ((1, 2),))
    state = make_state(c, mine, theirs)
    local = log_of(mine)
    recv = log_of(theirs, site=1)
    masked = c.masked_forever(local, state, recv)
    assert [e.payload for e in masked] == [mine]


def test_equal_removes_do_not_mask_each_other():
    c = TopKRmvContract(1)
    mine = Rmv("a", ((1, 1),))
    twin = Rmv("a", ((1, 1),))
    state = make_state(c, mine, twin)
    masked = c.masked_forever(log_of(mine), state, log_of(twin, site=1))
    assert masked == []


def test_disjoint_ids_mask_nothing():
    c = TopKRmvContract(1)
    a, b = Add("a", 1, Timestamp(0, 1)), Add("b", 2, Timestamp(0, 2))
    state = make_state(c, a, b)
    assert c.masked_forever(log_of(a, b), state, LogView()) == []


def test_masking_reports_each_envelope_once():
    c = TopKRmvContract(1)
    low, high = Add("a", 1, Timestamp(0, 1)), Add("a", 5, Timestamp(0, 2))
    state = make_state(c, low, high)
    local = log_of(low, high)
    first = c.masked_forever(local, state, LogView())
    assert len(first) == 1
    local.discard(first[0].op_id)
    # unchanged log: nothing new to report
    assert c.masked_forever(local, state, LogView()) == []


def test_equal_scores_do_not_mask():
    c = TopKRmvContract(1)
    first, second = Add("a", 5, Timestamp(0, 1)), Add("a", 5, Timestamp(0, 2))
    state = make_state(c, first, second)
    assert c.masked_forever(log_of(first, second), state, LogView()) == []


# ---- observable impact --------------------------------------------------------


def test_local_add_in_top_is_propagated():
    c = TopKRmvContract(1)
    b = Add("b", 110, Timestamp(0, 1))
    state = make_state(c, b)
    local = log_of(b)
    assert [e.payload for e in c.has_observable_impact(local, state, LogView())] == [b]


def test_local_add_under_the_top_is_withheld():
    c = TopKRmvContract(1)
    b = Add("b", 110, Timestamp(1, 1))
    cc = Add("c", 105, Timestamp(0, 1))
    state = make_state(c, b, cc)
    local = log_of(cc)
    recv = log_of(b, site=1)
    assert c.has_observable_impact(local, state, recv) == []


def test_remove_suppressing_a_displayable_add_is_propagated():
    c = TopKRmvContract(1)
    add = Add("a", 10, Timestamp(1, 1))
    rmv = Rmv("a", ((1, 1),))
    state = make_state(c, add, rmv)
    local = log_of(rmv)
    recv = log_of(add, site=1)
    out = c.has_observable_impact(local, state, recv)
    assert [e.payload for e in out] == [rmv]


def test_remove_of_an_undisplayable_add_is_withheld():
    c = TopKRmvContract(1)
    strong = Add("a", 50, Timestamp(0, 1))
    weak = Add("b", 3, Timestamp(1, 1))
    rmv = Rmv("b", ((1, 1),))
    state = make_state(c, strong, weak, rmv)
    local = log_of(rmv)
    recv = log_of(strong, weak, site=1)
    # even without the remove, b loses to a, so the remove changes nothing
    assert c.has_observable_impact(local, state, recv) == []


def test_may_have_impact_is_always_empty():
    c = TopKRmvContract(1)
    add = Add("a", 1, Timestamp(0, 1))
    state = make_state(c, add)
    assert c.may_have_observable_impact(log_of(add), state, LogView()) == []


# ---- metadata and sizes --------------------------------------------------------


def test_metadata_roundtrip_merges_sender_clock():
    c = TopKRmvContract(1)
    sender = make_state(c, Add("a", 1, Timestamp(0, 3)))
    receiver = make_state(c, Add("b", 1, Timestamp(1, 2)))
    c.absorb_metadata(receiver, c.make_metadata(sender))
    assert receiver.vc == {0: 3, 1: 2}


def test_state_size_tracks_tuples_removes_and_clock():
    c = TopKRmvContract(2)
    state = make_state(c, Add("a", 1, Timestamp(0, 1)))
    assert c.state_size(state) == 28 + 0 + (4 + 12)
    c.apply_effect(state, Rmv("a", ((0, 1),)))
    # tuple gone; removes map now holds one id with a one-entry clock
    assert c.state_size(state) == 0 + (8 + 4 + 12) + (4 + 12)


def test_prepare_stamps_adds_and_freezes_removes():
    c = TopKRmvContract(1)
    state = make_state(c, Add("x", 2, Timestamp(1, 4)))
    add = c.prepare(state, ("add", "y", 9), 1)
    assert add == Add("y", 9, Timestamp(1, 5))
    c.apply_effect(state, add)
    rmv = c.prepare(state, ("rmv", "y"), 1)
    assert rmv == Rmv("y", ((1, 5),))

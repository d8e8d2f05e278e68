from nuec.clocks import FrozenClock, Timestamp, VectorClock, pointwise_max


def test_missing_entries_read_zero():
    vc = VectorClock()
    assert vc[3] == 0
    assert 3 not in vc  # __missing__ must not insert


def test_bump_returns_new_value():
    vc = VectorClock()
    assert vc.bump(1) == 1
    assert vc.bump(1) == 2
    assert vc.bump(2) == 1
    assert vc == {1: 2, 2: 1}


def test_raise_to_never_lowers():
    vc = VectorClock.from_items([(0, 5)])
    vc.raise_to(0, 3)
    assert vc[0] == 5
    vc.raise_to(0, 9)
    assert vc[0] == 9


def test_merge_is_pointwise_max():
    vc = VectorClock.from_items([(0, 2), (1, 7)])
    vc.merge(VectorClock.from_items([(0, 5), (2, 1)]))
    assert vc == {0: 5, 1: 7, 2: 1}
    # also accepts the frozen pair form
    vc.merge(((1, 9), (0, 1)))
    assert vc == {0: 5, 1: 9, 2: 1}


def test_covers_compares_site_entry():
    vc = VectorClock.from_items([(1, 3)])
    assert vc.covers(Timestamp(1, 3))
    assert vc.covers(Timestamp(1, 1))
    assert not vc.covers(Timestamp(1, 4))
    assert not vc.covers(Timestamp(2, 1))


def test_partial_order():
    a = VectorClock.from_items([(0, 1), (1, 2)])
    b = VectorClock.from_items([(0, 1), (1, 3)])
    c = VectorClock.from_items([(0, 2), (1, 1)])
    assert a.leq(b) and a.less(b)
    assert not b.leq(a)
    # incomparable pair
    assert not b.leq(c) and not c.leq(b)
    # reflexive but not strict
    assert a.leq(a) and not a.less(a)


def test_less_ignores_explicit_zeros():
    a = VectorClock.from_items([(0, 1)])
    b = VectorClock({0: 1, 5: 0})
    assert a.leq(b)
    assert not a.less(b)


def test_freeze_drops_zeros_and_sorts():
    vc = VectorClock({2: 4, 0: 1, 7: 0})
    frozen: FrozenClock = vc.freeze()
    assert frozen == ((0, 1), (2, 4))


def test_copy_is_independent():
    vc = VectorClock.from_items([(0, 1)])
    dup = vc.copy()
    dup.bump(0)
    assert vc[0] == 1 and dup[0] == 2


def test_pointwise_max_of_frozen_clocks():
    a = ((0, 2), (1, 1))
    b = ((1, 4), (3, 1))
    assert pointwise_max(a, b) == ((0, 2), (1, 4), (3, 1))
    assert pointwise_max(a, ()) == a

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import Naive, random_model
from tsar_dhccp.kernel import (
    Assign, C, Call, CompositeType, DomainError, GuardError, InstanceDecl, LeafType,
    ModelError, P, SyncDecl, TransitionDecl, V, VarDecl, fire, ground_model,
    initial_state, successors,
)


def channel_type(addrs=2, types=20):
    addr, typ = ("addr", range(addrs)), ("typ", range(types))
    return LeafType("Channel", [VarDecl("isFull", 0, 1), VarDecl("addr", 0, addrs - 1),
                                VarDecl("type", 0, types - 1)], [
        TransitionDecl("write", [addr, typ], V("isFull") == 0, "write", [P("addr"), P("typ")],
                       [Assign("isFull", 1), Assign("addr", P("addr")), Assign("type", P("typ"))]),
        TransitionDecl("read", [addr, typ],
                       (V("isFull") == 1) & (V("addr") == P("addr")) & (V("type") == P("typ")),
                       "read", [P("addr"), P("typ")],
                       [Assign("isFull", 0), Assign("addr", 0), Assign("type", 0)]),
    ])


def one_leaf(vars, transitions):
    return ground_model({"L": LeafType("L", vars, transitions)}, "L")


def test_channel_grounding_counts():
    m = ground_model({"Channel": channel_type()}, "Channel")
    names = [e.describe() for e in m.entries]
    assert sum("write" in n for n in names) == 40
    assert sum("read" in n for n in names) == 40


def test_channel_initial_state_and_read_flush():
    m = ground_model({"Channel": channel_type()}, "Channel")
    assert m.decode(initial_state(m)) == {"isFull": 0, "addr": 0, "type": 0}
    # exposed only through labels: nothing fires spontaneously
    assert successors(m, initial_state(m)) == []


def test_composite_initial_vector_is_concatenation():
    types = {"Channel": channel_type(),
             "Two": CompositeType("Two", [InstanceDecl("a", "Channel"), InstanceDecl("b", "Channel")], [])}
    m = ground_model(types, "Two")
    assert m.var_names == ["a.isFull", "a.addr", "a.type", "b.isFull", "b.addr", "b.type"]
    assert list(m.decode(initial_state(m)).values()) == [0] * 6


def test_empty_leaf_has_empty_vector():
    m = one_leaf([], [])
    assert m.nvars == 0 and len(initial_state(m)) == 0


def _producer_consumer():
    """A writer feeding a channel drained by a reader; the read flushes the payload."""
    w = LeafType("W", [VarDecl("n", 0, 1)], [
        TransitionDecl("put", [("t", range(2))], V("n") == 0, None, [],
                       [Assign("n", 1), Call("self", "out", [P("t")])]),
        TransitionDecl("emit", [("t", range(2))], C(1), "out", [P("t")],
                       []),
    ])
    types = {
        "Channel": channel_type(addrs=1, types=2),
        "W": w,
        "Top": CompositeType("Top", [InstanceDecl("w", "W"), InstanceDecl("ch", "Channel")], [
            SyncDecl("send", [("t", range(2))], calls=[Call("w", "out", [P("t")]),
                                                        Call("ch", "write", [0, P("t")])]),
            SyncDecl("drain", [("t", range(2))], calls=[Call("ch", "read", [0, P("t")])]),
        ]),
    }
    return types


def test_fire_read_flushes_channel():
    types = _producer_consumer()
    m = ground_model(types, "Top")
    s0 = initial_state(m)
    sends = [(e, s) for e, s in successors(m, s0) if e.entry.endswith("send")]
    assert len(sends) == 2
    ev, s1 = next((e, s) for e, s in sends if dict(e.params)["t"] == 1)
    assert m.value(s1, "ch.isFull") == 1 and m.value(s1, "ch.type") == 1
    (drain, s2), = [(e, s) for e, s in successors(m, s1) if e.entry.endswith("drain")]
    assert m.value(s2, "ch.isFull") == 0 and m.value(s2, "ch.type") == 0
    assert fire(m, s1, drain) == s2
    with pytest.raises(GuardError):
        fire(m, s0, drain)


def test_grounding_sizes():
    m = one_leaf([VarDecl("x", 0, 1)], [TransitionDecl("t", [], V("x") == 0, None, [], [Assign("x", 1)])])
    assert len(m.entries) == 1
    leaf = LeafType("L", [VarDecl("x", 0, 2)],
                    [TransitionDecl("set", [("v", range(3))], C(1), "set", [P("v")], [Assign("x", P("v"))])])
    top = CompositeType("T", [InstanceDecl("a", "L"), InstanceDecl("b", "L")],
                        [SyncDecl("s", [("v", range(3))], calls=[Call("a", "set", [P("v")])])])
    m = ground_model({"L": leaf, "T": top}, "T")
    assert sum(e.node.path == "" and e.name == "s" for e in m.entries) == 3


def test_two_unlabeled_transitions_branch():
    m = one_leaf([VarDecl("x", 0, 2)], [
        TransitionDecl("t1", [], V("x") == 0, None, [], [Assign("x", 1)]),
        TransitionDecl("t2", [], V("x") == 0, None, [], [Assign("x", 2)]),
    ])
    got = {(str(e), m.value(s, "x")) for e, s in successors(m, initial_state(m))}
    assert got == {("t1()", 1), ("t2()", 2)}


def test_call_resolutions_are_distinct_events():
    # two callee transitions answer label "a"; the sync branches once per resolution
    leaf = LeafType("L", [VarDecl("x", 0, 2), VarDecl("y", 0, 1)], [
        TransitionDecl("a1", [], V("x") == 0, "a", [], [Assign("x", 1)]),
        TransitionDecl("a2", [], V("x") == 0, "a", [], [Assign("x", 2)]),
        TransitionDecl("b", [], C(1), "b", [], [Assign("y", 1)]),
    ])
    top = CompositeType("T", [InstanceDecl("u", "L"), InstanceDecl("v", "L")],
                        [SyncDecl("s", calls=[Call("u", "a"), Call("v", "b")])])
    types = {"L": leaf, "T": top}
    m = ground_model(types, "T")
    succ = successors(m, initial_state(m))
    assert len(succ) == 2 and len({e.index for e, _ in succ}) == 2
    by_hand = {(1, 0, 0, 1), (2, 0, 0, 1)}
    assert {tuple(m.decode(s).values()) for _, s in succ} == by_hand
    for e, s in succ:
        assert fire(m, initial_state(m), e) == s
    assert {tuple(m.decode(s).values()) for _, s in succ} == {
        tuple(v) for v in Naive(types, "T").successors(tuple(m.decode(initial_state(m)).values()))}


def test_unresolvable_call_disables_whole_sync():
    leaf = LeafType("L", [VarDecl("x", 0, 1)], [
        TransitionDecl("a", [], V("x") == 1, "a", [], [Assign("x", 0)]),
        TransitionDecl("b", [], C(1), "b", [], [Assign("x", 1)]),
    ])
    top = CompositeType("T", [InstanceDecl("u", "L"), InstanceDecl("v", "L")],
                        [SyncDecl("s", calls=[Call("v", "b"), Call("u", "a")])])
    m = ground_model({"L": leaf, "T": top}, "T")
    assert successors(m, initial_state(m)) == []


def test_overflow_is_an_error():
    m = one_leaf([VarDecl("x", 0, 1, 1)], [TransitionDecl("inc", [], C(1), None, [], [Assign("x", V("x") + 1)])])
    with pytest.raises(DomainError):
        successors(m, initial_state(m))


def test_disabled_alternative_never_raises():
    # the out-of-range value is computed only on a path the guard rejects
    m = one_leaf([VarDecl("x", 0, 1, 1)], [TransitionDecl("inc", [], V("x") == 0, None, [], [Assign("x", V("x") + 1)])])
    assert successors(m, initial_state(m)) == []


def test_unknown_label_is_rejected():
    leaf = LeafType("L", [VarDecl("x", 0, 1)], [])
    top = CompositeType("T", [InstanceDecl("u", "L")], [SyncDecl("s", calls=[Call("u", "nope")])])
    with pytest.raises(ModelError):
        ground_model({"L": leaf, "T": top}, "T")


def test_fire_does_not_mutate_and_is_deterministic():
    types = _producer_consumer()
    m = ground_model(types, "Top")
    s0 = initial_state(m)
    copy = s0[:]
    e, s1 = successors(m, s0)[0]
    assert fire(m, s0, e) == fire(m, s0, e) == s1
    assert s0 == copy


def test_dump_is_stable():
    m1 = ground_model(_producer_consumer(), "Top")
    m2 = ground_model(_producer_consumer(), "Top")
    assert m1.dump() == m2.dump() and len(m1.dump().splitlines()) == len(m1.entries)


@pytest.mark.parametrize("seed", range(20))
def test_random_models_match_naive_interpreter(seed):
    types = random_model(seed)
    m = ground_model(types, "Root")
    nv = Naive(types, "Root")
    assert m.var_names == nv.order
    todo, seen = [initial_state(m)], {initial_state(m)}
    while todo:
        s = todo.pop()
        got = {tuple(m.decode(t).values()) for _, t in successors(m, s)}
        assert got == nv.successors(tuple(m.decode(s).values()))
        for _, t in successors(m, s):
            if t not in seen:
                seen.add(t)
                todo.append(t)
    assert {tuple(m.decode(s).values()) for s in seen} == nv.reachable()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3))
def test_grounding_is_cartesian_product(na, nb):
    ra, rb = range(na + 1), range(nb + 1)
    leaf = LeafType("L", [VarDecl("x", 0, 9)],
                    [TransitionDecl("t", [("a", ra), ("b", rb)], C(1), "t", [P("a"), P("b")],
                                    [Assign("x", P("a") + P("b"))])])
    m = ground_model({"L": leaf}, "L")
    assert len(m.entries) == len(ra) * len(rb)

import pytest

from conftest import READ_MISS_P0, drive
from tsar_dhccp.dhccp import (
    CHANNEL_OF, Config, ConfigError, L1Loc, L2Loc, Msg, ProcLoc, build_system, census_ok,
    fixed_l1_automaton, fixed_l2_automaton, legacy_variants, message_table_tsv, quiescent,
    sharer_census,
)
from tsar_dhccp.cli import nearest_trace
from tsar_dhccp.explorer import explore, find_deadlocks


def leaves(model):
    return [n for n in model.root.walk() if n.is_leaf]


@pytest.mark.parametrize("cfg,components,channels", [
    (Config(1, 1, 1), 4, 9),
    (Config(2, 2, 2), 2 + 2 + 2 + 1, 4 + 5 + 2),
])
def test_structure(cfg, components, channels):
    m = build_system(cfg)
    kinds = [n.type.name for n in leaves(m)]
    n_chan = sum(k.startswith("Channel") for k in kinds)
    assert n_chan == channels
    assert len(kinds) - n_chan == components
    for b in range(cfg.nb_l2):
        assert m.value(m.initial_state(), f"l2[{b}].line_addr") == b


@pytest.mark.parametrize("args", [(0, 1, 1), (1, 0, 1), (1, 1, 0), (1, 1, 2), (1, 1, 1, "buggy")])
def test_config_errors(args):
    with pytest.raises(ConfigError):
        Config(*args)


def test_automata_sizes():
    assert len(L1Loc) == 14 and len(L2Loc) == 16
    assert fixed_l1_automaton().name == "CacheL1"
    assert fixed_l2_automaton().name == "CacheL2"
    l1, l2 = legacy_variants()
    assert (l1.name, l2.name) == ("CacheL1", "CacheL2")
    assert {t.name for t in l2.transitions} != {t.name for t in fixed_l2_automaton().transitions}


def test_read_miss_sequence_and_census():
    m = build_system(Config(1, 1, 1))
    states = drive(m, READ_MISS_P0)
    assert quiescent(m, states[0]) and sharer_census(m, states[0], 0) == 0
    # after the request reached L2 and before the data came back
    assert not any(quiescent(m, s) for s in states[3:7])
    final = states[-1]
    assert quiescent(m, final)
    assert sharer_census(m, final, 0) == 1
    assert m.value(final, "l2[0].n_copies") == 1 and census_ok(m, final)
    assert m.value(final, "pc[0].p.state") == ProcLoc.IDLE
    with pytest.raises(ValueError):
        sharer_census(m, final, 1)


def test_write_hit_by_sole_sharer_has_no_coherence_traffic():
    m = build_system(Config(1, 1, 1))
    # a single processor never sees coherence traffic
    g = explore(m)
    assert not any(m.value(st, "chan_L2L1CPREQ.isFull") for st in g.states)


def test_broadcast_invalidate_clears_all_copies(graphs):
    from collections import deque
    g = graphs(2, 1, 1)
    m = g.model
    starts = [i for i, s in enumerate(g.states)
              if m.value(s, "chan_L2L1CPREQ.isFull") and m.value(s, "chan_L2L1CPREQ.type") == Msg.B_INV
              and all(m.value(s, f"pc[{p}].p.state") != ProcLoc.WAIT_RD for p in range(2))]
    assert starts
    for b in starts:
        # nearest quiescent state without new processor requests
        seen, q = {b}, deque([b])
        while q:
            i = q.popleft()
            s = g.states[i]
            if quiescent(m, s):
                assert sharer_census(m, s, 0) == 0 and m.value(s, "l2[0].n_copies") == 0
                break
            for k, j in g.successors(i):
                if "send_" not in str(m.events[k]) and j not in seen:
                    seen.add(j)
                    q.append(j)
        else:
            pytest.fail("no quiescent completion")


@pytest.mark.parametrize("key", [(1, 1, 1), (2, 1, 1), (2, 2, 2)])
def test_channel_flush_and_network_separation(graphs, key):
    g = graphs(*key)
    m = g.model
    slots = {c: (m.slot_of[f"{c}.isFull"], m.slot_of[f"{c}.type"],
                 [m.slot_of[n] for n in m.var_names if n.startswith(c + ".") and not n.endswith("isFull")])
             for c in m.layout.chan_full}
    for s in g.states:
        for c, (full, typ, payload) in slots.items():
            if not s[full]:
                assert not any(s[k] for k in payload), c
            else:
                assert CHANNEL_OF[Msg(s[typ])] == c.rsplit("chan_", 1)[1]


@pytest.mark.parametrize("key", [(1, 1, 1), (2, 1, 1), (2, 2, 2)])
def test_quiescent_census_and_sharer_list(graphs, key):
    g = graphs(*key)
    lay = g.model.layout
    for s in g.states:
        if not lay.quiescent(s):
            continue
        assert lay.census_ok(s)
        for b in range(key[1]):
            n = s[lay.l2_ncopies[b]]
            listed = {s[c] for v, c in zip(lay.l2_v[b], lay.l2_c[b]) if s[v]}
            if n > key[2]:
                assert not listed
            else:
                assert listed == lay.holders(s, b)


def test_message_table():
    rows = [r.split("\t") for r in message_table_tsv().splitlines()]
    assert len(rows) == len(Msg)
    assert ["12", "M_UP", "L2L1CPREQ"] in rows
    assert ["9", "CLACK", "L2L1CLACK"] in rows
    assert not any(r[1] == "RSP_B_INV" for r in (x.split("\t") for x in message_table_tsv(False).splitlines()))


def test_legacy_single_processor_has_no_deadlock(graphs):
    g = graphs(1, 1, 1, "legacy")
    assert not g.capped and find_deadlocks(g) == set()


def test_legacy_two_by_one_has_no_deadlock(graphs):
    assert find_deadlocks(graphs(2, 1, 1, "legacy")) == set()


@pytest.mark.slow
def test_legacy_deadlock_has_phantom_copy(graphs):
    g = graphs(2, 2, 1, "legacy")
    dead = find_deadlocks(g)
    assert dead
    m = g.model
    t = nearest_trace(g, dead)
    assert t.replay()
    assert any(m.value(s, f"l2[{b}].n_copies") == 1 and sharer_census(m, s, b) == 0
               for s in t.states for b in range(2))


@pytest.mark.parametrize("key", [(1, 1, 1), (2, 1, 1)])
def test_eviction_reaches_m_inv_and_put(graphs, key):
    g = graphs(*key, eviction=True)
    m, lay = g.model, g.model.layout
    assert not g.capped and find_deadlocks(g) == set()
    sent = {(c, Msg(m.value(s, f"{c}.type"))) for s in g.states
            for c in ("chan_L2L1CPREQ", "chan_L2MEMDTREQ") if m.value(s, f"{c}.isFull")}
    assert ("chan_L2MEMDTREQ", Msg.PUT) in sent
    assert ("chan_L2L1CPREQ", Msg.M_INV) in sent
    assert all(lay.census_ok(s) for s in g.states if lay.quiescent(s))
    # replacement only adds behaviour
    assert g.n_states > graphs(*key).n_states


def test_initial_state_is_quiescent():
    m = build_system(Config(2, 2, 2))
    assert quiescent(m, m.initial_state()) and census_ok(m, m.initial_state())

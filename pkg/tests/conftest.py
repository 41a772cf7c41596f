import pytest

from tsar_dhccp.dhccp import Config, build_system
from tsar_dhccp.explorer import explore

_GRAPHS: dict = {}


def protocol_graph(proc, l2, th, variant="fixed", eviction=False):
    """Exhaustive graph of one configuration, shared across the session."""
    cfg = Config(proc, l2, th, variant=variant, l2_eviction=eviction)
    if str(cfg) not in _GRAPHS:
        _GRAPHS[str(cfg)] = explore(build_system(cfg))
    return _GRAPHS[str(cfg)]


@pytest.fixture(scope="session")
def graphs():
    return protocol_graph


def drive(model, names, state=None):
    """Fire, in order, the unique enabled event whose name starts with each prefix."""
    state = model.initial_state() if state is None else state
    states = [state]
    for name in names:
        hits = [(k, t) for k, t in model.step(state) if str(model.events[k]).startswith(name)]
        assert len(hits) == 1, f"{name}: {[str(model.events[k]) for k, _ in hits]}"
        state = hits[0][1]
        states.append(state)
    return states


READ_MISS_P0 = [
    "init(", "pc[0].s_p_send_rd(a=0)", "pc[0].c_t_Empty_ReadWaitEmpty(a=0", "l2[0].t_Empty_GetWaitRd(a=0,id=0)",
    "mem.t_Get(a=0)", "l2[0].t_GetWaitRd_Valid(a=0,id=0)", "pc[0].c_t_ReadWaitEmpty_Valid(a=0",
    "pc[0].s_p_recv_rd(a=0)",
]

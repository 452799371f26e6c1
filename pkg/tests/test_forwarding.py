import copy

import pytest
from hypothesis import given, settings, strategies as st

from vndnsim import forwarding as fw
from vndnsim.link import BROADCAST, DataMsg, Frame, InterestMsg, parse_mac
from vndnsim.tables import select_next_hop

from support import Recorder, data, interest, mac, name, node

A, B, D, G, E, F, C = (mac(i) for i in range(1, 8))
M09 = mac(9)


def frames(out):
    return [(str(o.frame.oma), str(o.frame.tma)) for o in out]


# ------------------------------------------------------------ Interests

def test_flood_phase_relay_rebroadcasts():
    b = node([B])
    out = fw.on_interest(b, interest(A), 0.0)
    assert list(b.pit.get(name(0)).in_records) == [A]
    assert frames(out) == [("00:00:00:00:00:02", "FF:FF:FF:FF:FF:FF")]


def test_fib_phase_relay_unicasts():
    e = node([E])
    e.fib.upsert_next_hop(("content",), F, 3.0)
    out = fw.on_interest(e, interest(A, E, seg=1), 100.0)
    assert list(e.pit.get(name(1)).in_records) == [A]
    assert frames(out) == [("00:00:00:00:00:05", "00:00:00:00:00:06")]
    assert e.probes[name(1)].next_hop_mac == F
    assert e.fib.entry(("content",)).hop(F).counter == 1


def test_foreign_tma_is_ignored():
    e = node([E])
    before = copy.deepcopy(e.__dict__)
    assert fw.on_interest(e, interest(A, M09), 0.0) == []
    assert len(e.pit) == 0 and len(e.fib) == 0
    assert e.duplicates_dropped == before["duplicates_dropped"]


def test_cs_hit_answers_on_receiving_interface():
    n = node([4, 5, 6])
    n.cs.insert(DataMsg(name(0), 1024), 0.0)
    out = fw.on_interest(n, interest(A, channel=174), 1.0, interface_idx=1)
    assert len(out) == 1
    assert out[0].interface_idx == 1
    assert (out[0].frame.src_mac, out[0].frame.dst_mac) == (mac(5), A)
    assert not out[0].frame.is_interest


def test_duplicate_nonce_dropped():
    b = node([B])
    fw.on_interest(b, interest(A, nonce=9), 0.0)
    assert fw.on_interest(b, interest(C, nonce=9), 1.0) == []
    assert b.duplicates_dropped == 1


def test_aggregation_within_suppression_window():
    b = node([B])
    fw.on_interest(b, interest(A, nonce=1), 0.0)
    assert fw.on_interest(b, interest(C, nonce=2), 10.0) == []
    assert list(b.pit.get(name(0)).in_records) == [A, C]


def test_retransmission_forwarded_after_window():
    b = node([B])
    fw.on_interest(b, interest(A, nonce=1), 0.0)
    out = fw.on_interest(b, interest(C, nonce=2), b.retx_suppression_ms)
    assert len(out) == 1


def test_same_downstream_retransmission_forwarded():
    b = node([B])
    fw.on_interest(b, interest(A, nonce=1), 0.0)
    assert len(fw.on_interest(b, interest(A, nonce=2), 5.0)) == 1


def test_discovery_interest_clears_relay_fib():
    b = node([B])
    b.fib.upsert_next_hop(("content",), D, 1.0)
    out = fw.on_interest(b, interest(A), 0.0)
    assert frames(out) == [(str(B), str(BROADCAST))]
    assert b.fib.entry(("content",)) is None


def test_source_replies_once_per_downstream():
    g = node([G], role=fw.Role.SOURCE)
    out = fw.on_interest(g, interest(D, nonce=5), 0.0)
    assert frames(out) == [(str(G), str(D))]
    assert fw.on_interest(g, interest(D, nonce=5), 1.0) == []
    assert frames(fw.on_interest(g, interest(F, nonce=5), 1.0)) == [(str(G), str(F))]
    assert len(g.pit) == 0


def test_source_data_payload_sizes():
    g = node([G], role=fw.Role.SOURCE)
    last = fw.on_interest(g, interest(D, seg=1710), 0.0)[0].frame.body
    assert last.payload_len_bytes == 1_752_000 - 1024 * 1710


# ------------------------------------------------------------ Data

def test_data_follows_pit_back():
    d = node([D])
    fw.on_interest(d, interest(B), 0.0)
    out = fw.on_data(d, data(G, D), 4.0)
    assert frames(out) == [(str(D), str(B))]
    assert d.fib.entry(("content",)).hop(G).latency_ms == 4.0
    assert d.cs.lookup(name(0)) is not None
    assert d.pit.get(name(0)) is None


def test_overheard_data_learns_only():
    d = node([D])
    fw.on_interest(d, interest(B), 0.0)
    assert fw.on_data(d, data(G, M09), 3.0) == []
    assert d.fib.entry(("content",)).hop(G).latency_ms == 3.0
    assert d.cs.lookup(name(0)) is None
    assert d.pit.get(name(0)) is not None


def test_strict_unicast_discards_overheard():
    d = node([D], strict_unicast=True)
    fw.on_interest(d, interest(B), 0.0)
    assert fw.on_data(d, data(G, M09), 3.0) == []
    assert len(d.fib) == 0


def test_data_without_pit_dropped():
    d = node([D])
    assert fw.on_data(d, data(G, D), 3.0) == []
    assert len(d.fib) == 0 and len(d.cs) == 0


def test_data_to_every_downstream():
    d = node([D])
    fw.on_interest(d, interest(B, nonce=1), 0.0)
    fw.on_interest(d, interest(C, nonce=2), 1.0)
    out = fw.on_data(d, data(G, D), 4.0)
    assert sorted(o.frame.dst_mac for o in out) == [B, C]


def test_latency_measured_from_probe():
    d = node([D])
    d.fib.upsert_next_hop(("content",), G, 9.0)
    fw.on_interest(d, interest(B, D, nonce=1), 50.0)
    fw.on_data(d, data(G, D), 53.5)
    assert d.fib.entry(("content",)).hop(G).latency_ms == pytest.approx(3.5)


def test_late_data_from_second_upstream_teaches_hop():
    a = node([A], role=fw.Role.REQUESTER)
    a.listener = Recorder()
    out = fw.requester_tick(a, 0.0)
    assert frames(out) == [(str(A), str(BROADCAST))]
    fw.on_data(a, data(E, A), 5.0)
    assert a.listener.received == [(name(0), 5.0)]
    fw.on_data(a, data(B, A), 6.0)
    hops = a.fib.entry(("content",)).next_hops
    assert [(h.mac, h.latency_ms) for h in hops] == [(E, 5.0), (B, 6.0)]
    assert len(a.listener.received) == 1


def test_echoed_unicast_reroutes():
    b = node([B])
    b.fib.upsert_next_hop(("content",), D, 1.0)
    b.fib.upsert_next_hop(("content",), C, 2.0)
    out = fw.on_interest(b, interest(A, B, nonce=3), 0.0)
    first = out[0].frame.dst_mac
    # the same Interest comes back to us, addressed to us: that hop loops
    out = fw.on_interest(b, interest(mac(20), B, nonce=3), 1.0)
    assert len(out) == 1 and out[0].frame.dst_mac not in (first, BROADCAST)
    assert b.fib.entry(("content",)).hop(first) is None


def test_unicast_failure_forgets_hop_and_retries():
    b = node([B])
    b.fib.upsert_next_hop(("content",), D, 1.0)
    out = fw.on_interest(b, interest(A, B), 0.0)
    retry = fw.on_unicast_failure(b, out[0].frame, 5.0)
    assert frames(retry) == [(str(B), str(BROADCAST))]
    assert b.fib.entry(("content",)) is None


# ------------------------------------------------------------ requester

def requester(**kw):
    a = node([A], role=fw.Role.REQUESTER, **kw)
    a.listener = Recorder()
    return a


def test_requester_schedule():
    a = requester()
    out = fw.requester_tick(a, 0.0)
    assert out[0].frame.tma.is_broadcast and out[0].frame.body.name == name(0)
    a.fib.upsert_next_hop(("content",), E, 1.0)
    out = fw.requester_tick(a, 100.0)
    assert out[0].frame.tma == E and out[0].frame.body.name == name(1)
    a.app.next_index = 100
    out = fw.requester_tick(a, 10_000.0)
    assert out[0].frame.tma.is_broadcast
    assert a.fib.entry(("content",)) is None


def test_requester_wraps_segments():
    a = requester()
    a.app.next_index = a.app.n_segments
    assert fw.requester_tick(a, 0.0)[0].frame.body.name == name(0)


def test_tick_on_relay_rejected():
    with pytest.raises(ValueError):
        fw.requester_tick(node([B]), 0.0)


def test_lifetime_expiry_retransmits():
    a = requester()
    a.app.next_index = 7
    fw.requester_tick(a, 0.0)
    out = fw.lifetime_expiry(a, name(7), 4000.0)
    assert len(out) == 1 and out[0].frame.body.name == name(7)
    assert a.listener.sent[-1] == (name(7), 4000.0, True)


def test_no_retransmission_when_satisfied():
    a = requester()
    fw.requester_tick(a, 0.0)
    fw.on_data(a, data(E, A), 3999.0)
    assert fw.lifetime_expiry(a, name(0), 4000.0) == []


# ------------------------------------------------------------ CODIE and flooding

@pytest.mark.parametrize("hop_count,traveled,gate", [
    (3, 2, fw.Gate.FORWARD), (3, 3, fw.Gate.DISCARD), (0, 1, fw.Gate.DISCARD), (0, 0, fw.Gate.DISCARD)])
def test_codie_gate(hop_count, traveled, gate):
    assert fw.codie_data_gate(None, DataMsg(name(0), 10, hop_count), traveled) is gate


def test_codie_source_sets_budget():
    g = node([G], role=fw.Role.SOURCE, kind="codie")
    out = fw.on_interest(g, interest(D, hop_count=2), 0.0)
    assert out[0].frame.body.hop_count == 3


def test_codie_relay_stops_at_budget():
    r = node([D], kind="codie")
    fw.on_interest(r, interest(B), 0.0)
    assert fw.on_data(r, data(G, hop_count=2, traveled=1), 1.0) == []
    r2 = node([D], kind="codie")
    fw.on_interest(r2, interest(B), 0.0)
    out = fw.on_data(r2, data(G, hop_count=2, traveled=0), 1.0)
    assert out[0].frame.body.hops_traveled == 1


def test_flooding_never_unicasts():
    r = node([4, 5, 6], kind="flooding")
    r.fib.upsert_next_hop(("content",), G, 1.0)
    out = fw.on_interest(r, interest(A), 0.0)
    assert len(out) == 3 and all(o.frame.tma.is_broadcast for o in out)


def test_flooding_data_uses_pit_interfaces():
    r = node([4, 5, 6], kind="flooding")
    fw.on_interest(r, interest(A, channel=174), 0.0, interface_idx=1)
    out = fw.on_data(r, data(G), 1.0)
    assert [o.interface_idx for o in out] == [1]


def test_flooding_data_without_pit_ignored():
    r = node([4], kind="flooding")
    assert fw.on_data(r, data(G), 1.0) == []


# ------------------------------------------------------------ MMM variant

def test_mmm_frames_are_broadcast_with_header():
    e = node([E], kind="mmm")
    e.fib.upsert_next_hop(("content",), F, 1.0)
    body = InterestMsg(name(1), 4000, 1, (A, E))
    out = fw.on_interest(e, Frame(A, BROADCAST, 172, body), 0.0)
    f = out[0].frame
    assert f.dst_mac.is_broadcast
    assert f.body.variant_header == (E, F)
    assert (f.oma, f.tma) == (E, F)


def test_mmm_filters_on_header_tma():
    e = node([E], kind="mmm")
    body = InterestMsg(name(1), 4000, 1, (A, M09))
    assert fw.on_interest(e, Frame(A, BROADCAST, 172, body), 0.0) == []


def test_mmm_data_strips_and_readds_header():
    d = node([D], kind="mmm")
    fw.on_interest(d, Frame(B, BROADCAST, 172, InterestMsg(name(0), 4000, 1, (B, BROADCAST))), 0.0)
    out = fw.on_data(d, Frame(G, BROADCAST, 172, DataMsg(name(0), 1024, 0, (G, D))), 2.0)
    assert [(o.frame.oma, o.frame.tma, o.frame.dst_mac) for o in out] == [(D, B, BROADCAST)]
    assert d.cs.lookup(name(0)).variant_header is None


# ------------------------------------------------------------ properties

own = [mac(1)]
neighbours = st.sampled_from([mac(i) for i in range(2, 8)])
tmas = st.sampled_from([BROADCAST, mac(1), mac(9)])


@st.composite
def relay_and_frame(draw):
    kind = draw(st.sampled_from(fw.STRATEGIES))
    n = node(own, kind=kind, approach=draw(st.integers(1, 3)))
    for _ in range(draw(st.integers(0, 3))):
        fw.on_interest(n, interest(draw(neighbours), draw(tmas), nonce=draw(st.integers(0, 5))),
                       draw(st.floats(0, 50)))
    for _ in range(draw(st.integers(0, 3))):
        n.fib.upsert_next_hop(("content",), draw(neighbours), draw(st.floats(0, 20)))
    src = draw(neighbours)
    if draw(st.booleans()):
        f = interest(src, draw(tmas), nonce=draw(st.integers(0, 9)))
    else:
        f = data(src, draw(tmas))
    return n, f, draw(st.floats(50, 5000))


@settings(max_examples=300)
@given(relay_and_frame())
def test_frame_conservation_and_addresses(case):
    n, f, now = case
    entry = n.pit.get(f.body.name)
    downstream = set(entry.in_records) if entry else set()
    hops = {h.mac for h in n.fib.entry(("content",)).next_hops} if n.fib.entry(("content",)) else set()
    out = fw.handle_frame(n, f, now)
    assert len(out) <= 1 + len(downstream)
    for o in out:
        assert o.frame.oma in n.mac_set
        tma = o.frame.tma
        assert tma.is_broadcast or tma in downstream | hops | {f.oma}


@settings(max_examples=200)
@given(relay_and_frame())
def test_handlers_are_deterministic(case):
    n, f, now = case
    twin = copy.deepcopy(n)
    assert fw.handle_frame(n, f, now) == fw.handle_frame(twin, f, now)
    assert n.fib.dump() == twin.fib.dump()
    assert sorted(map(str, (e.name for e in n.pit))) == sorted(map(str, (e.name for e in twin.pit)))

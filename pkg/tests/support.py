"""Small builders shared by the test modules."""

import random

from vndnsim import forwarding as fw
from vndnsim.link import BROADCAST, ContentName, DataMsg, Frame, InterestMsg, MacAddress, parse_mac

PREFIX = ("content",)


def mac(n: int) -> MacAddress:
    return MacAddress.from_int(n)


def name(seg: int = 0) -> ContentName:
    return ContentName(PREFIX, seg)


def node(macs=(1,), role=fw.Role.RELAY, kind="immm", approach=3, channels=(172, 174, 176), **kw):
    ifaces = [fw.Interface(mac(m) if isinstance(m, int) else m, channels[i % len(channels)])
              for i, m in enumerate(macs)]
    return fw.NodeState(node_id=kw.pop("node_id", 0), interfaces=ifaces, role=role,
                        strategy=fw.Strategy(kind, approach), content_prefix=PREFIX,
                        rng=random.Random(kw.pop("seed", 0)), **kw)


def interest(src, dst=BROADCAST, seg=0, nonce=1, lifetime=4000, channel=172, hop_count=0):
    return Frame(src, dst, channel, InterestMsg(name(seg), lifetime, nonce, None, hop_count))


def data(src, dst=BROADCAST, seg=0, channel=172, hop_count=0, traveled=0):
    return Frame(src, dst, channel, DataMsg(name(seg), 1024, hop_count, None, traveled))


class Recorder(fw.Listener):
    def __init__(self):
        self.sent = []
        self.received = []

    def interest_sent(self, name, now_ms, retransmission):
        self.sent.append((name, now_ms, retransmission))

    def data_received(self, name, now_ms):
        self.received.append((name, now_ms))


def static_config(positions, strategy="immm", duration_s=1.0, requester=0, source=None, **kw):
    """A scenario over fixed positions with the requester and source at the ends."""
    from vndnsim.scenario import MobilityConfig, ScenarioConfig

    return ScenarioConfig(
        duration_s=duration_s, strategy=strategy,
        mobility=MobilityConfig(kind="static", positions=[tuple(p) for p in positions]),
        requester_id=requester, source_id=len(positions) - 1 if source is None else source, **kw)


def line(n, spacing=200.0):
    return [(i * spacing, 0.0) for i in range(n)]

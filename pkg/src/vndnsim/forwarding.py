"""Strategy layer: how a vehicle handles Interest and Data frames.

Four strategies share one node model:

``immm``
    Flood Interests with the broadcast address until a Data message comes
    back, learning MAC next hops from every Data frame heard, then unicast
    subsequent Interests along those next hops. Origin/target MACs live only
    in the link frame.
``mmm``
    Same decisions, but origin/target MACs travel as extra fields inside
    the NDN message and every frame is a link-layer broadcast.
``flooding``
    Rebroadcast every new Interest and every Data that satisfies a pending
    Interest.
``codie``
    Flooding, with Data dissemination bounded by the hop count the Interest
    needed to reach the source.

The handlers take a :class:`NodeState`, mutate it, and return the frames to
transmit as ``(interface_idx, Frame)`` pairs. Given equal state, frame and
time they return equal output; the only randomness (Interest nonces) comes
from the node's injected RNG.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, NamedTuple, Optional, Set, Tuple

from .link import (
    BROADCAST,
    DEFAULT_CONTENT_BYTES,
    DEFAULT_SEGMENT_BYTES,
    LINK_HEADER_BYTES,
    ContentName,
    DataMsg,
    Frame,
    InterestMsg,
    MacAddress,
    name_matches,
    segment_count,
    segment_payload,
)
from .tables import ContentStore, Fib, NoRouteError, Pit, PitEntry, select_next_hop

STRATEGIES = ("immm", "mmm", "flooding", "codie")


class Role(enum.Enum):
    REQUESTER = "requester"
    SOURCE = "source"
    RELAY = "relay"


@dataclass(frozen=True)
class Strategy:
    kind: str = "immm"
    approach: int = 3
    max_hops: int = 32  # CODIE: Interests are not rebroadcast beyond this many hops

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}; expected one of {STRATEGIES}")
        if self.approach not in (1, 2, 3):
            raise ValueError(f"approach must be 1, 2 or 3, got {self.approach!r}")
        if self.max_hops < 1:
            raise ValueError("max_hops must be positive")

    @property
    def uses_fib(self) -> bool:
        return self.kind in ("immm", "mmm")


class Interface(NamedTuple):
    mac: MacAddress
    channel: int


class Outbound(NamedTuple):
    interface_idx: int
    frame: Frame


@dataclass(slots=True)
class PendingProbe:
    name: ContentName
    next_hop_mac: MacAddress
    sent_at_ms: float


@dataclass(slots=True)
class Straggler:
    """What remains of a satisfied PIT entry for a short while."""

    sent_at_ms: float
    until_ms: float
    nonces: Set[int]


@dataclass
class RequesterApp:
    """Sequential segment fetcher driven by periodic ticks."""

    lifetime_ms: int = 4000
    interval_ms: float = 100.0
    rediscovery_period_ms: float = 10_000.0
    n_segments: int = segment_count()
    next_index: int = 0


class Listener:
    """Receives requester-side observations (see :mod:`vndnsim.metrics`)."""

    def interest_sent(self, name: ContentName, now_ms: float, retransmission: bool) -> None:
        pass

    def data_received(self, name: ContentName, now_ms: float) -> None:
        pass


@dataclass
class NodeState:
    node_id: object
    interfaces: List[Interface]
    role: Role = Role.RELAY
    strategy: Strategy = field(default_factory=Strategy)
    content_prefix: Tuple[str, ...] = ("content",)
    content_bytes: int = DEFAULT_CONTENT_BYTES
    segment_bytes: int = DEFAULT_SEGMENT_BYTES
    header_overhead: int = LINK_HEADER_BYTES
    # follow the prose reading: mis-addressed Data is discarded without learning
    strict_unicast: bool = False
    cs: ContentStore = field(default_factory=ContentStore)
    pit: Pit = field(default_factory=Pit)
    fib: Fib = field(default_factory=Fib)
    probes: Dict[ContentName, PendingProbe] = field(default_factory=dict)
    stragglers: Dict[ContentName, Straggler] = field(default_factory=dict)
    # how long a satisfied entry keeps absorbing late Data and echoed nonces
    straggler_ms: float = 100.0
    # a pending name is forwarded again for a new nonce after this long
    retx_suppression_ms: float = 250.0
    app: Optional[RequesterApp] = None
    rng: random.Random = field(default_factory=lambda: random.Random(0))
    listener: Optional[Listener] = None
    # source-side replay protection: (nonce, downstream mac) pairs answered
    answered: Set[Tuple[int, Optional[MacAddress]]] = field(default_factory=set)
    duplicates_dropped: int = 0

    def __post_init__(self):
        if not 1 <= len(self.interfaces) <= 3:
            raise ValueError("a node has between one and three interfaces")
        self.mac_set: FrozenSet[MacAddress] = frozenset(i.mac for i in self.interfaces)
        self.uses_fib: bool = self.strategy.uses_fib
        if len(self.mac_set) != len(self.interfaces):
            raise ValueError("interface MACs must be unique")
        if self.role is Role.REQUESTER and self.app is None:
            self.app = RequesterApp(n_segments=segment_count(self.content_bytes, self.segment_bytes))

    @property
    def macs(self) -> List[MacAddress]:
        return [i.mac for i in self.interfaces]

    def owns(self, mac: MacAddress) -> bool:
        return mac in self.mac_set


# ------------------------------------------------------------ frame helpers


def _broadcast(node: NodeState, body, only: Optional[Set[int]] = None) -> List[Outbound]:
    """One broadcast frame per interface (or per interface in ``only``)."""
    out = []
    mmm = node.strategy.kind == "mmm"
    for idx, iface in enumerate(node.interfaces):
        if only is not None and idx not in only:
            continue
        b = _with_header(body, iface.mac, BROADCAST) if mmm else body
        out.append(Outbound(idx, Frame(iface.mac, BROADCAST, iface.channel, b, node.header_overhead)))
    return out


def _unicast(node: NodeState, idx: int, dst: MacAddress, body) -> Outbound:
    iface = node.interfaces[idx]
    if node.strategy.kind == "mmm":
        return Outbound(idx, Frame(iface.mac, BROADCAST, iface.channel,
                                   _with_header(body, iface.mac, dst), node.header_overhead))
    return Outbound(idx, Frame(iface.mac, dst, iface.channel, body, node.header_overhead))


def _with_header(body, oma: MacAddress, tma: MacAddress):
    if isinstance(body, InterestMsg):
        return InterestMsg(body.name, body.lifetime_ms, body.nonce, (oma, tma), body.hop_count)
    return DataMsg(body.name, body.payload_len_bytes, body.hop_count, (oma, tma), body.hops_traveled)


def _strip(body):
    if body.variant_header is None:
        return body
    if isinstance(body, InterestMsg):
        return InterestMsg(body.name, body.lifetime_ms, body.nonce, None, body.hop_count)
    return DataMsg(body.name, body.payload_len_bytes, body.hop_count, None, body.hops_traveled)


def _make_data(node: NodeState, name: ContentName, hop_count: int = 0) -> DataMsg:
    payload = segment_payload(name.segment, node.content_bytes, node.segment_bytes)
    return DataMsg(name, payload, hop_count)


def _live_entry(node: NodeState, name: ContentName, now_ms: float) -> Optional[PitEntry]:
    entry = node.pit.get_live(name, now_ms)
    if entry is None:
        node.probes.pop(name, None)
    return entry


def _straggler(node: NodeState, name: ContentName, now_ms: float) -> Optional[Straggler]:
    s = node.stragglers.get(name)
    if s is not None and s.until_ms <= now_ms:
        del node.stragglers[name]
        return None
    return s


def _seen_nonce(node: NodeState, entry: Optional[PitEntry], name: ContentName,
                nonce: int, now_ms: float) -> bool:
    if entry is not None:
        return nonce in entry.seen_nonces
    s = _straggler(node, name, now_ms)
    return s is not None and nonce in s.nonces


def _satisfy(node: NodeState, entry: PitEntry, now_ms: float, sent_at_ms: float) -> None:
    """Consume the PIT entry, leaving a short-lived straggler record behind."""
    node.pit.remove(entry.name)
    node.probes.pop(entry.name, None)
    if node.straggler_ms > 0:
        node.stragglers[entry.name] = Straggler(
            sent_at_ms, min(entry.expiry_ms, now_ms + node.straggler_ms), set(entry.seen_nonces))
    if entry.local and node.listener is not None:
        node.listener.data_received(entry.name, now_ms)


def _serves(node: NodeState, name: ContentName) -> bool:
    return node.role is Role.SOURCE and name_matches(node.content_prefix, name)


# ------------------------------------------------------------ Interests


def on_interest(node: NodeState, frame: Frame, now_ms: float,
                interface_idx: int = 0) -> List[Outbound]:
    """Handle an Interest frame heard on ``interface_idx``."""
    tma = frame.tma
    if tma != BROADCAST and tma not in node.mac_set:
        return []
    if tma == BROADCAST and node.role is not Role.SOURCE:
        # fast path for the commonest event in a flood: an echo we already handled
        body = frame.body
        entry = node.pit.get(body.name)
        if entry is not None and entry.expiry_ms > now_ms and body.nonce in entry.seen_nonces:
            node.duplicates_dropped += 1
            return []
    if node.uses_fib:
        return _fib_on_interest(node, frame, now_ms, interface_idx)
    return _flood_on_interest(node, frame, now_ms, interface_idx)


def _fib_on_interest(node, frame, now_ms, idx):
    interest: InterestMsg = _strip(frame.body)
    name = interest.name
    oma, tma = frame.oma, frame.tma

    if _serves(node, name):
        # reply to every neighbour that sent us this Interest, once each
        key = (interest.nonce, oma)
        if key in node.answered:
            return []
        node.answered.add(key)
        return [_unicast(node, idx, oma, _make_data(node, name))]

    entry = _live_entry(node, name, now_ms)
    if _seen_nonce(node, entry, name, interest.nonce, now_ms):
        node.duplicates_dropped += 1
        if entry is not None and not tma.is_broadcast:
            # our own unicast came back to us: the next hop we picked leads in a circle
            return _reroute(node, interest, now_ms)
        # otherwise a flood we already handled, echoed back by a neighbour
        return []

    cached = node.cs.lookup(name)
    if cached is not None:
        return [_unicast(node, idx, oma, cached)]

    discovery = tma.is_broadcast
    if entry is not None:
        retx = _is_retransmission(node, entry, oma, now_ms)
        node.pit.upsert(name, oma, now_ms, interest.lifetime_ms, idx, interest.nonce)
        if not retx:
            return []
        return _forward_interest(node, interest, now_ms, discovery)

    node.pit.upsert(name, oma, now_ms, interest.lifetime_ms, idx, interest.nonce)
    return _forward_interest(node, interest, now_ms, discovery)


def _is_retransmission(node: NodeState, entry: PitEntry, oma: MacAddress, now_ms: float) -> bool:
    """Should a new nonce for a pending name be forwarded rather than aggregated?

    Yes when the same downstream asks again, or when our last forward is old
    enough that it has probably been lost.
    """
    if oma in entry.in_records:
        return True
    probe = node.probes.get(entry.name)
    last = probe.sent_at_ms if probe is not None else entry.created_ms
    return now_ms - last >= node.retx_suppression_ms


def _forward_interest(node: NodeState, interest: InterestMsg, now_ms: float,
                      discovery: bool) -> List[Outbound]:
    """Unicast along the FIB when a route exists, otherwise flood."""
    name = interest.name
    if discovery:
        # a flooded Interest restarts route discovery downstream of us too
        node.fib.clear_prefix(name.prefix)
    entry = node.fib.lookup(name)
    try:
        mac = select_next_hop(entry, node.strategy.approach)
    except NoRouteError:
        node.probes[name] = PendingProbe(name, BROADCAST, now_ms)
        return _broadcast(node, interest)
    hop = entry.hop(mac)
    node.probes[name] = PendingProbe(name, mac, now_ms)
    return [_unicast(node, hop.interface_idx, mac, interest)]


def _flood_on_interest(node, frame, now_ms, idx):
    interest: InterestMsg = frame.body
    name = interest.name
    codie = node.strategy.kind == "codie"
    hops = interest.hop_count + 1

    if _serves(node, name):
        key = (interest.nonce, None)
        if key in node.answered:
            return []
        node.answered.add(key)
        return _broadcast(node, _make_data(node, name, hops if codie else 0))

    entry = _live_entry(node, name, now_ms)
    if _seen_nonce(node, entry, name, interest.nonce, now_ms):
        node.duplicates_dropped += 1
        return []

    cached = node.cs.lookup(name)
    if cached is not None:
        if codie:
            cached = DataMsg(name, cached.payload_len_bytes, hops)
        return _broadcast(node, cached)

    if entry is not None:
        retx = _is_retransmission(node, entry, frame.src_mac, now_ms)
        node.pit.upsert(name, frame.src_mac, now_ms, interest.lifetime_ms, idx, interest.nonce)
        if not retx:
            return []
    else:
        node.pit.upsert(name, frame.src_mac, now_ms, interest.lifetime_ms, idx, interest.nonce)
    node.probes[name] = PendingProbe(name, BROADCAST, now_ms)
    if codie:
        if hops >= node.strategy.max_hops:
            return []
        interest = InterestMsg(name, interest.lifetime_ms, interest.nonce, None, hops)
    return _broadcast(node, interest)


# ------------------------------------------------------------ Data


def on_data(node: NodeState, frame: Frame, now_ms: float,
            interface_idx: int = 0) -> List[Outbound]:
    """Handle a Data frame heard on ``interface_idx``."""
    if not node.uses_fib and node.pit.get(frame.body.name) is None:
        return []
    if node.uses_fib:
        return _fib_on_data(node, frame, now_ms, interface_idx)
    return _flood_on_data(node, frame, now_ms, interface_idx)


def _fib_on_data(node, frame, now_ms, idx):
    data: DataMsg = _strip(frame.body)
    name = data.name
    oma, tma = frame.oma, frame.tma
    for_me = tma in node.mac_set or tma.is_broadcast
    entry = _live_entry(node, name, now_ms)
    if entry is None:
        # a late copy from another upstream neighbour still teaches a next hop
        s = _straggler(node, name, now_ms)
        if s is not None and for_me:
            node.fib.upsert_next_hop(name.prefix, oma, now_ms - s.sent_at_ms, now_ms, idx)
        return []

    probe = node.probes.get(name)
    since = probe.sent_at_ms if probe is not None else entry.created_ms
    if not for_me:
        if node.strict_unicast:
            return []
        # overheard: learn the sender as a next hop, nothing else
        node.fib.upsert_next_hop(name.prefix, oma, now_ms - since, now_ms, idx)
        return []

    node.fib.upsert_next_hop(name.prefix, oma, now_ms - since, now_ms, idx)
    node.cs.insert(data, now_ms)
    out = [_unicast(node, rec.interface_idx, rec.mac, data) for rec in entry.in_records.values()]
    _satisfy(node, entry, now_ms, since)
    return out


class Gate(enum.Enum):
    FORWARD = "forward"
    DISCARD = "discard"


def codie_data_gate(node: Optional[NodeState], data: DataMsg, hops_traveled: int) -> Gate:
    """Hop budget check: forward only while the budget set by the source allows another hop."""
    return Gate.FORWARD if hops_traveled < data.hop_count else Gate.DISCARD


def _flood_on_data(node, frame, now_ms, idx):
    data: DataMsg = frame.body
    entry = _live_entry(node, data.name, now_ms)
    if entry is None:
        return []
    probe = node.probes.get(data.name)
    since = probe.sent_at_ms if probe is not None else entry.created_ms
    traveled = data.hops_traveled + 1
    codie = node.strategy.kind == "codie"
    if entry.local:
        node.cs.insert(data, now_ms)
        _satisfy(node, entry, now_ms, since)
        return []
    if codie and codie_data_gate(node, data, traveled) is Gate.DISCARD:
        return []
    node.cs.insert(data, now_ms)
    _satisfy(node, entry, now_ms, since)
    if codie:
        data = DataMsg(data.name, data.payload_len_bytes, data.hop_count, None, traveled)
    # back out of the interfaces the Interest came in on
    return _broadcast(node, data, {rec.interface_idx for rec in entry.in_records.values()})


# ------------------------------------------------------------ requester


def _issue(node: NodeState, name: ContentName, now_ms: float, retransmission: bool) -> List[Outbound]:
    app = node.app
    nonce = node.rng.getrandbits(32)
    interest = InterestMsg(name, app.lifetime_ms, nonce)
    node.pit.create_local(name, now_ms, app.lifetime_ms, nonce)
    node.probes.pop(name, None)
    if node.listener is not None:
        node.listener.interest_sent(name, now_ms, retransmission)
    if node.strategy.uses_fib:
        return _forward_interest(node, interest, now_ms, discovery=False)
    node.probes[name] = PendingProbe(name, BROADCAST, now_ms)
    return _broadcast(node, interest)


def is_rediscovery_tick(app: RequesterApp, now_ms: float) -> bool:
    period = app.rediscovery_period_ms
    if period <= 0:
        return False
    k = round(now_ms / period)
    return abs(now_ms - k * period) < 1e-6


def requester_tick(node: NodeState, now_ms: float) -> List[Outbound]:
    """Request the next segment; on rediscovery ticks flush the FIB first."""
    if node.role is not Role.REQUESTER:
        raise ValueError("requester_tick called on a non-requester node")
    app = node.app
    seg = app.next_index % app.n_segments
    app.next_index += 1
    name = ContentName(node.content_prefix, seg)
    if node.strategy.uses_fib and is_rediscovery_tick(app, now_ms):
        node.fib.clear_prefix(node.content_prefix)
    return _issue(node, name, now_ms, retransmission=False)


def lifetime_expiry(node: NodeState, name: ContentName, now_ms: float) -> List[Outbound]:
    """Retransmit ``name`` if its Interest expired unsatisfied."""
    entry = node.pit.get(name)
    if entry is None or not entry.local or entry.expiry_ms > now_ms:
        return []
    node.pit.remove(name)
    node.probes.pop(name, None)
    return _issue(node, name, now_ms, retransmission=True)


def _reroute(node: NodeState, interest: InterestMsg, now_ms: float) -> List[Outbound]:
    """Drop the next hop that failed for a pending Interest and try again.

    Falls back to flooding once the FIB entry runs out of next hops. Each
    call removes one hop, so repeated failures cannot cycle forever.
    """
    name = interest.name
    probe = node.probes.get(name)
    if probe is None or probe.next_hop_mac.is_broadcast:
        return []
    node.fib.remove_next_hop(name.prefix, probe.next_hop_mac)
    return _forward_interest(node, interest, now_ms, discovery=False)


def on_unicast_failure(node: NodeState, frame: Frame, now_ms: float) -> List[Outbound]:
    """Link layer gave up on a unicast Interest: forget that hop and re-forward."""
    if not node.strategy.uses_fib or not frame.is_interest:
        return []
    interest = _strip(frame.body)
    node.fib.remove_next_hop(interest.name.prefix, frame.tma)
    entry = _live_entry(node, interest.name, now_ms)
    probe = node.probes.get(interest.name)
    if entry is None or probe is None or probe.next_hop_mac != frame.tma:
        return []
    return _forward_interest(node, interest, now_ms, discovery=False)


def handle_frame(node: NodeState, frame: Frame, now_ms: float, interface_idx: int = 0) -> List[Outbound]:
    if frame.is_interest:
        return on_interest(node, frame, now_ms, interface_idx)
    return on_data(node, frame, now_ms, interface_idx)

"""Content Store, Pending Interest Table and FIB with MAC-address next hops.

PIT in-records and FIB next hops are keyed by the neighbour's MAC address
rather than by an NDN face, which is what lets a node address a unicast
frame to a specific vehicle.
"""

from __future__ import annotations

import enum
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Set, Tuple

from .link import ContentName, DataMsg, MacAddress, as_prefix

DEFAULT_CS_CAPACITY = 2048


class NoRouteError(LookupError):
    """Raised when a FIB entry has no next hop to select."""


def _check_unicast(mac: MacAddress) -> None:
    if mac.is_broadcast:
        raise ValueError("the broadcast address cannot be a PIT downstream or FIB next hop")


# --------------------------------------------------------------------- CS


@dataclass(slots=True)
class CsEntry:
    name: ContentName
    data: DataMsg
    inserted_at_ms: float


class ContentStore:
    """Exact-name cache with FIFO eviction."""

    def __init__(self, capacity: int = DEFAULT_CS_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.capacity = capacity
        self._entries: "OrderedDict[ContentName, CsEntry]" = OrderedDict()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, name: ContentName) -> bool:
        return name in self._entries

    def insert(self, data: DataMsg, now_ms: float) -> Optional[ContentName]:
        """Cache ``data``. Returns the evicted name, if any."""
        if data.name in self._entries:
            # FIFO keeps original insertion position
            self._entries[data.name].data = data
            return None
        self._entries[data.name] = CsEntry(data.name, data, now_ms)
        if len(self._entries) > self.capacity:
            evicted, _ = self._entries.popitem(last=False)
            return evicted
        return None

    def lookup(self, name: ContentName) -> Optional[DataMsg]:
        entry = self._entries.get(name)
        return entry.data if entry is not None else None

    def names(self) -> List[ContentName]:
        return list(self._entries)


# -------------------------------------------------------------------- PIT


class PitUpsert(enum.Enum):
    CREATED = "created"
    AGGREGATED = "aggregated"


@dataclass(slots=True)
class InRecord:
    mac: MacAddress
    interface_idx: int
    arrival_ms: float


@dataclass(slots=True)
class PitEntry:
    name: ContentName
    expiry_ms: float
    created_ms: float
    in_records: Dict[MacAddress, InRecord] = field(default_factory=dict)
    seen_nonces: Set[int] = field(default_factory=set)
    # the Interest was issued by an application on this node
    local: bool = False

    def downstreams(self) -> List[InRecord]:
        return list(self.in_records.values())


class Pit:
    def __init__(self):
        self._entries: Dict[ContentName, PitEntry] = {}
        self.get = self._entries.get  # bound once: this is the hottest lookup

    # copies and pickles must rebind ``get`` to their own dict
    def __getstate__(self):
        return self._entries

    def __setstate__(self, entries):
        self._entries = entries
        self.get = entries.get

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, name: ContentName) -> bool:
        return name in self._entries

    def __iter__(self) -> Iterator[PitEntry]:
        return iter(list(self._entries.values()))

    def get_live(self, name: ContentName, now_ms: float) -> Optional[PitEntry]:
        """Like :meth:`get`, but drops the entry first if it has expired."""
        entry = self._entries.get(name)
        if entry is not None and entry.expiry_ms <= now_ms:
            del self._entries[name]
            return None
        return entry

    def upsert(self, name: ContentName, mac: MacAddress, now_ms: float, lifetime_ms: float,
               interface_idx: int = 0, nonce: Optional[int] = None) -> PitUpsert:
        _check_unicast(mac)
        expiry = now_ms + lifetime_ms
        entry = self._entries.get(name)
        if entry is None:
            entry = PitEntry(name, expiry, now_ms)
            entry.in_records[mac] = InRecord(mac, interface_idx, now_ms)
            if nonce is not None:
                entry.seen_nonces.add(nonce)
            self._entries[name] = entry
            return PitUpsert.CREATED
        rec = entry.in_records.get(mac)
        if rec is None:
            entry.in_records[mac] = InRecord(mac, interface_idx, now_ms)
        else:
            rec.arrival_ms = now_ms
            rec.interface_idx = interface_idx
        entry.expiry_ms = max(entry.expiry_ms, expiry)
        if nonce is not None:
            entry.seen_nonces.add(nonce)
        return PitUpsert.AGGREGATED

    def create_local(self, name: ContentName, now_ms: float, lifetime_ms: float,
                     nonce: int) -> PitEntry:
        """Entry for an Interest originated by this node's own application."""
        entry = PitEntry(name, now_ms + lifetime_ms, now_ms, local=True)
        entry.seen_nonces.add(nonce)
        self._entries[name] = entry
        return entry

    def remove(self, name: ContentName) -> Optional[PitEntry]:
        return self._entries.pop(name, None)

    def expire(self, now_ms: float) -> List[ContentName]:
        """Remove every entry with ``expiry_ms <= now_ms``; return their names."""
        gone = [n for n, e in self._entries.items() if e.expiry_ms <= now_ms]
        for n in gone:
            del self._entries[n]
        return gone


# -------------------------------------------------------------------- FIB


@dataclass(slots=True)
class FibNextHop:
    mac: MacAddress
    latency_ms: float
    counter: int
    insertion_seq: int
    interface_idx: int = 0


@dataclass(slots=True)
class FibEntry:
    prefix: Tuple[str, ...]
    next_hops: List[FibNextHop] = field(default_factory=list)

    def hop(self, mac: MacAddress) -> Optional[FibNextHop]:
        for h in self.next_hops:
            if h.mac == mac:
                return h
        return None


class Fib:
    def __init__(self):
        self._entries: Dict[Tuple[str, ...], FibEntry] = {}
        self._seq = 0

    def __len__(self) -> int:
        return len(self._entries)

    def entry(self, prefix) -> Optional[FibEntry]:
        return self._entries.get(as_prefix(prefix))

    def lookup(self, name: ContentName) -> Optional[FibEntry]:
        """Longest-prefix match; linear scan over the (small) table."""
        comps = name.prefix
        best = None
        for prefix, entry in self._entries.items():
            if len(prefix) <= len(comps) and comps[: len(prefix)] == prefix and entry.next_hops:
                if best is None or len(prefix) > len(best.prefix):
                    best = entry
        return best

    def upsert_next_hop(self, prefix, mac: MacAddress, latency_ms: float, now_ms: float = 0.0,
                        interface_idx: int = 0) -> FibNextHop:
        """Learn ``mac`` as a next hop for ``prefix``.

        New hops start with counter 0. Re-learning an existing hop overwrites
        its latency (last measurement wins, no averaging), moves it to the
        newest insertion position and keeps its counter.
        """
        _check_unicast(mac)
        key = as_prefix(prefix)
        entry = self._entries.get(key)
        if entry is None:
            entry = self._entries[key] = FibEntry(key)
        self._seq += 1
        hop = entry.hop(mac)
        if hop is None:
            hop = FibNextHop(mac, float(latency_ms), 0, self._seq, interface_idx)
            entry.next_hops.append(hop)
        else:
            hop.latency_ms = float(latency_ms)
            hop.insertion_seq = self._seq
            hop.interface_idx = interface_idx
            entry.next_hops.remove(hop)
            entry.next_hops.append(hop)
        return hop

    def remove_next_hop(self, prefix, mac: MacAddress) -> bool:
        entry = self._entries.get(as_prefix(prefix))
        if entry is None:
            return False
        hop = entry.hop(mac)
        if hop is None:
            return False
        entry.next_hops.remove(hop)
        if not entry.next_hops:
            del self._entries[entry.prefix]
        return True

    def clear_prefix(self, prefix) -> int:
        entry = self._entries.pop(as_prefix(prefix), None)
        return len(entry.next_hops) if entry is not None else 0

    def dump(self) -> str:
        """One line per next hop: ``prefix mac latency_ms counter seq``."""
        lines = []
        for prefix, entry in sorted(self._entries.items()):
            for h in entry.next_hops:
                lines.append(f"/{'/'.join(prefix)} {h.mac} {h.latency_ms:.6f} {h.counter} {h.insertion_seq}")
        return "\n".join(lines)


def select_next_hop(entry: Optional[FibEntry], approach: int) -> MacAddress:
    """Pick a next hop and bump its counter.

    1: lowest counter, ties to the most recently added hop.
    2: lowest latency, counters ignored (ties to most recently added).
    3: lowest counter, ties to lowest latency, then most recently added.
    """
    if entry is None or not entry.next_hops:
        raise NoRouteError("no next hop available")
    hops = entry.next_hops
    if approach == 1:
        best = min(hops, key=lambda h: (h.counter, -h.insertion_seq))
    elif approach == 2:
        best = min(hops, key=lambda h: (h.latency_ms, -h.insertion_seq))
    elif approach == 3:
        best = min(hops, key=lambda h: (h.counter, h.latency_ms, -h.insertion_seq))
    else:
        raise ValueError(f"approach must be 1, 2 or 3, got {approach!r}")
    best.counter += 1
    return best.mac

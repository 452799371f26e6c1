"""Discrete-event kernel: event queue, unit-disc radio, transmit queues.

Every frame is physically heard by all present nodes within ``range_m`` on
the frame's channel; addressing is left to the strategy layer. Each
interface serializes its frames through a FIFO transmit queue. There is no
collision model. With ``carrier_sense`` on, a transmission also defers the
start of later frames queued by neighbours on the same channel, which is
how dense flooding turns into queueing delay.

Unicast frames get link-layer retransmissions (up to ``unicast_retry_limit``
extra attempts) toward the addressed neighbour, as 802.11 does for
acknowledged frames; broadcast frames are sent once.
"""

from __future__ import annotations

import heapq
import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Deque, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import forwarding as fw
from .link import Frame, MacAddress
from .metrics import Collector, SimulationReport
from .mobility import MobilityModel, StaticPlacement

# event kinds; the integer orders nothing, (time, seq) does
SIM_END = 0
TX_DONE = 1
FRAME_DELIVERY = 2
APP_TICK = 3
PIT_EXPIRY = 4
MOBILITY_UPDATE = 5

EVENT_NAMES = {
    SIM_END: "end",
    TX_DONE: "txdone",
    FRAME_DELIVERY: "rx",
    APP_TICK: "app",
    PIT_EXPIRY: "expiry",
    MOBILITY_UPDATE: "mobility",
}


@dataclass
class RadioConfig:
    range_m: float = 250.0
    data_rate_bps: float = 6_000_000.0
    loss_prob: float = 0.0
    prop_delay_us_per_m: float = 0.0033
    queue_depth: int = 1024
    carrier_sense: bool = True
    unicast_retry_limit: int = 7

    def violations(self) -> List[str]:
        out = []
        if not self.range_m > 0:
            out.append("radio.range_m must be positive")
        if not self.data_rate_bps > 0:
            out.append("radio.data_rate_bps must be positive")
        if not 0.0 <= self.loss_prob <= 1.0:
            out.append("radio.loss_prob must lie in [0, 1]")
        if self.prop_delay_us_per_m < 0:
            out.append("radio.prop_delay_us_per_m must be non-negative")
        if self.queue_depth < 1:
            out.append("radio.queue_depth must be at least 1")
        if self.unicast_retry_limit < 0:
            out.append("radio.unicast_retry_limit must be non-negative")
        return out


class EventQueue:
    """Min-heap ordered by ``(fire_at_ms, seq)``; ``seq`` keeps equal times FIFO."""

    def __init__(self):
        self._heap: List[tuple] = []
        self._seq = itertools.count(1)

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, fire_at_ms: float, kind: int, payload=None) -> None:
        heapq.heappush(self._heap, (fire_at_ms, next(self._seq), kind, payload))

    def pop(self) -> tuple:
        return heapq.heappop(self._heap)

    def peek_time(self) -> float:
        return self._heap[0][0] if self._heap else float("inf")


@dataclass
class TxQueue:
    busy_until_ms: float = 0.0
    pending: Deque[float] = field(default_factory=deque)
    enqueued: int = 0
    transmitted: int = 0
    dropped: int = 0


class QueueFull(Exception):
    pass


def serialization_ms(size_bytes: int, data_rate_bps: float) -> float:
    return size_bytes * 8.0 / data_rate_bps * 1000.0


def enqueue_tx(queue: TxQueue, size_bytes: int, now_ms: float, data_rate_bps: float,
               depth: int = 1024, not_before_ms: float = 0.0, attempts: int = 1) -> float:
    """Schedule a frame on an interface; return its transmit completion time.

    Transmission starts at ``max(now, busy_until, not_before)``. Raises
    :class:`QueueFull` (and counts a drop) when ``depth`` frames are
    already waiting or in flight.
    """
    while queue.pending and queue.pending[0] <= now_ms:
        queue.pending.popleft()
    if len(queue.pending) >= depth:
        queue.dropped += 1
        raise QueueFull
    start = max(now_ms, queue.busy_until_ms, not_before_ms)
    done = start + attempts * serialization_ms(size_bytes, data_rate_bps)
    queue.busy_until_ms = done
    queue.pending.append(done)
    queue.enqueued += 1
    return done


class Neighbourhood:
    """Unit-disc neighbour lists for one snapshot of positions."""

    def __init__(self, xy: np.ndarray, present: np.ndarray, range_m: float):
        n = len(xy)
        self.present = present
        self.lists: List[List[Tuple[int, float]]] = [[] for _ in range(n)]
        self.sets: List[frozenset] = [frozenset()] * n
        self.ids: List[List[int]] = [[] for _ in range(n)]
        if n == 0:
            return
        diff = xy[:, None, :] - xy[None, :, :]
        dist = np.sqrt((diff ** 2).sum(axis=-1))
        with np.errstate(invalid="ignore"):
            mask = dist <= range_m
        mask &= present[:, None] & present[None, :]
        np.fill_diagonal(mask, False)
        rows, cols = np.nonzero(mask)
        d = dist[rows, cols]
        order = np.lexsort((cols, d, rows))
        rows, cols, d = rows[order], cols[order], d[order]
        counts = np.bincount(rows, minlength=n)
        cols_l, d_l = cols.tolist(), d.tolist()
        pos = 0
        for i, c in enumerate(counts.tolist()):
            if c:
                self.lists[i] = list(zip(cols_l[pos:pos + c], d_l[pos:pos + c]))
                self.ids[i] = cols_l[pos:pos + c]
                self.sets[i] = frozenset(self.ids[i])
                pos += c


class Simulator:
    """Hosts NodeStates and moves frames between them.

    ``nodes[i]`` sits at ``mobility.position_at(node_ids[i], t)``.
    """

    def __init__(self, nodes: Sequence[fw.NodeState], node_ids: Sequence, mobility: MobilityModel,
                 radio: Optional[RadioConfig] = None, duration_ms: float = 149_000.0,
                 seed: int = 1, requester: Optional[int] = None, mobility_step_ms: float = 100.0,
                 event_trace: bool = False, link_failure_feedback: bool = True):
        self.nodes = list(nodes)
        self.node_ids = list(node_ids)
        self.mobility = mobility
        self.radio = radio or RadioConfig()
        self.duration_ms = float(duration_ms)
        self.rng = random.Random(seed)
        self.requester = requester
        self.mobility_step_ms = mobility_step_ms
        self.link_failure_feedback = link_failure_feedback
        self.trace: Optional[List[str]] = [] if event_trace else None
        self.collector = Collector()
        self.events = EventQueue()
        self.now = 0.0
        self.queues = [[TxQueue() for _ in n.interfaces] for n in self.nodes]
        # per channel, per node: until when the node hears that channel busy
        self.sensed: Dict[int, List[float]] = {}
        self.mac_owner: Dict[MacAddress, int] = {}
        self.rx_iface: List[Dict[int, int]] = []
        for i, n in enumerate(self.nodes):
            by_channel: Dict[int, int] = {}
            for k, iface in enumerate(n.interfaces):
                if iface.mac in self.mac_owner:
                    raise ValueError(f"MAC {iface.mac} used by more than one node")
                self.mac_owner[iface.mac] = i
                by_channel.setdefault(iface.channel, k)
            self.rx_iface.append(by_channel)
        if requester is not None:
            self.nodes[requester].listener = self.collector
        self.observers: List[Callable[[float, int, fw.Outbound], None]] = []
        self.queue_drops = 0
        self.link_failures = 0
        self._prop_ms_per_m = self.radio.prop_delay_us_per_m / 1000.0
        self._refresh_positions(0.0)

    # ----------------------------------------------------------- plumbing

    def _log(self, t: float, kind: str, node, detail: str) -> None:
        self.trace.append(f"{t:.6f} {kind} {node} {detail}")

    def _refresh_positions(self, t_ms: float) -> None:
        self.xy, present = self.mobility.positions_at(self.node_ids, t_ms / 1000.0)
        self.hood = Neighbourhood(self.xy, present, self.radio.range_m)
        self._rx_cache: Dict[Tuple[int, int], list] = {}

    def _receivers(self, i: int, ch: int) -> list:
        """``(propagation_ms, j, rx_interface)`` for neighbours of ``i`` tuned to ``ch``."""
        key = (i, ch)
        rx = self._rx_cache.get(key)
        if rx is None:
            prop, rx_iface = self._prop_ms_per_m, self.rx_iface
            rx = [(d * prop, j, rx_iface[j][ch]) for j, d in self.hood.lists[i] if ch in rx_iface[j]]
            self._rx_cache[key] = rx
        return rx

    def present(self, i: int) -> bool:
        return bool(self.hood.present[i])

    def transmit(self, i: int, out: fw.Outbound) -> None:
        idx, frame = out
        radio = self.radio
        now = self.now
        for obs in self.observers:
            obs(now, i, out)
        attempts, delivered_to = 1, None
        if not frame.dst_mac.is_broadcast and radio.unicast_retry_limit > 0:
            dst = self.mac_owner.get(frame.dst_mac)
            cap = radio.unicast_retry_limit + 1
            if dst is not None and dst in self.hood.sets[i]:
                attempts = 1
                while attempts <= cap and radio.loss_prob > 0 and self.rng.random() < radio.loss_prob:
                    attempts += 1
                delivered_to = dst if attempts <= cap else -1
                attempts = min(attempts, cap)
            else:
                attempts, delivered_to = cap, -1
        ch = frame.channel
        busy = self.sensed.get(ch)
        if busy is None:
            busy = self.sensed[ch] = [0.0] * len(self.nodes)
        sensed = busy[i] if radio.carrier_sense else 0.0
        try:
            done = enqueue_tx(self.queues[i][idx], frame.size_bytes, now, radio.data_rate_bps,
                              radio.queue_depth, sensed, attempts)
        except QueueFull:
            self.queue_drops += 1
            if self.trace is not None:
                self._log(now, "drop", i, frame.describe())
            return
        if radio.carrier_sense:
            for j in self.hood.ids[i]:
                if busy[j] < done:
                    busy[j] = done
        if self.trace is not None:
            self._log(now, "tx", i, f"{frame.describe()} if={idx} done={done:.6f}")
        self.events.push(done, TX_DONE, (i, idx, frame, delivered_to))

    def _tx_done(self, payload) -> None:
        i, idx, frame, delivered_to = payload
        self.queues[i][idx].transmitted += 1
        if delivered_to == -1 and self.link_failure_feedback:
            self.link_failures += 1
            for o in fw.on_unicast_failure(self.nodes[i], frame, self.now):
                self.transmit(i, o)
        if not self.hood.present[i]:
            return
        loss = self.radio.loss_prob
        now = self.now
        rx = self._receivers(i, frame.channel)
        # the addressed receiver's fate was settled by the retry draw
        target = self.mac_owner.get(frame.dst_mac, -2) if delivered_to is not None else -2
        if loss == 0 and target == -2:
            batch = [(now + dl, j, rxi) for dl, j, rxi in rx]
        else:
            rand = self.rng.random
            batch = []
            for dl, j, rxi in rx:
                if j == target:
                    if delivered_to != j:
                        continue
                elif loss > 0 and rand() < loss:
                    continue
                batch.append((now + dl, j, rxi))
        if batch:
            # one queued cursor per batch; see the FRAME_DELIVERY branch of run()
            self.events.push(batch[0][0], FRAME_DELIVERY, (batch, 0, frame, i))

    # ----------------------------------------------------------- run loop

    def _app_tick(self, k: int) -> None:
        i = self.requester
        node = self.nodes[i]
        app = node.app
        rediscover = node.strategy.uses_fib and fw.is_rediscovery_tick(app, self.now)
        outs = fw.requester_tick(node, self.now)
        name = fw.ContentName(node.content_prefix, (app.next_index - 1) % app.n_segments)
        if self.trace is not None:
            entry = node.fib.entry(node.content_prefix)
            hops = len(entry.next_hops) if entry else 0
            self._log(self.now, "app", i, f"{name} rediscovery={int(rediscover)} fib={hops}")
        for o in outs:
            self.transmit(i, o)
        self.events.push(self.now + app.lifetime_ms, PIT_EXPIRY, (i, name))
        nxt = (k + 1) * app.interval_ms
        if nxt < self.duration_ms:
            self.events.push(nxt, APP_TICK, k + 1)

    def _pit_expiry(self, payload) -> None:
        i, name = payload
        node = self.nodes[i]
        outs = fw.lifetime_expiry(node, name, self.now)
        if outs:
            if self.trace is not None:
                self._log(self.now, "expiry", i, f"{name} retransmit")
            for o in outs:
                self.transmit(i, o)
            self.events.push(self.now + node.app.lifetime_ms, PIT_EXPIRY, (i, name))

    def _mobility(self, k: int) -> None:
        if not self.mobility.static:
            self._refresh_positions(self.now)
        if k % 10 == 0:
            for j, node in enumerate(self.nodes):
                if j == self.requester:
                    continue
                for name in node.pit.expire(self.now):
                    node.probes.pop(name, None)
                if node.stragglers:
                    node.stragglers = {n: s for n, s in node.stragglers.items()
                                       if s.until_ms > self.now}
        nxt = (k + 1) * self.mobility_step_ms
        if nxt < self.duration_ms:
            self.events.push(nxt, MOBILITY_UPDATE, k + 1)

    def run(self) -> "Simulator":
        ev = self.events
        ev.push(self.duration_ms, SIM_END)
        if self.duration_ms > 0:
            if self.requester is not None:
                ev.push(0.0, APP_TICK, 0)
            ev.push(self.mobility_step_ms, MOBILITY_UPDATE, 1)
        heap, seq = ev._heap, ev._seq
        pop, push = heapq.heappop, heapq.heappush
        nodes, trace, transmit = self.nodes, self.trace, self.transmit
        on_interest, on_data = fw.on_interest, fw.on_data
        while heap:
            t, _, kind, payload = pop(heap)
            self.now = t
            if kind == FRAME_DELIVERY:
                # Walk the batch in receive order, handing the rest back to
                # the queue as soon as another event is due first. This is
                # the hot loop of dense runs, hence inlined here.
                batch, pos, frame, sender = payload
                handler = on_interest if frame.is_interest else on_data
                n = len(batch)
                while True:
                    j, rxi = batch[pos][1], batch[pos][2]
                    pos += 1
                    if trace is not None:
                        self._log(t, "rx", j, f"{frame.describe()} from={sender}")
                    outs = handler(nodes[j], frame, t, rxi)
                    if outs:
                        for o in outs:
                            transmit(j, o)
                    if pos == n:
                        break
                    nt = batch[pos][0]
                    if heap and nt >= heap[0][0] and nt > t:
                        push(heap, (nt, next(seq), FRAME_DELIVERY, (batch, pos, frame, sender)))
                        break
                    t = self.now = nt
                continue
            if kind == SIM_END:
                if trace is not None:
                    self._log(t, "end", "-", "")
                break
            if kind == TX_DONE:
                self._tx_done(payload)
            elif kind == APP_TICK:
                if self.hood.present[self.requester]:
                    self._app_tick(payload)
                else:
                    nxt = (payload + 1) * self.nodes[self.requester].app.interval_ms
                    if nxt < self.duration_ms:
                        ev.push(nxt, APP_TICK, payload + 1)
            elif kind == PIT_EXPIRY:
                self._pit_expiry(payload)
            elif kind == MOBILITY_UPDATE:
                self._mobility(payload)
        return self

    # ----------------------------------------------------------- results

    @property
    def frames_tx(self) -> int:
        return sum(q.transmitted for qs in self.queues for q in qs)

    @property
    def frames_dropped(self) -> int:
        return sum(q.dropped for qs in self.queues for q in qs)

    def report(self, jitter: str = "mean", **labels) -> SimulationReport:
        rep = SimulationReport.from_records(self.collector.records, jitter=jitter, **labels)
        rep.frames_tx = self.frames_tx
        rep.frames_dropped = self.frames_dropped
        rep.duplicates = self.collector.duplicates
        return rep


def broadcast_delivery(positions: Sequence[Tuple[float, float]], sender: int, range_m: float,
                       now_ms: float, serialization: float = 0.0, prop_delay_us_per_m: float = 0.0033,
                       loss_prob: float = 0.0, rng: Optional[random.Random] = None
                       ) -> List[Tuple[float, int]]:
    """Delivery schedule of one transmission: ``[(fire_at_ms, receiver)]``.

    Standalone form of what :class:`Simulator` does on transmit completion.
    """
    xy = np.asarray(positions, dtype=float)
    hood = Neighbourhood(xy, np.ones(len(xy), dtype=bool), range_m)
    rng = rng or random.Random(0)
    out = []
    for j, d in hood.lists[sender]:
        if loss_prob > 0 and rng.random() < loss_prob:
            continue
        out.append((now_ms + serialization + d * prop_delay_us_per_m / 1000.0, j))
    return out

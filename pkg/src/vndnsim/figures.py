"""The seven-vehicle walkthrough topology and its expected OMA/TMA frames.

Vehicles A..G sit on a ring (C hangs off B); A requests, G holds the
content. Two disjoint three-hop paths exist, A-B-D-G and A-E-F-G, with the
E side slightly shorter so that its Data comes back first.

    C
    B ---- D
  A          G
    E ---- F
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .engine import RadioConfig
from .link import Frame, parse_mac
from .scenario import MobilityConfig, ScenarioConfig, build_simulator

POSITIONS: Dict[str, Tuple[float, float]] = {
    "A": (-200.0, 0.0),
    "B": (-100.0, 173.205),
    "C": (-175.0, 303.0),
    "D": (100.0, 173.205),
    "E": (-95.0, -164.545),
    "F": (95.0, -164.545),
    "G": (200.0, 0.0),
}

MACS: Dict[str, str] = {
    "A": "00:00:00:00:00:01",
    "B": "00:00:00:00:00:02",
    "D": "00:00:00:00:00:03",
    "G": "00:00:00:00:00:04",
    "E": "00:00:00:00:00:05",
    "F": "00:00:00:00:00:06",
    "C": "00:00:00:00:00:07",
}

FF = "FF:FF:FF:FF:FF:FF"


class Tx(NamedTuple):
    node: str
    kind: str  # "I" or "D"
    segment: int
    oma: str
    tma: str

    def __str__(self):
        return f"{self.node} {self.kind} seg={self.segment} oma={self.oma} tma={self.tma}"


# expected transmissions, in order, per figure
GOLDEN: Dict[str, List[Tx]] = {
    "fig1": [
        Tx("A", "I", 0, MACS["A"], FF),
        Tx("B", "I", 0, MACS["B"], FF),
    ],
    "fig2": [
        Tx("G", "D", 0, MACS["G"], MACS["D"]),
        Tx("D", "D", 0, MACS["D"], MACS["B"]),
    ],
    "fig3": [
        Tx("A", "I", 1, MACS["A"], MACS["E"]),
        Tx("E", "I", 1, MACS["E"], MACS["F"]),
    ],
}


def fixture_config(approach: int = 3, strategy: str = "immm", drop: Iterable[str] = (),
                   duration_s: float = 0.2) -> ScenarioConfig:
    names = [n for n in POSITIONS if n not in set(drop)]
    return ScenarioConfig(
        duration_s=duration_s,
        strategy=strategy,
        approach=approach,
        interfaces_per_node=1,
        channels=[172],
        radio=RadioConfig(),
        mobility=MobilityConfig(kind="static", positions=[POSITIONS[n] for n in names]),
        requester_id=names.index("A"),
        source_id=names.index("G"),
        macs={str(i): [MACS[n]] for i, n in enumerate(names)},
        seed=1,
    )


@dataclass
class FixtureRun:
    names: List[str]
    transmissions: List[Tx]
    sim: object
    # PIT downstreams of a relay when it first forwarded each segment's Interest
    pit_at_forward: Dict[Tuple[str, int], List[str]]

    def node(self, name: str):
        return self.sim.nodes[self.names.index(name)]


def run_fixture(approach: int = 3, strategy: str = "immm", drop: Iterable[str] = (),
                event_trace: bool = False) -> FixtureRun:
    drop = set(drop)
    names = [n for n in POSITIONS if n not in drop]
    cfg = fixture_config(approach, strategy, drop).replace(event_trace=event_trace)
    sim = build_simulator(cfg)
    txs: List[Tx] = []
    pit_seen: Dict[Tuple[str, int], List[str]] = {}

    def observe(now, i, out):
        f: Frame = out.frame
        kind = "I" if f.is_interest else "D"
        seg = f.body.name.segment
        txs.append(Tx(names[i], kind, seg, str(f.oma), str(f.tma)))
        if f.is_interest and (names[i], seg) not in pit_seen:
            entry = sim.nodes[i].pit.get(f.body.name)
            if entry is not None:
                pit_seen[(names[i], seg)] = [str(m) for m in entry.in_records]

    sim.observers.append(observe)
    sim.run()
    return FixtureRun(names, txs, sim, pit_seen)


def check_sequence(observed: Sequence[Tx], expected: Sequence[Tx]) -> Optional[str]:
    """None if ``expected`` occurs in order within ``observed``; else the first missing frame."""
    pos = 0
    for want in expected:
        while pos < len(observed) and observed[pos] != want:
            pos += 1
        if pos == len(observed):
            return f"missing frame: {want}"
        pos += 1
    return None


def _state_checks(run: FixtureRun) -> Dict[str, Optional[str]]:
    """Table state the walkthrough describes alongside the frames."""
    out: Dict[str, Optional[str]] = {"fig1": None, "fig2": None, "fig3": None}
    a = MACS["A"]
    if "B" in run.names:
        if run.pit_at_forward.get(("B", 0)) != [a]:
            out["fig1"] = "node B PIT for seg=0 should hold exactly 00:00:00:00:00:01"
    if "D" in run.names:
        fib = run.node("D").fib.entry(("content",))
        if fib is None or fib.hop(parse_mac(MACS["G"])) is None:
            out["fig2"] = "node D FIB should hold next hop 00:00:00:00:00:04"
    if "E" in run.names:
        if run.pit_at_forward.get(("E", 1)) != [a]:
            out["fig3"] = "node E PIT for seg=1 should hold exactly 00:00:00:00:00:01"
    return out


def replay_figures(drop: Iterable[str] = (), approach: int = 3) -> Dict[str, Tuple[bool, str]]:
    """Run the walkthrough and compare against the expected frames per figure."""
    drop = set(drop)
    run = run_fixture(approach=approach, drop=drop)
    states = _state_checks(run)
    results = {}
    for fig, expected in GOLDEN.items():
        expected = [t for t in expected]
        problem = check_sequence(run.transmissions, expected) or states[fig]
        results[fig] = (problem is None, problem or "ok")
    return results

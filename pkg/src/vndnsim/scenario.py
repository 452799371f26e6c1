"""Scenario configuration, validation and the top-level ``run``."""

from __future__ import annotations

import copy
import dataclasses
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from . import forwarding as fw
from .engine import RadioConfig, Simulator
from .link import MacAddress, as_prefix, parse_mac, segment_count
from .metrics import SimulationReport
from .mobility import (MobilityModel, StaticPlacement, TraceTable, generate_manhattan,
                       load_trace)
from .tables import ContentStore


class ScenarioError(ValueError):
    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("invalid scenario: " + "; ".join(self.violations))


@dataclass
class MobilityConfig:
    kind: str = "manhattan"  # manhattan | static | trace
    node_count: int = 20
    positions: List[Tuple[float, float]] = field(default_factory=list)
    trace_path: Optional[str] = None
    seed: Optional[int] = None  # defaults to the scenario seed
    extent_m: float = 1000.0
    streets: int = 5
    speed_min_mps: float = 12.0
    speed_max_mps: float = 18.0
    # extra nodes that never move, e.g. {"source": [500, 500]}
    parked: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    update_ms: float = 100.0


@dataclass
class ScenarioConfig:
    duration_s: float = 149.0
    strategy: str = "immm"
    approach: int = 3
    codie_max_hops: int = 32
    interest_lifetime_ms: int = 4000
    interest_rate_hz: float = 10.0
    content_prefix: str = "/content"
    content_size_bytes: int = 1_752_000
    segment_size_bytes: int = 1024
    rediscovery_period_ms: float = 10_000.0
    radio: RadioConfig = field(default_factory=RadioConfig)
    interfaces_per_node: int = 3
    channels: List[int] = field(default_factory=lambda: [172, 174, 176])
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    requester_id: Any = "car0"
    source_id: Any = "car1"
    seed: int = 1
    cs_capacity: int = 2048
    strict_unicast: bool = False
    link_failure_feedback: bool = True
    jitter: str = "mean"  # mean | smoothed
    event_trace: bool = False
    out_dir: Optional[str] = None
    trace_out: Optional[str] = None
    # explicit MACs per node id, e.g. for the figure fixture
    macs: Dict[str, List[str]] = field(default_factory=dict)

    # -------------------------------------------------------- validation

    def violations(self) -> List[str]:
        out = []
        if not self.duration_s >= 0:
            out.append("duration_s must be non-negative")
        if self.strategy not in fw.STRATEGIES:
            out.append(f"strategy must be one of {', '.join(fw.STRATEGIES)}")
        if self.approach not in (1, 2, 3):
            out.append("approach must be 1, 2 or 3")
        if self.codie_max_hops < 1:
            out.append("codie_max_hops must be positive")
        if not self.interest_lifetime_ms > 0:
            out.append("interest_lifetime_ms must be positive")
        if not self.interest_rate_hz > 0:
            out.append("interest_rate_hz must be positive")
        if not self.content_size_bytes > 0:
            out.append("content_size_bytes must be positive")
        if not self.segment_size_bytes > 0:
            out.append("segment_size_bytes must be positive")
        if self.rediscovery_period_ms < 0:
            out.append("rediscovery_period_ms must be non-negative")
        if not as_prefix(self.content_prefix):
            out.append("content_prefix must have at least one component")
        if not 1 <= self.interfaces_per_node <= 3:
            out.append("interfaces_per_node must be between 1 and 3")
        if not self.channels:
            out.append("channels must not be empty")
        if self.cs_capacity < 1:
            out.append("cs_capacity must be positive")
        if self.jitter not in ("mean", "smoothed"):
            out.append("jitter must be 'mean' or 'smoothed'")
        out += self.radio.violations()
        m = self.mobility
        if m.kind not in ("manhattan", "static", "trace"):
            out.append("mobility.kind must be manhattan, static or trace")
        if m.kind == "manhattan" and m.node_count < 1:
            out.append("mobility.node_count must be at least 1")
        if m.kind == "trace" and not m.trace_path:
            out.append("mobility.trace_path is required for trace mobility")
        if not m.update_ms > 0:
            out.append("mobility.update_ms must be positive")
        if self.requester_id == self.source_id:
            out.append("requester_id and source_id must differ")
        return out

    def validate(self) -> "ScenarioConfig":
        v = self.violations()
        if v:
            raise ScenarioError(v)
        return self

    # -------------------------------------------------------- (de)serialisation

    def to_dict(self) -> Dict[str, Any]:
        d = dataclasses.asdict(self)
        d["mobility"]["positions"] = [list(p) for p in self.mobility.positions]
        d["mobility"]["parked"] = {k: list(v) for k, v in self.mobility.parked.items()}
        return d

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "ScenarioConfig":
        data = copy.deepcopy(data or {})
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ScenarioError([f"unknown key {k!r}" for k in sorted(unknown)])
        radio = data.pop("radio", None) or {}
        mob = data.pop("mobility", None) or {}
        bad = [f"unknown key 'radio.{k}'" for k in sorted(set(radio) - _fields(RadioConfig))]
        bad += [f"unknown key 'mobility.{k}'" for k in sorted(set(mob) - _fields(MobilityConfig))]
        if bad:
            raise ScenarioError(bad)
        if "positions" in mob:
            mob["positions"] = [tuple(p) for p in mob["positions"]]
        if "parked" in mob:
            mob["parked"] = {k: tuple(v) for k, v in mob["parked"].items()}
        return cls(radio=RadioConfig(**radio), mobility=MobilityConfig(**mob), **data)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh))

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(copy.deepcopy(self), **changes)


def _fields(klass) -> set:
    return {f.name for f in dataclasses.fields(klass)}


# ------------------------------------------------------------ building


class _WithParked(MobilityModel):
    def __init__(self, base: MobilityModel, parked: Dict[str, Tuple[float, float]]):
        self.base = base
        self.parked = {k: (float(x), float(y)) for k, (x, y) in parked.items()}
        self.static = base.static

    @property
    def node_ids(self):
        return list(self.base.node_ids) + [k for k in self.parked if k not in set(self.base.node_ids)]

    def position_at(self, node_id, t_s):
        if node_id in self.parked:
            return self.parked[node_id]
        return self.base.position_at(node_id, t_s)


def build_mobility(cfg: ScenarioConfig) -> MobilityModel:
    m = cfg.mobility
    if m.kind == "static":
        base: MobilityModel = StaticPlacement(list(m.positions))
    elif m.kind == "trace":
        base = load_trace(m.trace_path)
    else:
        base = generate_manhattan(
            m.node_count, cfg.seed if m.seed is None else m.seed, extent_m=m.extent_m,
            streets=m.streets, speed_range=(m.speed_min_mps, m.speed_max_mps),
            horizon_s=cfg.duration_s + 1.0)
    if m.parked:
        return _WithParked(base, m.parked)
    return base


def _resolve(ids: List, wanted) -> Optional[int]:
    for i, nid in enumerate(ids):
        if nid == wanted or str(nid) == str(wanted):
            return i
    return None


def build_simulator(cfg: ScenarioConfig) -> Simulator:
    cfg.validate()
    mobility = build_mobility(cfg)
    ids = mobility.node_ids
    req = _resolve(ids, cfg.requester_id)
    src = _resolve(ids, cfg.source_id)
    missing = []
    if req is None:
        missing.append(f"requester_id {cfg.requester_id!r} is not a node of the mobility model")
    if src is None:
        missing.append(f"source_id {cfg.source_id!r} is not a node of the mobility model")
    if missing:
        raise ScenarioError(missing)

    strategy = fw.Strategy(cfg.strategy, cfg.approach, cfg.codie_max_hops)
    prefix = as_prefix(cfg.content_prefix)
    k = cfg.interfaces_per_node
    nodes = []
    next_mac = 1
    for i, nid in enumerate(ids):
        explicit = cfg.macs.get(str(nid))
        if explicit:
            macs = [parse_mac(t) for t in explicit]
        else:
            macs = [MacAddress.from_int(next_mac + j) for j in range(k)]
            next_mac += k
        ifaces = [fw.Interface(mac, cfg.channels[j % len(cfg.channels)]) for j, mac in enumerate(macs)]
        role = fw.Role.REQUESTER if i == req else fw.Role.SOURCE if i == src else fw.Role.RELAY
        app = None
        if role is fw.Role.REQUESTER:
            app = fw.RequesterApp(
                lifetime_ms=cfg.interest_lifetime_ms,
                interval_ms=1000.0 / cfg.interest_rate_hz,
                rediscovery_period_ms=cfg.rediscovery_period_ms,
                n_segments=segment_count(cfg.content_size_bytes, cfg.segment_size_bytes))
        nodes.append(fw.NodeState(
            node_id=nid, interfaces=ifaces, role=role, strategy=strategy, content_prefix=prefix,
            content_bytes=cfg.content_size_bytes, segment_bytes=cfg.segment_size_bytes,
            strict_unicast=cfg.strict_unicast, cs=ContentStore(cfg.cs_capacity), app=app,
            rng=_node_rng(cfg.seed, i)))
    return Simulator(nodes, ids, mobility, radio=cfg.radio, duration_ms=cfg.duration_s * 1000.0,
                     seed=cfg.seed, requester=req, mobility_step_ms=cfg.mobility.update_ms,
                     event_trace=cfg.event_trace, link_failure_feedback=cfg.link_failure_feedback)


def _node_rng(seed: int, i: int) -> random.Random:
    return random.Random(seed * 1_000_003 + i)


def node_count(cfg: ScenarioConfig) -> int:
    m = cfg.mobility
    if m.kind == "manhattan":
        return m.node_count
    if m.kind == "static":
        return len(m.positions)
    return len(build_mobility(cfg).node_ids)


def report_for(cfg: ScenarioConfig, sim: Simulator) -> SimulationReport:
    return sim.report(jitter=cfg.jitter, strategy=cfg.strategy, approach=cfg.approach,
                      lifetime_ms=cfg.interest_lifetime_ms, nodes=node_count(cfg), seed=cfg.seed)


def run(cfg: ScenarioConfig) -> SimulationReport:
    """Validate, simulate and return the metrics report."""
    sim = build_simulator(cfg).run()
    return report_for(cfg, sim)


def run_with_trace(cfg: ScenarioConfig) -> Tuple[SimulationReport, List[str]]:
    cfg = cfg.replace(event_trace=True)
    sim = build_simulator(cfg).run()
    return report_for(cfg, sim), sim.trace

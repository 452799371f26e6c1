"""Requester-side observations and the evaluation metrics.

* Interest satisfaction rate: Data received / Interest transmissions
  (retransmissions count in the denominator).
* Average latency: mean of receive time minus the most recent transmission
  time, over satisfied Interests only.
* Jitter: mean of ``|(R_j - R_i) - (S_j - S_i)|`` over consecutive arrivals
  (RFC 1889 packet-spacing difference). The RFC's smoothed running
  estimator is available as :func:`compute_jitter_smoothed`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .forwarding import Listener
from .link import ContentName

RUN_COLUMNS = ["strategy", "approach", "lifetime_ms", "nodes", "seed", "interests_sent",
               "datas_received", "isr", "avg_latency_ms", "avg_jitter_ms", "frames_tx",
               "frames_dropped"]
METRIC_COLUMNS = ["interests_sent", "datas_received", "isr", "avg_latency_ms", "avg_jitter_ms",
                  "frames_tx", "frames_dropped"]
GROUP_COLUMNS = ["strategy", "approach", "lifetime_ms", "nodes"]


@dataclass
class SatisfactionRecord:
    name: ContentName
    sent_at_ms: float
    received_at_ms: Optional[float] = None
    transmissions: int = 1

    @property
    def satisfied(self) -> bool:
        return self.received_at_ms is not None

    @property
    def latency_ms(self) -> Optional[float]:
        if self.received_at_ms is None:
            return None
        return self.received_at_ms - self.sent_at_ms


class Collector(Listener):
    """Per-run observer attached to the requester node."""

    def __init__(self):
        self.records: List[SatisfactionRecord] = []
        self._open: Dict[ContentName, SatisfactionRecord] = {}
        self.duplicates = 0

    def interest_sent(self, name, now_ms, retransmission):
        rec = self._open.get(name)
        if retransmission and rec is not None and not rec.satisfied:
            rec.transmissions += 1
            rec.sent_at_ms = now_ms
            return
        rec = SatisfactionRecord(name, now_ms)
        self.records.append(rec)
        self._open[name] = rec

    def data_received(self, name, now_ms):
        rec = self._open.get(name)
        if rec is None:
            return
        if rec.satisfied:
            self.duplicates += 1
            return
        rec.received_at_ms = now_ms


def compute_isr(records: Iterable[SatisfactionRecord]) -> float:
    sent = 0
    got = 0
    for r in records:
        sent += r.transmissions
        got += r.satisfied
    return got / sent if sent else 0.0


def compute_avg_latency(records: Iterable[SatisfactionRecord]) -> Optional[float]:
    lat = [r.latency_ms for r in records if r.satisfied]
    if not lat:
        return None
    return float(np.mean(lat))


def arrival_pairs(records: Iterable[SatisfactionRecord]) -> List[Tuple[float, float]]:
    """(send, receive) of satisfied records, ordered by receive time."""
    pairs = [(r.sent_at_ms, r.received_at_ms) for r in records if r.satisfied]
    pairs.sort(key=lambda p: p[1])
    return pairs


def compute_jitter(pairs: Sequence[Tuple[float, float]]) -> Optional[float]:
    if len(pairs) < 2:
        return None
    a = np.asarray(pairs, dtype=float)
    d = np.diff(a[:, 1]) - np.diff(a[:, 0])
    return float(np.mean(np.abs(d)))


def compute_jitter_smoothed(pairs: Sequence[Tuple[float, float]]) -> Optional[float]:
    """RFC 1889 running estimate ``J += (|D| - J) / 16``."""
    if len(pairs) < 2:
        return None
    j = 0.0
    for (s0, r0), (s1, r1) in zip(pairs, pairs[1:]):
        d = (r1 - r0) - (s1 - s0)
        j += (abs(d) - j) / 16.0
    return j


@dataclass
class SimulationReport:
    strategy: str = ""
    approach: int = 0
    lifetime_ms: int = 0
    nodes: int = 0
    seed: int = 0
    interests_sent: int = 0
    datas_received: int = 0
    isr: float = 0.0
    avg_latency_ms: Optional[float] = None
    avg_jitter_ms: Optional[float] = None
    frames_tx: int = 0
    frames_dropped: int = 0
    duplicates: int = 0

    @classmethod
    def from_records(cls, records: Sequence[SatisfactionRecord], jitter: str = "mean", **labels):
        pairs = arrival_pairs(records)
        jit = compute_jitter_smoothed(pairs) if jitter == "smoothed" else compute_jitter(pairs)
        return cls(interests_sent=sum(r.transmissions for r in records),
                   datas_received=sum(r.satisfied for r in records),
                   isr=compute_isr(records),
                   avg_latency_ms=compute_avg_latency(records),
                   avg_jitter_ms=jit,
                   **labels)

    def row(self) -> Dict[str, object]:
        d = asdict(self)
        return {k: d[k] for k in RUN_COLUMNS}


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(round(v, 9))
    return str(v)


def write_run_csv(reports: Sequence[SimulationReport], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_COLUMNS)
        for r in reports:
            row = r.row()
            w.writerow([format_value(row[c]) for c in RUN_COLUMNS])


@dataclass
class MetricSummary:
    mean: Optional[float]
    ci95: Optional[float]
    n: int


class NotEnoughSeeds(ValueError):
    pass


def mean_ci95(values: Sequence[float]) -> MetricSummary:
    """Mean and Student-t 95 % half-width ``t_{0.975,n-1} * s / sqrt(n)``."""
    vals = [v for v in values if v is not None]
    n = len(vals)
    if n == 0:
        return MetricSummary(None, None, 0)
    mean = float(np.mean(vals))
    if n < 2:
        return MetricSummary(mean, None, n)
    s = float(np.std(vals, ddof=1))
    half = float(stats.t.ppf(0.975, n - 1)) * s / math.sqrt(n)
    return MetricSummary(mean, half, n)


def aggregate(reports: Sequence[SimulationReport]) -> Dict[str, MetricSummary]:
    if len(reports) < 2:
        raise NotEnoughSeeds(f"need at least 2 runs for a confidence interval, got {len(reports)}")
    return {m: mean_ci95([getattr(r, m) for r in reports]) for m in METRIC_COLUMNS}


def aggregate_rows(reports: Sequence[SimulationReport]) -> List[Dict[str, object]]:
    """One row per (strategy, approach, lifetime_ms, nodes) cell."""
    cells: Dict[tuple, List[SimulationReport]] = {}
    for r in reports:
        cells.setdefault(tuple(getattr(r, g) for g in GROUP_COLUMNS), []).append(r)
    rows = []
    for key, group in cells.items():
        row = dict(zip(GROUP_COLUMNS, key))
        row["runs"] = len(group)
        for m, summary in aggregate(group).items():
            row[f"{m}_mean"] = summary.mean
            row[f"{m}_ci95"] = summary.ci95
        rows.append(row)
    return rows


def aggregate_columns() -> List[str]:
    cols = GROUP_COLUMNS + ["runs"]
    for m in METRIC_COLUMNS:
        cols += [f"{m}_mean", f"{m}_ci95"]
    return cols


def write_aggregate_csv(rows: Sequence[Dict[str, object]], path) -> None:
    cols = aggregate_columns()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([format_value(row.get(c)) for c in cols])

"""Vehicle positions over time.

Three models: fixed placement, a table of timestamped trace points (as
exported from SUMO and converted to a flat CSV), and a synthetic
Manhattan street grid. All are immutable once built.

Trace CSV format, one point per line::

    # time_s,node_id,x_m,y_m[,speed_mps]
    0.0,car1,10,20
    1.0,car1,25,20,15.0

``#`` lines are comments and a header line starting with ``time`` is
skipped. A node does not exist before its first point; after its last
point it stays parked there.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

import numpy as np


class TraceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class TracePoint:
    time_s: float
    node_id: Hashable
    x_m: float
    y_m: float
    speed_mps: Optional[float] = None


class MobilityModel:
    """Base interface: position lookup per node id."""

    static = False

    @property
    def node_ids(self) -> List[Hashable]:
        raise NotImplementedError

    def position_at(self, node_id, t_s: float) -> Optional[Tuple[float, float]]:
        raise NotImplementedError

    def positions_at(self, node_ids: Sequence, t_s: float) -> Tuple[np.ndarray, np.ndarray]:
        """Vectorised lookup: ``(xy, present)`` with NaN rows for absent nodes."""
        xy = np.full((len(node_ids), 2), np.nan)
        for i, nid in enumerate(node_ids):
            p = self.position_at(nid, t_s)
            if p is not None:
                xy[i] = p
        return xy, ~np.isnan(xy[:, 0])


class StaticPlacement(MobilityModel):
    static = True

    def __init__(self, positions):
        if isinstance(positions, dict):
            self._pos = {k: (float(x), float(y)) for k, (x, y) in positions.items()}
        else:
            self._pos = {i: (float(x), float(y)) for i, (x, y) in enumerate(positions)}

    @property
    def node_ids(self):
        return list(self._pos)

    def position_at(self, node_id, t_s):
        return self._pos.get(node_id)


class TraceTable(MobilityModel):
    """Piecewise-linear interpolation between per-node trace points."""

    def __init__(self, tracks: Dict[Hashable, Sequence[TracePoint]]):
        self._t: Dict[Hashable, np.ndarray] = {}
        self._x: Dict[Hashable, np.ndarray] = {}
        self._y: Dict[Hashable, np.ndarray] = {}
        self._points: Dict[Hashable, Tuple[TracePoint, ...]] = {}
        for nid, pts in tracks.items():
            pts = tuple(pts)
            times = np.array([p.time_s for p in pts], dtype=float)
            if len(times) > 1 and np.any(np.diff(times) <= 0):
                raise TraceFormatError(f"trace times for node {nid!r} are not strictly increasing")
            self._points[nid] = pts
            self._t[nid] = times
            self._x[nid] = np.array([p.x_m for p in pts], dtype=float)
            self._y[nid] = np.array([p.y_m for p in pts], dtype=float)

    @property
    def node_ids(self):
        return list(self._points)

    def points(self, node_id) -> Tuple[TracePoint, ...]:
        return self._points[node_id]

    def position_at(self, node_id, t_s):
        t = self._t.get(node_id)
        if t is None or len(t) == 0 or t_s < t[0]:
            return None
        return (float(np.interp(t_s, t, self._x[node_id])),
                float(np.interp(t_s, t, self._y[node_id])))

    def to_csv(self, path_or_buf) -> None:
        """Write the model in the flat CSV trace format (exact float repr)."""
        own = isinstance(path_or_buf, (str, os.PathLike))
        fh = open(path_or_buf, "w", newline="", encoding="utf-8") if own else path_or_buf
        try:
            fh.write("# time_s,node_id,x_m,y_m,speed_mps\n")
            rows = sorted((p for pts in self._points.values() for p in pts),
                          key=lambda p: (p.time_s, str(p.node_id)))
            for p in rows:
                speed = "" if p.speed_mps is None else f",{p.speed_mps!r}"
                fh.write(f"{p.time_s!r},{p.node_id},{p.x_m!r},{p.y_m!r}{speed}\n")
        finally:
            if own:
                fh.close()


def load_trace(path) -> TraceTable:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_trace(fh)


def parse_trace(lines: Iterable[str]) -> TraceTable:
    tracks: Dict[str, List[TracePoint]] = {}
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if text.lower().startswith("time"):
            continue
        row = next(csv.reader(io.StringIO(text)))
        if len(row) not in (4, 5):
            raise TraceFormatError(f"line {lineno}: expected 4 or 5 fields, got {len(row)}")
        try:
            t = float(row[0])
            x, y = float(row[2]), float(row[3])
            speed = float(row[4]) if len(row) == 5 and row[4].strip() else None
        except ValueError as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from None
        nid = row[1].strip()
        if not nid or t < 0:
            raise TraceFormatError(f"line {lineno}: bad node id or negative time")
        pts = tracks.setdefault(nid, [])
        if pts and t <= pts[-1].time_s:
            raise TraceFormatError(
                f"line {lineno}: time {t} for node {nid!r} does not increase (previous {pts[-1].time_s})")
        pts.append(TracePoint(t, nid, x, y, speed))
    return TraceTable(tracks)


# ------------------------------------------------------------ Manhattan grid


class ManhattanGrid(TraceTable):
    """Vehicles on a square street grid, turning at random at intersections.

    Streets run every ``extent_m / (streets - 1)`` metres in both
    directions. Each vehicle keeps a constant speed drawn uniformly from
    ``speed_range``; at an intersection it picks uniformly among the
    directions that stay on the grid, excluding a U-turn unless it is the
    only option.
    """

    def __init__(self, node_count: int, seed: int = 0, extent_m: float = 1000.0,
                 streets: int = 5, speed_range: Tuple[float, float] = (12.0, 18.0),
                 horizon_s: float = 200.0, id_prefix: str = "car"):
        if node_count < 1:
            raise ValueError("node_count must be at least 1")
        if streets < 2:
            raise ValueError("need at least two streets per direction")
        self.extent_m = float(extent_m)
        self.streets = streets
        self.block_m = self.extent_m / (streets - 1)
        self.seed = seed
        self.speed_range = speed_range
        rng = np.random.default_rng(seed)
        tracks = {}
        self.speeds: Dict[str, float] = {}
        for i in range(node_count):
            nid = f"{id_prefix}{i}"
            speed = float(rng.uniform(*speed_range))
            self.speeds[nid] = speed
            tracks[nid] = self._drive(nid, speed, horizon_s, rng)
        super().__init__(tracks)

    def _drive(self, nid, speed, horizon_s, rng) -> List[TracePoint]:
        n = self.streets
        b = self.block_m
        # start somewhere along a random block, heading to one of its ends
        horizontal = bool(rng.integers(2))
        line = int(rng.integers(n))
        cell = int(rng.integers(n - 1))
        frac = float(rng.random())
        if horizontal:
            a, c = (cell, line), (cell + 1, line)
        else:
            a, c = (line, cell), (line, cell + 1)
        if rng.integers(2):
            a, c = c, a
        x = a[0] * b + frac * (c[0] - a[0]) * b
        y = a[1] * b + frac * (c[1] - a[1]) * b
        t = 0.0
        pts = [TracePoint(t, nid, x, y, speed)]
        here = c
        heading = (c[0] - a[0], c[1] - a[1])
        while t < horizon_s:
            tx, ty = here[0] * b, here[1] * b
            t += float(np.hypot(tx - x, ty - y)) / speed
            x, y = tx, ty
            if t > pts[-1].time_s:
                pts.append(TracePoint(t, nid, x, y, speed))
            options = [d for d in ((1, 0), (-1, 0), (0, 1), (0, -1))
                       if 0 <= here[0] + d[0] < n and 0 <= here[1] + d[1] < n
                       and d != (-heading[0], -heading[1])]
            if not options:
                options = [(-heading[0], -heading[1])]
            heading = options[int(rng.integers(len(options)))]
            here = (here[0] + heading[0], here[1] + heading[1])
        return pts


def generate_manhattan(node_count: int, seed: int = 0, **kwargs) -> ManhattanGrid:
    return ManhattanGrid(node_count, seed, **kwargs)

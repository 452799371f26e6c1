"""Command-line entry point: ``python -m vndnsim``.

One run when every grid flag has a single value and ``--seeds`` is absent;
otherwise a sweep over strategy x approach x lifetime x nodes x seed.

Exit status: 0 on success, 2 for an invalid configuration or grid, 3 when
an output cannot be written.
"""

from __future__ import annotations

import argparse
import itertools
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import yaml

from . import metrics
from .figures import replay_figures
from .forwarding import STRATEGIES
from .mobility import TraceFormatError
from .scenario import ScenarioConfig, ScenarioError, build_simulator, report_for

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3

DEFAULT_SEEDS = [1, 2, 3, 4, 5]


@dataclass
class SweepGrid:
    strategies: List[str] = field(default_factory=lambda: ["immm"])
    approaches: List[int] = field(default_factory=lambda: [3])
    lifetimes_ms: List[int] = field(default_factory=lambda: [4000])
    node_counts: List[int] = field(default_factory=lambda: [20])
    seeds: List[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))

    def violations(self) -> List[str]:
        out = []
        for name in ("strategies", "approaches", "lifetimes_ms", "node_counts", "seeds"):
            if not getattr(self, name):
                out.append(f"sweep grid: {name} must not be empty")
        return out

    def cells(self, base: ScenarioConfig) -> List[ScenarioConfig]:
        out = []
        for s, a, lt, n, seed in itertools.product(self.strategies, self.approaches, self.lifetimes_ms,
                                                   self.node_counts, self.seeds):
            cfg = base.replace(strategy=s, approach=a, interest_lifetime_ms=lt, seed=seed)
            cfg.mobility.node_count = n
            out.append(cfg)
        return out


class SweepCellError(RuntimeError):
    def __init__(self, cfg: ScenarioConfig, cause: Exception):
        self.cfg = cfg
        super().__init__(f"sweep cell strategy={cfg.strategy} approach={cfg.approach} "
                         f"lifetime_ms={cfg.interest_lifetime_ms} nodes={cfg.mobility.node_count} "
                         f"seed={cfg.seed} failed: {cause}")


def parse_seed_range(text: str) -> List[int]:
    """``"1..5"`` -> [1, 2, 3, 4, 5]; a single integer is also accepted."""
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            return [int(lo)]
        a, b = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None
    return list(range(a, b + 1))


def _int_list(text: str) -> List[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> List[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vndnsim", description=__doc__.splitlines()[0])
    p.add_argument("--config", metavar="PATH", help="YAML scenario file; flags override it")
    p.add_argument("--strategy", type=_str_list, help=f"one or more of {','.join(STRATEGIES)}")
    p.add_argument("--approach", type=_int_list, help="next-hop selection approach(es): 1,2,3")
    p.add_argument("--lifetime-ms", type=_int_list, help="Interest lifetime(s) in ms")
    p.add_argument("--nodes", type=_int_list, help="vehicle count(s) for Manhattan mobility")
    p.add_argument("--seed", type=int, help="seed of a single run")
    p.add_argument("--seeds", type=parse_seed_range, metavar="A..B", help="seed range, makes a sweep")
    p.add_argument("--trace", metavar="PATH", help="mobility trace file (time,node,x,y[,speed])")
    p.add_argument("--out", metavar="DIR", help="output directory (default: current directory)")
    p.add_argument("--event-trace", action="store_true", help="write the per-event log")
    p.add_argument("--replay-figures", action="store_true", help="replay the seven-vehicle walkthrough")
    p.add_argument("--print-effective-config", action="store_true",
                   help="print the configuration after defaults and overrides, then exit")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    return p


def effective_config(args: argparse.Namespace) -> ScenarioConfig:
    cfg = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
    changes = {}
    if args.strategy and len(args.strategy) == 1:
        changes["strategy"] = args.strategy[0]
    if args.approach and len(args.approach) == 1:
        changes["approach"] = args.approach[0]
    if args.lifetime_ms and len(args.lifetime_ms) == 1:
        changes["interest_lifetime_ms"] = args.lifetime_ms[0]
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.event_trace:
        changes["event_trace"] = True
    if args.out:
        changes["out_dir"] = args.out
    cfg = cfg.replace(**changes)
    if args.nodes and len(args.nodes) == 1:
        cfg.mobility.node_count = args.nodes[0]
    if args.trace:
        cfg.mobility.kind = "trace"
        cfg.mobility.trace_path = args.trace
    return cfg


def grid_from_args(args: argparse.Namespace, cfg: ScenarioConfig) -> Optional[SweepGrid]:
    """The sweep grid, or None when the flags describe a single run."""
    multi = any(v is not None and len(v) != 1
                for v in (args.strategy, args.approach, args.lifetime_ms, args.nodes))
    if not multi and args.seeds is None:
        return None
    return SweepGrid(
        strategies=args.strategy or [cfg.strategy],
        approaches=args.approach or [cfg.approach],
        lifetimes_ms=args.lifetime_ms or [cfg.interest_lifetime_ms],
        node_counts=args.nodes or [cfg.mobility.node_count],
        seeds=args.seeds if args.seeds is not None else list(DEFAULT_SEEDS),
    )


# ------------------------------------------------------------ operations


def _simulate(cfg: ScenarioConfig):
    sim = build_simulator(cfg).run()
    return report_for(cfg, sim), sim.trace


def run_single(cfg: ScenarioConfig, out_dir=None) -> metrics.SimulationReport:
    """Run one scenario and write ``run.csv`` (plus ``events.log`` when tracing)."""
    cfg.validate()
    out = Path(out_dir or cfg.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)  # fail before simulating, not after
    report, trace = _simulate(cfg)
    metrics.write_run_csv([report], out / "run.csv")
    if trace is not None:
        (out / "events.log").write_text("\n".join(trace) + "\n", encoding="utf-8")
    return report


def _sweep_cell(cfg: ScenarioConfig) -> metrics.SimulationReport:
    try:
        return _simulate(cfg.replace(event_trace=False))[0]
    except Exception as exc:
        raise SweepCellError(cfg, exc) from exc


def run_sweep(base: ScenarioConfig, grid: SweepGrid, out_dir=None, jobs: int = 1):
    """Run every grid cell; write ``runs.csv`` and ``aggregate.csv``.

    Returns ``(reports, aggregate_rows)``.
    """
    problems = grid.violations()
    cells = grid.cells(base) if not problems else []
    for cfg in cells:
        problems += [v for v in cfg.violations() if v not in problems]
    if problems:
        raise ScenarioError(problems)
    if len(grid.seeds) < 2:
        raise ScenarioError(["sweep needs at least two seeds for a confidence interval"])
    out = Path(out_dir or base.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_sweep_cell, cells))
    else:
        reports = [_sweep_cell(c) for c in cells]
    rows = metrics.aggregate_rows(reports)
    metrics.write_run_csv(reports, out / "runs.csv")
    metrics.write_aggregate_csv(rows, out / "aggregate.csv")
    return reports, rows


def _replay(approach: int) -> int:
    results = replay_figures(approach=approach)
    for fig, (ok, msg) in results.items():
        print(f"{fig}: {'PASS' if ok else 'FAIL'} {msg}")
    return EXIT_OK if all(ok for ok, _ in results.values()) else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = effective_config(args)
        if args.print_effective_config:
            sys.stdout.write(cfg.dump())
            return EXIT_OK
        if args.replay_figures:
            return _replay(cfg.approach)
        grid = grid_from_args(args, cfg)
        if grid is None:
            report = run_single(cfg)
            row = report.row()
            print(" ".join(f"{k}={metrics.format_value(row[k])}" for k in metrics.RUN_COLUMNS))
        else:
            reports, rows = run_sweep(cfg, grid, jobs=args.jobs)
            print(f"{len(reports)} runs, {len(rows)} aggregate rows")
    except ScenarioError as exc:
        for v in exc.violations:
            print(f"error: {v}", file=sys.stderr)
        return EXIT_INVALID
    except (TraceFormatError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SweepCellError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

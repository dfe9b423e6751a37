"""Monte-Carlo experiment runner and detection metrics.

One replication draws ``m`` in-control graphs followed by ``phase2_len``
post-change graphs, fits every monitor on the former and streams the latter
through them.  The run length of a monitor is the 1-based index of its
first Phase II signal.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import community
from .generator import SCENARIOS, TWO_COMMUNITY_SCENARIOS, NodeConfiguration, generate_sequence, scenario_catalog
from .monitors import ALL_MONITORS, MONITOR_NAMES, MonitorFitError, make_monitor

log = logging.getLogger(__name__)

CSV_HEADER = (
    "scenario",
    "n",
    "alpha",
    "node_config",
    "known_labels",
    "monitor_id",
    "monitor_name",
    "replications",
    "detections",
    "detection_rate",
    "ced",
    "classification",
)

GOOD_RATE = 0.99
GOOD_CED = 10.0
MODERATE_RATE = 0.75
MODERATE_CED = (10.0, 30.0)
POOR_RATE = 0.25


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    n: int = 40
    alpha: float = 1.0
    node_config: str | None = None
    m: int = 200
    phase2_len: int = 50
    d: int = 50
    replications: int = 1000
    monitors: tuple[int, ...] = ALL_MONITORS
    known_labels: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.node_config is not None:
            object.__setattr__(self, "node_config", str(NodeConfiguration.parse(self.node_config)))
        elif self.scenario in TWO_COMMUNITY_SCENARIOS:
            object.__setattr__(self, "node_config", "50-50")
        object.__setattr__(self, "monitors", tuple(int(i) for i in self.monitors))
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.m < 2:
            raise ValueError("m must be at least 2")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not 1 <= self.d <= self.phase2_len:
            raise ValueError("need 1 <= d <= phase2_len")
        if not self.monitors or any(i not in ALL_MONITORS for i in self.monitors):
            raise ValueError(f"monitor ids must be in 1..15, got {self.monitors}")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["monitors"] = list(self.monitors)
        return out

    @property
    def cell_key(self) -> tuple:
        return (self.scenario, self.n, self.alpha, self.node_config or "", self.known_labels)


@dataclass(frozen=True)
class RunResult:
    index: int
    run_lengths: dict[int, int | None]  # None means no Phase II signal
    fit_errors: dict[int, str] = field(default_factory=dict)


def replication_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def run_replication(config: ExperimentConfig, index: int) -> RunResult:
    rng = replication_rng(config.seed, index)
    scenario = scenario_catalog(
        config.scenario, config.n, config.alpha, config.node_config, rng, t_star=config.m + 1
    )
    graphs = generate_sequence(scenario, config.m + config.phase2_len, rng)
    phase1, phase2 = graphs[: config.m], graphs[config.m :]

    base = scenario.baseline.params
    if base.k == 1 or config.known_labels:
        labels = base.labels
    else:
        labels = community.regularized_spectral(community.average_graph(phase1), base.k, rng)

    run_lengths: dict[int, int | None] = {}
    fit_errors: dict[int, str] = {}
    active = {}
    for mid in config.monitors:
        run_lengths[mid] = None
        monitor = make_monitor(mid, labels)
        try:
            monitor.fit(phase1)
        except (MonitorFitError, np.linalg.LinAlgError) as exc:
            fit_errors[mid] = str(exc)
            continue
        active[mid] = monitor

    for t, g in enumerate(phase2, start=1):
        if not active:
            break
        for mid in [mid for mid, mon in active.items() if mon.update(g)]:
            run_lengths[mid] = t
            del active[mid]
    return RunResult(index=index, run_lengths=run_lengths, fit_errors=fit_errors)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def _detected(run_lengths: Iterable[int | None], d: int) -> list[int]:
    return [rl for rl in run_lengths if rl is not None and 1 <= rl <= d]


def detection_rate(run_lengths: Sequence[int | None], d: int) -> float:
    if len(run_lengths) == 0:
        raise ValueError("no replications")
    return len(_detected(run_lengths, d)) / len(run_lengths)


def ced(run_lengths: Sequence[int | None], d: int) -> float | None:
    """Conditional expected delay; None when nothing was detected."""
    hits = _detected(run_lengths, d)
    return sum(hits) / len(hits) if hits else None


def classify(rate: float, delay: float | None) -> str:
    if delay is None:
        return "poor" if rate <= POOR_RATE else "unclassified"
    if rate >= GOOD_RATE and delay < GOOD_CED:
        return "good"
    if rate >= MODERATE_RATE and MODERATE_CED[0] <= delay <= MODERATE_CED[1]:
        return "moderate"
    if rate <= POOR_RATE:
        return "poor"
    return "unclassified"


@dataclass(frozen=True)
class MetricsSummary:
    config: ExperimentConfig
    monitor_id: int
    replications: int
    detections: int
    detection_rate: float
    ced: float | None
    classification: str
    fit_errors: int = 0

    @property
    def monitor_name(self) -> str:
        return MONITOR_NAMES[self.monitor_id]


@dataclass
class CellResult:
    """All replications run so far for one experiment configuration."""

    config: ExperimentConfig
    results: list[RunResult] = field(default_factory=list)

    def merge(self, other: CellResult) -> CellResult:
        if other.config != self.config:
            raise ValueError("cannot merge results of different configurations")
        by_index = {r.index: r for r in self.results}
        by_index.update({r.index: r for r in other.results})
        return CellResult(self.config, [by_index[i] for i in sorted(by_index)])

    def run_lengths(self, monitor_id: int) -> list[int | None]:
        return [r.run_lengths[monitor_id] for r in sorted(self.results, key=lambda r: r.index)]

    def summaries(self) -> list[MetricsSummary]:
        d = self.config.d
        out = []
        for mid in self.config.monitors:
            rls = self.run_lengths(mid)
            rate = detection_rate(rls, d)
            delay = ced(rls, d)
            out.append(
                MetricsSummary(
                    config=self.config,
                    monitor_id=mid,
                    replications=len(rls),
                    detections=len(_detected(rls, d)),
                    detection_rate=rate,
                    ced=delay,
                    classification=classify(rate, delay),
                    fit_errors=sum(mid in r.fit_errors for r in self.results),
                )
            )
        return out

    def summary(self, monitor_id: int) -> MetricsSummary:
        return next(s for s in self.summaries() if s.monitor_id == monitor_id)


def _run_job(job: tuple[ExperimentConfig, int]) -> RunResult:
    return run_replication(*job)


def run_grid(
    configs: Sequence[ExperimentConfig],
    threads: int = 1,
    progress: Callable[[int, int], None] | None = None,
) -> list[CellResult]:
    """Run every replication of every configuration.

    Replications are independent and seeded from (seed, index), so the
    output does not depend on ``threads`` or on completion order.
    """
    jobs = [(cfg, i) for cfg in configs for i in range(cfg.replications)]
    total = len(jobs)
    if threads <= 1:
        outputs = []
        for done, job in enumerate(jobs, start=1):
            outputs.append(_run_job(job))
            if progress:
                progress(done, total)
    else:
        chunk = max(1, min(16, total // (threads * 8) or 1))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outputs = []
            for done, res in enumerate(pool.map(_run_job, jobs, chunksize=chunk), start=1):
                outputs.append(res)
                if progress:
                    progress(done, total)
    cells = []
    pos = 0
    for cfg in configs:
        chunk_results = outputs[pos : pos + cfg.replications]
        pos += cfg.replications
        cells.append(CellResult(cfg, sorted(chunk_results, key=lambda r: r.index)))
    return cells


# ---------------------------------------------------------------------------
# result files
# ---------------------------------------------------------------------------

def _fmt(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.6g}"


def summary_rows(cells: Sequence[CellResult]) -> list[dict[str, str]]:
    rows = []
    for cell in cells:
        cfg = cell.config
        for s in cell.summaries():
            rows.append(
                {
                    "scenario": cfg.scenario,
                    "n": str(cfg.n),
                    "alpha": _fmt(float(cfg.alpha)),
                    "node_config": cfg.node_config or "",
                    "known_labels": str(cfg.known_labels).lower(),
                    "monitor_id": str(s.monitor_id),
                    "monitor_name": s.monitor_name,
                    "replications": str(s.replications),
                    "detections": str(s.detections),
                    "detection_rate": _fmt(s.detection_rate),
                    "ced": _fmt(s.ced),
                    "classification": s.classification,
                }
            )
    return rows


def write_results(
    cells: Sequence[CellResult], out_dir: Path | str, effective_config: dict | None = None
) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "results.csv"
    json_path = out_dir / "results.json"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER, lineterminator="\n")
        writer.writeheader()
        writer.writerows(summary_rows(cells))
    sidecar = {
        "config": effective_config,
        "cells": [
            {
                "config": cell.config.to_dict(),
                "indices": [r.index for r in sorted(cell.results, key=lambda r: r.index)],
                "run_lengths": {str(mid): cell.run_lengths(mid) for mid in cell.config.monitors},
                "fit_errors": {
                    str(mid): [r.index for r in cell.results if mid in r.fit_errors]
                    for mid in cell.config.monitors
                },
            }
            for cell in cells
        ],
    }
    json_path.write_text(json.dumps(sidecar, indent=1) + "\n", encoding="utf-8")
    return csv_path, json_path


def load_cells(json_path: Path | str) -> list[CellResult]:
    """Rebuild cell results from a JSON sidecar's raw run-length log."""
    data = json.loads(Path(json_path).read_text(encoding="utf-8"))
    cells = []
    for entry in data["cells"]:
        cfg_dict = dict(entry["config"])
        cfg_dict["monitors"] = tuple(cfg_dict["monitors"])
        cfg = ExperimentConfig(**cfg_dict)
        rls = {int(k): v for k, v in entry["run_lengths"].items()}
        errs = {int(k): set(v) for k, v in entry.get("fit_errors", {}).items()}
        indices = entry.get("indices") or list(range(len(next(iter(rls.values())))))
        results = [
            RunResult(
                index=idx,
                run_lengths={mid: rls[mid][pos] for mid in cfg.monitors},
                fit_errors={mid: "fit error" for mid in cfg.monitors if idx in errs.get(mid, ())},
            )
            for pos, idx in enumerate(indices)
        ]
        cells.append(CellResult(cfg, results))
    return cells

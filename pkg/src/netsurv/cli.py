"""Command-line entry point: ``run``, ``list`` and ``report``.

Exit codes: 0 success, 1 runtime error, 2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

from .generator import ONE_COMMUNITY_SCENARIOS, SCENARIO_DESCRIPTIONS, SCENARIOS, TWO_COMMUNITY_SCENARIOS, NodeConfiguration
from .harness import CSV_HEADER, ExperimentConfig, classify, run_grid, write_results
from .monitors import ALL_MONITORS, MONITOR_DESCRIPTIONS, MONITOR_NAMES

log = logging.getLogger("netsurv")

NODE_CONFIGS = ("50-50", "25-75", "10-90")

DEFAULT_CONFIG = {
    "scenarios": list(SCENARIOS),
    "sizes": [40, 100],
    "alphas": [0.5, 1.0],
    "node_configs": list(NODE_CONFIGS),
    "known_labels": True,
    "m": 200,
    "phase2_len": 50,
    "d": 50,
    "replications": 200,
    "monitors": list(ALL_MONITORS),
    "seed": 0,
    "out": "results",
    "threads": None,
}

SYMBOLS = {"good": "✓✓", "moderate": "✓", "poor": "×", "unclassified": "·"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("true", "1", "yes"):
        return True
    if value in ("false", "0", "no"):
        return False
    raise ConfigError(f"expected true or false, got {text!r}")


def parse_monitor_ids(text) -> list[int]:
    """``"1-12,14"`` style lists; a JSON list of ints is accepted as-is."""
    if isinstance(text, (list, tuple)):
        parts = [str(x) for x in text]
    else:
        parts = [p for p in str(text).split(",") if p.strip()]
    ids: list[int] = []
    try:
        for part in parts:
            lo, _, hi = part.strip().partition("-")
            ids.extend(range(int(lo), int(hi) + 1) if hi else [int(lo)])
    except ValueError:
        raise ConfigError(f"bad monitor list {text!r}") from None
    bad = [i for i in ids if i not in ALL_MONITORS]
    if bad or not ids:
        raise ConfigError(f"monitor ids must be in 1..15, got {ids}")
    return sorted(set(ids))


def load_config(path: str | None) -> dict:
    cfg = dict(DEFAULT_CONFIG)
    if path is None:
        return cfg
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    if isinstance(data, dict) and "cells" in data and "config" in data:
        data = data["config"]  # a results sidecar carries its effective config
    if not isinstance(data, dict):
        raise ConfigError(f"config {p} must be a JSON object")
    unknown = sorted(set(data) - set(DEFAULT_CONFIG))
    if unknown:
        raise ConfigError(f"unknown config keys in {p}: {', '.join(unknown)}")
    cfg.update(data)
    return cfg


def apply_overrides(cfg: dict, args: argparse.Namespace) -> dict:
    cfg = dict(cfg)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.reps is not None:
        cfg["replications"] = args.reps
    if args.threads is not None:
        cfg["threads"] = args.threads
    if args.out is not None:
        cfg["out"] = args.out
    if args.scenario is not None:
        cfg["scenarios"] = [args.scenario]
    if args.n is not None:
        cfg["sizes"] = [args.n]
    if args.alpha is not None:
        cfg["alphas"] = [args.alpha]
    if args.node_config is not None:
        cfg["node_configs"] = [args.node_config]
    if args.known_labels is not None:
        cfg["known_labels"] = args.known_labels
    if args.monitors is not None:
        cfg["monitors"] = args.monitors
    return normalize_config(cfg)


def normalize_config(cfg: dict) -> dict:
    out = dict(cfg)
    try:
        for key in ("scenarios", "sizes", "alphas", "node_configs"):
            if not isinstance(out[key], list) or not out[key]:
                raise ConfigError(f"{key} must be a non-empty list")
        bad = [s for s in out["scenarios"] if s not in SCENARIOS]
        if bad:
            raise ConfigError(f"unknown scenarios {bad}; see `list scenarios`")
        out["sizes"] = [int(n) for n in out["sizes"]]
        out["alphas"] = [float(a) for a in out["alphas"]]
        out["node_configs"] = [str(NodeConfiguration.parse(c)) for c in out["node_configs"]]
        out["known_labels"] = parse_bool(out["known_labels"])
        out["monitors"] = parse_monitor_ids(out["monitors"])
        for key in ("m", "phase2_len", "d", "replications", "seed"):
            out[key] = int(out[key])
        if out["seed"] < 0:
            raise ConfigError("seed must be non-negative")
        if out["threads"] is not None:
            out["threads"] = int(out["threads"])
            if out["threads"] < 1:
                raise ConfigError("threads must be at least 1")
        out["out"] = str(out["out"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return out


def expand_grid(cfg: dict) -> list[ExperimentConfig]:
    common = dict(
        m=cfg["m"],
        phase2_len=cfg["phase2_len"],
        d=cfg["d"],
        replications=cfg["replications"],
        monitors=tuple(cfg["monitors"]),
        known_labels=cfg["known_labels"],
        seed=cfg["seed"],
    )
    configs = []
    try:
        for scenario in cfg["scenarios"]:
            node_configs = cfg["node_configs"] if scenario in TWO_COMMUNITY_SCENARIOS else [None]
            for n in cfg["sizes"]:
                for alpha in cfg["alphas"]:
                    for nc in node_configs:
                        configs.append(ExperimentConfig(scenario, n, alpha, nc, **common))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return configs


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _progress(stream):
    start = time.monotonic()
    state = {"last": -1.0}

    def report(done: int, total: int) -> None:
        now = time.monotonic()
        if done == total or now - state["last"] >= 2.0:
            state["last"] = now
            print(f"\r{done}/{total} replications  {now - start:6.1f}s", end="", file=stream, flush=True)
            if done == total:
                print(file=stream)

    return report


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = apply_overrides(load_config(args.config), args)
        configs = expand_grid(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    threads = cfg["threads"] or os.cpu_count() or 1
    print(f"{len(configs)} cells x {cfg['replications']} replications on {threads} workers", file=sys.stderr)
    try:
        cells = run_grid(configs, threads=threads, progress=_progress(sys.stderr))
        csv_path, json_path = write_results(cells, cfg["out"], cfg)
    except Exception as exc:  # noqa: BLE001 - top-level reporting
        log.debug("run failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {csv_path} and {json_path}", file=sys.stderr)
    return 0


def cmd_list(args: argparse.Namespace) -> int:
    if args.what == "scenarios":
        for name in SCENARIOS:
            k = 1 if name in ONE_COMMUNITY_SCENARIOS else 2
            print(f"{name:<12} k={k}  {SCENARIO_DESCRIPTIONS[name]}")
    else:
        for mid in ALL_MONITORS:
            print(f"{mid:>2}  {MONITOR_NAMES[mid]:<24} {MONITOR_DESCRIPTIONS[mid]}")
    return 0


def read_results(path: Path) -> list[dict[str, str]]:
    if path.is_dir():
        path = path / "results.csv"
    with path.open(newline="", encoding="utf-8") as fh:
        text = fh.read()
    if not text.strip():
        return []
    reader = csv.DictReader(text.splitlines())
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
    rows = list(reader)
    for i, row in enumerate(rows, start=2):
        rate = float(row["detection_rate"])
        delay = float(row["ced"]) if row["ced"] else None
        if classify(rate, delay) != row["classification"]:
            raise ValueError(f"{path}:{i}: classification {row['classification']!r} does not match rate and CED")
    return rows


def render_grid(rows: list[dict[str, str]]) -> str:
    cells: dict[tuple, dict[int, str]] = {}
    for row in rows:
        key = (row["scenario"], row["n"], row["alpha"], row["node_config"], row["known_labels"])
        cells.setdefault(key, {})[int(row["monitor_id"])] = SYMBOLS[row["classification"]]
    label_width = max([len(" ".join(filter(None, k))) for k in cells] + [len("cell")])
    header = "cell".ljust(label_width) + " " + " ".join(f"{mid:>3}" for mid in ALL_MONITORS)
    lines = [header]
    order = {name: i for i, name in enumerate(SCENARIOS)}
    for key in sorted(cells, key=lambda k: (order.get(k[0], 99), int(k[1]), float(k[2]), k[3], k[4])):
        scenario, n, alpha, nc, known = key
        label = " ".join(filter(None, [scenario, f"n={n}", f"a={alpha}", nc, "" if known == "true" else "est"]))
        marks = " ".join(f"{cells[key].get(mid, ''):>3}" for mid in ALL_MONITORS)
        lines.append(label.ljust(label_width) + " " + marks)
    return "\n".join(lines)


def cmd_report(args: argparse.Namespace) -> int:
    try:
        rows = read_results(Path(args.path))
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(render_grid(rows))
    print("✓✓ good   ✓ moderate   × poor   · unclassified")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netsurv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment grid and write results.csv / results.json")
    run.add_argument("--config", help="JSON config file or a previous results.json")
    run.add_argument("--seed", type=int, help="master seed (default 0)")
    run.add_argument("--reps", type=int, help="replications per cell (default 200)")
    run.add_argument("--threads", type=int, help="worker processes (default: CPU count)")
    run.add_argument("--out", help="output directory (default ./results)")
    run.add_argument("--scenario", choices=SCENARIOS)
    run.add_argument("--n", type=int, choices=(40, 100))
    run.add_argument("--alpha", type=float, choices=(0.5, 1.0))
    run.add_argument("--node-config", choices=NODE_CONFIGS)
    run.add_argument("--known-labels", type=_bool_arg)
    run.add_argument("--monitors", type=_monitor_arg, help="ids such as 1-12,14")
    run.set_defaults(func=cmd_run)

    lst = sub.add_parser("list", help="list scenarios or monitors")
    lst.add_argument("what", choices=("scenarios", "monitors"))
    lst.set_defaults(func=cmd_list)

    rep = sub.add_parser("report", help="print a classification grid from results.csv")
    rep.add_argument("path")
    rep.set_defaults(func=cmd_report)
    return parser


def _bool_arg(text: str) -> bool:
    try:
        return parse_bool(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _monitor_arg(text: str) -> list[int]:
    try:
        return parse_monitor_ids(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

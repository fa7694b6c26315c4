"""Run-grid orchestration, CSV/JSON result files and the ``eonsim`` command line."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path as FsPath
from typing import Sequence

from eonsim.config import ConfigError, SimConfig, parse_config
from eonsim.engine import build_agent, run_episodes, standard_error
from eonsim.net_model import TopologyError, load_topology, neighbors, resolve_topology_path
from eonsim.spectrum import SpectrumError

logger = logging.getLogger(__name__)

OUTPUT_ENV = "EONSIM_OUTPUT_DIR"
RESULT_FIELDS = ("erlang", "blocking", "algorithm", "seed_count", "cores", "max_segments", "blocking_stderr")
EPISODE_FIELDS = ("erlang", "blocking", "episode", "algorithm", "seed_count", "cores", "max_segments", "blocking_stderr")
RUN_FIELDS = (
    "erlang", "blocking", "algorithm", "seed_index", "seed", "episode",
    "total_requests", "blocked", "no_route", "no_spectrum", "xt_threshold",
)


@dataclass(frozen=True)
class ResultRow:
    erlang: float
    blocking: float
    algorithm: str
    seed_count: int
    cores: int
    max_segments: int
    blocking_stderr: float = 0.0


@dataclass(frozen=True)
class EpisodeRow:
    erlang: float
    blocking: float
    episode: int
    algorithm: str
    seed_count: int
    cores: int
    max_segments: int
    blocking_stderr: float = 0.0


@dataclass(frozen=True)
class RunRecord:
    erlang: float
    blocking: float
    algorithm: str
    seed_index: int
    seed: int
    episode: int
    total_requests: int
    blocked: int
    no_route: int
    no_spectrum: int
    xt_threshold: int


@dataclass
class GridResult:
    rows: list[ResultRow]
    episodes: list[EpisodeRow]
    runs: list[RunRecord]


class RunAbort(RuntimeError):
    """A single run failed an internal consistency check."""


def _run_one(job: tuple[SimConfig, float, int]) -> list[RunRecord]:
    cfg, erlang, seed_index = job
    try:
        topo = load_topology(resolve_topology_path(cfg.topology), cfg.cores, cfg.slots_per_core)
        run_cfg = cfg.run_config(erlang, seed_index)
        series = run_episodes(run_cfg, topo, build_agent(run_cfg))
    except SpectrumError as exc:
        raise RunAbort(f"run aborted (algorithm={cfg.name}, erlang={erlang:g}, seed_index={seed_index}): {exc}") from exc
    return [
        RunRecord(
            erlang, s.blocking, cfg.name, seed_index, run_cfg.traffic.seed, ep, s.total_requests, s.blocked,
            s.blocked_by_reason["no_route"], s.blocked_by_reason["no_spectrum"], s.blocked_by_reason["xt_threshold"],
        )
        for ep, s in enumerate(series)
    ]


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def run_grid(config: SimConfig, jobs: int = 1) -> GridResult:
    """Execute every (variant, load, seed) run and aggregate over seeds.

    Output ordering depends only on run coordinates, never on worker timing.
    """
    variants = config.expand_variants()
    work = [(v, e, s) for v in variants for e in v.erlangs for s in range(v.seeds)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(work))) as pool:
            chunks = list(pool.map(_run_one, work))
    else:
        chunks = [_run_one(job) for job in work]
    runs = sorted((r for chunk in chunks for r in chunk), key=lambda r: (r.algorithm, r.erlang, r.seed_index, r.episode))

    by_name = {v.name: v for v in variants}
    rows, episodes = [], []
    groups: dict[tuple[str, float], list[RunRecord]] = {}
    for r in runs:
        groups.setdefault((r.algorithm, r.erlang), []).append(r)
    for (name, erlang), recs in sorted(groups.items()):
        v = by_name[name]
        last = max(r.episode for r in recs)
        final = [r.blocking for r in recs if r.episode == last]
        rows.append(ResultRow(erlang, _mean(final), name, v.seeds, v.cores, v.max_segments, standard_error(final)))
        if v.agent.kind != "none" or v.agent.episodes > 1:
            for ep in range(last + 1):
                bps = [r.blocking for r in recs if r.episode == ep]
                episodes.append(EpisodeRow(erlang, _mean(bps), ep, name, v.seeds, v.cores, v.max_segments, standard_error(bps)))
    return GridResult(rows, episodes, runs)


def format_value(value) -> str | int | float:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isfinite(value) and value == int(value) and abs(value) < 1e15:
            return str(int(value))
        return format(value, ".10g")
    return str(value)


def _json_value(value):
    if isinstance(value, float):
        return float(format(value, ".10g"))
    return value


def _write_table(records: Sequence, fields: Sequence[str], stem: FsPath, formats: Sequence[str]) -> list[FsPath]:
    written = []
    if "csv" in formats:
        path = stem.with_suffix(".csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(fields)
            for rec in records:
                d = asdict(rec)
                writer.writerow([format_value(d[f]) for f in fields])
        written.append(path)
    if "json" in formats:
        path = stem.with_suffix(".json")
        payload = [{f: _json_value(asdict(rec)[f]) for f in fields} for rec in records]
        path.write_text(json.dumps(payload, indent=2) + "\n")
        written.append(path)
    return written


def write_results(rows: Sequence[ResultRow], out_dir: str | FsPath, formats: Sequence[str] = ("csv", "json"), name: str = "results") -> list[FsPath]:
    """Write aggregated rows as ``<name>.csv`` / ``<name>.json``; the first columns are ``erlang,blocking``."""
    out = FsPath(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    if rows and isinstance(rows[0], EpisodeRow):
        fields = EPISODE_FIELDS
    elif rows and isinstance(rows[0], RunRecord):
        fields = RUN_FIELDS
    else:
        fields = RESULT_FIELDS
    return _write_table(rows, fields, out / name, formats)


def write_grid(result: GridResult, config: SimConfig, out_dir: str | FsPath, formats: Sequence[str]) -> list[FsPath]:
    out = FsPath(out_dir)
    files = write_results(result.rows, out, formats, "results")
    if result.episodes:
        files += _write_table(result.episodes, EPISODE_FIELDS, out / "episodes", formats)
    files += _write_table(result.runs, RUN_FIELDS, out / "runs", formats)
    echo = out / "config.json"
    echo.write_text(json.dumps(config.to_dict(), indent=2) + "\n")
    files.append(echo)
    return files


def read_csv_rows(path: str | FsPath) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- command line ------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eonsim", description="Multi-core elastic optical network simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run every (variant, load, seed) of a config")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--erlangs", type=float, nargs="+", help="override traffic.erlangs (Erlang per core)")
    run_p.add_argument("--seeds", type=int, help="override traffic.seeds")
    run_p.add_argument("--out", help=f"output directory (beats ${OUTPUT_ENV} and output.dir)")
    run_p.add_argument("--format", help="comma-separated subset of csv,json")
    run_p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    val_p = sub.add_parser("validate", help="check a config and print it fully resolved")
    val_p.add_argument("--config", required=True)

    topo_p = sub.add_parser("topology-info", help="summarize a topology file")
    topo_p.add_argument("path")
    return parser


def _apply_overrides(cfg: SimConfig, args) -> SimConfig:
    raw = cfg.to_dict()
    if args.erlangs:
        raw["traffic"]["erlangs"] = list(args.erlangs)
    if args.seeds is not None:
        raw["traffic"]["seeds"] = args.seeds
    out_dir = args.out or os.environ.get(OUTPUT_ENV)
    if out_dir:
        raw["output"]["dir"] = out_dir
    if args.format:
        raw["output"]["formats"] = [f.strip() for f in args.format.split(",") if f.strip()]
    from eonsim.config import from_dict

    return from_dict(raw)


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)

    if args.command == "topology-info":
        try:
            topo = load_topology(resolve_topology_path(args.path))
        except TopologyError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        total = sum(l.length_km for l in topo.links)
        print(f"name: {topo.name}")
        print(f"nodes: {len(topo.nodes)}")
        print(f"links: {len(topo.links)}")
        print(f"connected: {str(topo.is_connected()).lower()}")
        print(f"total_length_km: {format_value(total)}")
        degrees = [len(neighbors(topo, n)) for n in topo.nodes]
        if degrees:
            print(f"degree: min {min(degrees)} max {max(degrees)} mean {sum(degrees) / len(degrees):.3f}")
        return 0

    try:
        cfg = parse_config(args.config)
        if args.command == "run":
            cfg = _apply_overrides(cfg, args)
            if args.jobs < 1:
                raise ConfigError("--jobs", "must be >= 1")
        load_topology(resolve_topology_path(cfg.topology), cfg.cores, cfg.slots_per_core)
    except (ConfigError, TopologyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    if args.command == "validate":
        print(json.dumps(cfg.to_dict(), indent=2))
        return 0

    try:
        result = run_grid(cfg, args.jobs)
    except RunAbort as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        files = write_grid(result, cfg, cfg.output_dir, cfg.formats)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for row in result.rows:
        print(f"{row.algorithm:>32}  erlang={format_value(row.erlang):>8}  blocking={format_value(row.blocking)}")
    print(f"wrote {len(files)} files to {cfg.output_dir}")
    return 0

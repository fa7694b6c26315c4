"""Experiment configuration: JSON schema, defaults, validation.

Every key is validated and unknown keys are rejected; error messages name
the offending key with its dotted path (e.g. ``agent.epsilon``).
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Any

from eonsim.crosstalk import CrosstalkParams
from eonsim.engine import RunConfig
from eonsim.learning import AgentConfig
from eonsim.routing import RoutePolicy
from eonsim.slicing import SliceConfig
from eonsim.spectrum import DEFAULT_MODULATIONS, FitPolicy, Modulation
from eonsim.traffic import DEFAULT_BANDWIDTHS, TrafficConfig, derive_seed


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


DEFAULTS: dict[str, Any] = {
    "name": None,
    "topology": None,
    "cores": 4,
    "slots_per_core": 320,
    "slot_width_ghz": 12.5,
    "guard_slots": 0,
    "routing": {"kind": "ksp", "k": 3, "alpha": 0.0, "weight": "km"},
    "allocation": "first_fit",
    "core_order": "index",
    "h": 2e-5,
    "xt_threshold": 1e-6,
    "xt_check": False,
    "max_segments": 1,
    "modulation_table": [
        {"name": m.name, "bits_per_symbol": m.bits_per_symbol, "reach_km": m.reach_km} for m in DEFAULT_MODULATIONS
    ],
    "traffic": {
        "erlangs": None,
        "arrival_rate": None,
        "mean_holding": 1.0,
        "num_requests": 10_000,
        "bandwidths": [[bw, w] for bw, w in DEFAULT_BANDWIDTHS],
        "seed": 0,
        "seeds": 1,
        "warmup_requests": 0,
    },
    "agent": {
        "kind": "none",
        "alpha": 0.1,
        "gamma": 0.9,
        "epsilon": 0.1,
        "ucb_c": 1.0,
        "episodes": 1,
        "reward_success": 1.0,
        "reward_block": -1.0,
        "max_depth": 5,
    },
    "output": {"dir": "results", "formats": ["csv", "json"]},
    "variants": [],
}

# keys a variant may override (everything that defines an algorithm, nothing about the scenario)
VARIANT_KEYS = {
    "name", "routing", "allocation", "core_order", "h", "xt_threshold", "xt_check",
    "max_segments", "guard_slots", "modulation_table", "agent",
}


@dataclass(frozen=True)
class SimConfig:
    name: str
    topology: str
    cores: int
    slots_per_core: int
    slot_width_ghz: float
    guard_slots: int
    route: RoutePolicy
    allocation: FitPolicy
    core_order: str
    xt: CrosstalkParams
    xt_check: bool
    max_segments: int
    modulations: tuple[Modulation, ...]
    erlangs: tuple[float, ...]
    mean_holding: float
    num_requests: int
    bandwidths: tuple[tuple[float, float], ...]
    seed: int
    seeds: int
    warmup_requests: int
    agent: AgentConfig
    output_dir: str
    formats: tuple[str, ...]
    variants: tuple[dict, ...] = field(default=(), compare=True)

    def to_dict(self) -> dict[str, Any]:
        """Fully materialized config; ``from_dict(to_dict())`` reproduces ``self``."""
        return {
            "name": self.name,
            "topology": self.topology,
            "cores": self.cores,
            "slots_per_core": self.slots_per_core,
            "slot_width_ghz": self.slot_width_ghz,
            "guard_slots": self.guard_slots,
            "routing": {"kind": self.route.kind.value, "k": self.route.k, "alpha": self.route.alpha, "weight": self.route.weight},
            "allocation": self.allocation.value,
            "core_order": self.core_order,
            "h": self.xt.h,
            "xt_threshold": self.xt.xt_threshold,
            "xt_check": self.xt_check,
            "max_segments": self.max_segments,
            "modulation_table": [
                {"name": m.name, "bits_per_symbol": m.bits_per_symbol, "reach_km": m.reach_km} for m in self.modulations
            ],
            "traffic": {
                "erlangs": list(self.erlangs),
                "arrival_rate": None,
                "mean_holding": self.mean_holding,
                "num_requests": self.num_requests,
                "bandwidths": [[bw, w] for bw, w in self.bandwidths],
                "seed": self.seed,
                "seeds": self.seeds,
                "warmup_requests": self.warmup_requests,
            },
            "agent": {
                "kind": self.agent.kind,
                "alpha": self.agent.alpha,
                "gamma": self.agent.gamma,
                "epsilon": self.agent.epsilon,
                "ucb_c": self.agent.ucb_c,
                "episodes": self.agent.episodes,
                "reward_success": self.agent.reward_success,
                "reward_block": self.agent.reward_block,
                "max_depth": self.agent.max_depth,
            },
            "output": {"dir": self.output_dir, "formats": list(self.formats)},
            "variants": [copy.deepcopy(v) for v in self.variants],
        }

    def expand_variants(self) -> list[SimConfig]:
        """One config per algorithm variant; the base config itself when none are listed."""
        if not self.variants:
            return [self]
        base = self.to_dict()
        base["variants"] = []
        base["name"] = None
        out = []
        for i, overrides in enumerate(self.variants):
            merged = _deep_merge(base, overrides)
            out.append(from_dict(merged, where=f"variants[{i}]"))
        return out

    def arrival_rate(self, erlang: float) -> float:
        """Configured loads are Erlang per core; total offered load spreads over all cores."""
        return erlang * self.cores / self.mean_holding

    def run_seed(self, seed_index: int) -> int:
        return derive_seed(self.seed, seed_index)

    def run_config(self, erlang: float, seed_index: int) -> RunConfig:
        traffic = TrafficConfig(
            arrival_rate=self.arrival_rate(erlang),
            mean_holding=self.mean_holding,
            num_requests=self.num_requests,
            bandwidth_choices=self.bandwidths,
            seed=self.run_seed(seed_index),
        )
        return RunConfig(
            traffic=traffic,
            route=self.route,
            allocation=self.allocation,
            core_order=self.core_order,
            slot_width_ghz=self.slot_width_ghz,
            guard_slots=self.guard_slots,
            modulations=self.modulations,
            xt=self.xt,
            slicing=SliceConfig(self.max_segments, self.xt_check),
            agent=self.agent,
            warmup_requests=self.warmup_requests,
        )


def default_name(route: RoutePolicy, allocation: FitPolicy, max_segments: int, xt_check: bool, core_order: str, agent: str) -> str:
    parts = [f"{route.kind.value}{route.num_candidates}"]
    if route.kind.value == "xt_aware":
        parts[0] += f"-a{route.alpha:g}"
    parts.append(("prioritized_" if core_order == "prioritized" else "") + allocation.value)
    parts.append(str(max_segments))
    if xt_check:
        parts.append("xt")
    if agent != "none":
        parts.append(agent)
    return "_".join(parts)


def _deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _check_keys(data: Any, allowed, where: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(where or "config", "must be an object")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}.{unknown[0]}" if where else unknown[0], "unknown key")


def _num(value, key, *, lo=None, hi=None, lo_open=False, hi_open=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(key, f"expected an integer, got {value!r}")
    if lo is not None and (value < lo or (lo_open and value == lo)):
        raise ConfigError(key, f"{value!r} out of range (must be {'>' if lo_open else '>='} {lo})")
    if hi is not None and (value > hi or (hi_open and value == hi)):
        raise ConfigError(key, f"{value!r} out of range (must be {'<' if hi_open else '<='} {hi})")
    return int(value) if integer else float(value)


def _choice(value, key, options):
    if value not in options:
        raise ConfigError(key, f"{value!r} is not one of {sorted(options)}")
    return value


def from_dict(raw: dict, where: str = "") -> SimConfig:
    pre = f"{where}." if where else ""
    _check_keys(raw, DEFAULTS, where)
    if where and raw.get("variants"):
        raise ConfigError(f"{pre}variants", "variants cannot be nested")
    d = _deep_merge(DEFAULTS, raw)
    for block in ("routing", "traffic", "agent", "output"):
        _check_keys(raw.get(block, {}), DEFAULTS[block], f"{pre}{block}")

    if not isinstance(d["topology"], str) or not d["topology"]:
        raise ConfigError(f"{pre}topology", "required: path to a topology file or a bundled sample name")
    cores = _num(d["cores"], f"{pre}cores", integer=True)
    _choice(cores, f"{pre}cores", {1, 4, 7})
    slots = _num(d["slots_per_core"], f"{pre}slots_per_core", lo=1, integer=True)
    width = _num(d["slot_width_ghz"], f"{pre}slot_width_ghz", lo=0, lo_open=True)
    guard = _num(d["guard_slots"], f"{pre}guard_slots", lo=0, integer=True)

    r = d["routing"]
    route = RoutePolicy(
        _choice(r["kind"], f"{pre}routing.kind", {"sp", "ksp", "xt_aware"}),
        _num(r["k"], f"{pre}routing.k", lo=1, integer=True),
        _num(r["alpha"], f"{pre}routing.alpha", lo=0, hi=1),
        _choice(r["weight"], f"{pre}routing.weight", {"km", "hops"}),
    )
    allocation = FitPolicy(_choice(d["allocation"], f"{pre}allocation", {p.value for p in FitPolicy}))
    core_order = _choice(d["core_order"], f"{pre}core_order", {"index", "prioritized"})
    xt = CrosstalkParams(
        _num(d["h"], f"{pre}h", lo=0, lo_open=True),
        _num(d["xt_threshold"], f"{pre}xt_threshold", lo=0),
    )
    if not isinstance(d["xt_check"], bool):
        raise ConfigError(f"{pre}xt_check", "expected true or false")
    max_segments = _num(d["max_segments"], f"{pre}max_segments", lo=1, integer=True)

    table = d["modulation_table"]
    if not isinstance(table, list) or not table:
        raise ConfigError(f"{pre}modulation_table", "expected a nonempty array")
    mods = []
    for i, m in enumerate(table):
        key = f"{pre}modulation_table[{i}]"
        _check_keys(m, {"name", "bits_per_symbol", "reach_km"}, key)
        if set(m) != {"name", "bits_per_symbol", "reach_km"}:
            raise ConfigError(key, "needs name, bits_per_symbol and reach_km")
        mods.append(Modulation(
            str(m["name"]),
            _num(m["bits_per_symbol"], f"{key}.bits_per_symbol", lo=1, integer=True),
            _num(m["reach_km"], f"{key}.reach_km", lo=0, lo_open=True),
        ))
    mods.sort(key=lambda m: -m.bits_per_symbol)

    t = d["traffic"]
    mean_holding = _num(t["mean_holding"], f"{pre}traffic.mean_holding", lo=0, lo_open=True)
    if (t["erlangs"] is None) == (t["arrival_rate"] is None):
        raise ConfigError(f"{pre}traffic.erlangs", "give exactly one of traffic.erlangs or traffic.arrival_rate")
    if t["arrival_rate"] is not None:
        rate = _num(t["arrival_rate"], f"{pre}traffic.arrival_rate", lo=0, lo_open=True)
        erlangs = (rate * mean_holding / cores,)
    else:
        if not isinstance(t["erlangs"], list) or not t["erlangs"]:
            raise ConfigError(f"{pre}traffic.erlangs", "expected a nonempty array")
        erlangs = tuple(_num(e, f"{pre}traffic.erlangs", lo=0, lo_open=True) for e in t["erlangs"])
        if len(set(erlangs)) != len(erlangs):
            raise ConfigError(f"{pre}traffic.erlangs", "duplicate load values")
    num_requests = _num(t["num_requests"], f"{pre}traffic.num_requests", lo=0, integer=True)
    bws = t["bandwidths"]
    if not isinstance(bws, list) or not bws:
        raise ConfigError(f"{pre}traffic.bandwidths", "expected a nonempty array of [gbps, weight] pairs")
    bandwidths = []
    for i, pair in enumerate(bws):
        key = f"{pre}traffic.bandwidths[{i}]"
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError(key, "expected [gbps, weight]")
        bandwidths.append((_num(pair[0], key, lo=0, lo_open=True), _num(pair[1], key, lo=0, lo_open=True)))
    seed = _num(t["seed"], f"{pre}traffic.seed", lo=0, integer=True)
    seeds = _num(t["seeds"], f"{pre}traffic.seeds", lo=1, integer=True)
    warmup = _num(t["warmup_requests"], f"{pre}traffic.warmup_requests", lo=0, integer=True)

    a = d["agent"]
    agent = AgentConfig(
        kind=_choice(a["kind"], f"{pre}agent.kind", set(AgentConfig.KINDS)),
        alpha=_num(a["alpha"], f"{pre}agent.alpha", lo=0, hi=1),
        gamma=_num(a["gamma"], f"{pre}agent.gamma", lo=0, hi=1, hi_open=True),
        epsilon=_num(a["epsilon"], f"{pre}agent.epsilon", lo=0, hi=1),
        ucb_c=_num(a["ucb_c"], f"{pre}agent.ucb_c", lo=0),
        episodes=_num(a["episodes"], f"{pre}agent.episodes", lo=1, integer=True),
        reward_success=_num(a["reward_success"], f"{pre}agent.reward_success"),
        reward_block=_num(a["reward_block"], f"{pre}agent.reward_block"),
        max_depth=_num(a["max_depth"], f"{pre}agent.max_depth", lo=1, integer=True),
    )

    o = d["output"]
    if not isinstance(o["dir"], str) or not o["dir"]:
        raise ConfigError(f"{pre}output.dir", "expected a nonempty string")
    formats = o["formats"]
    if not isinstance(formats, list) or not formats:
        raise ConfigError(f"{pre}output.formats", "expected a nonempty array")
    for f in formats:
        _choice(f, f"{pre}output.formats", {"csv", "json"})

    variants = d["variants"]
    if not isinstance(variants, list):
        raise ConfigError(f"{pre}variants", "expected an array")
    for i, v in enumerate(variants):
        _check_keys(v, VARIANT_KEYS, f"variants[{i}]")

    name = d["name"]
    if name is None:
        name = default_name(route, allocation, max_segments, d["xt_check"], core_order, agent.kind)
    elif not isinstance(name, str) or not name:
        raise ConfigError(f"{pre}name", "expected a nonempty string")

    cfg = SimConfig(
        name=name,
        topology=d["topology"],
        cores=cores,
        slots_per_core=slots,
        slot_width_ghz=width,
        guard_slots=guard,
        route=route,
        allocation=allocation,
        core_order=core_order,
        xt=xt,
        xt_check=d["xt_check"],
        max_segments=max_segments,
        modulations=tuple(mods),
        erlangs=erlangs,
        mean_holding=mean_holding,
        num_requests=num_requests,
        bandwidths=tuple(bandwidths),
        seed=seed,
        seeds=seeds,
        warmup_requests=warmup,
        agent=agent,
        output_dir=o["dir"],
        formats=tuple(formats),
        variants=tuple(copy.deepcopy(v) for v in variants),
    )
    if variants:
        names = [v.name for v in cfg.expand_variants()]
        if len(set(names)) != len(names):
            raise ConfigError("variants", f"variant names must be unique, got {names}")
    return cfg


def parse_config(path: str | FsPath, base_dir: str | FsPath | None = None) -> SimConfig:
    """Read, validate and default-fill a JSON experiment config.

    A relative ``topology`` path is resolved against the config file's
    directory when it exists there.
    """
    p = FsPath(path)
    try:
        raw = json.loads(p.read_text())
    except OSError as exc:
        raise ConfigError("config", f"cannot read {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{p} is not valid JSON: {exc}") from exc
    if isinstance(raw, dict) and isinstance(raw.get("topology"), str):
        candidate = (FsPath(base_dir) if base_dir else p.parent) / raw["topology"]
        if not FsPath(raw["topology"]).is_absolute() and candidate.exists():
            raw["topology"] = str(candidate)
    return from_dict(raw)

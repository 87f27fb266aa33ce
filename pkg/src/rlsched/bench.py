"""Experiment harness: config files, scheduler comparisons, parameter sweeps.

A single JSON config describes topology, workload, schedulers, and training
knobs. Learning schedulers train on the config seeds; every evaluation runs
greedily on seed + EVAL_SEED_OFFSET so no scheduler is scored on the stream
it trained on. Replications could run concurrently (each cell owns its own
simulator and agent); this driver runs them sequentially and aggregates at
the end, which keeps output writing single-writer.

All emitted artifacts are deterministic: repr-formatted floats, LF newlines,
no timestamps. The same config yields byte-identical files.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass
from typing import Sequence

from .agents import (
    GreedyNetworkPolicy,
    GreedyTablePolicy,
    LearningParams,
    LeastLoadedPolicy,
    Policy,
    RandomPolicy,
    RoundRobinPolicy,
    StaticPolicy,
    train_dqn,
    train_tabular,
)
from .errors import ConfigError, InvalidSpec, IoError
from .metrics import (
    CSV_FIELDS,
    UTIL_KEYS,
    EnergyModel,
    MetricsReport,
    build_report,
    cost_efficiency,
    report_csv_row,
    report_to_dict,
)
from .rlenv import (
    DEFAULT_ALPHA,
    DEFAULT_LAMBDA_PER_MS,
    DEFAULT_SLO_MS,
    RewardWeights,
    SchedulingEnv,
)
from .simcore import RESOURCE_DIMS, NetworkModel, ResourceVector, ServiceSpec
from .workload import LoadLevel, ResourceProfile, load_trace, trace_to_arrivals

CONFIG_VERSION = 1
EVAL_SEED_OFFSET = 10**6
SCHEDULER_NAMES = ("static", "round_robin", "least_loaded", "random", "tabular", "dqn")
HOP_LATENCY_VALUES_MS = (10.0, 20.0, 30.0, 40.0, 50.0)
# demand unit for the resource-profile sweep: dominant dim 4x => 2.0 of 4.0 capacity
PROFILE_DEMAND_UNIT = 0.5


# ----- configuration -----


@dataclass
class ExperimentConfig:
    """Parsed and validated experiment description."""

    seeds: list[int]
    schedulers: list[str]
    mode: str
    slo_ms: float
    max_queue: int | None
    specs: list[ServiceSpec]
    network: NetworkModel
    workload_kind: str
    base_rate_per_ms: float | None
    horizon_ms: float | None
    level: LoadLevel | None
    trace_path: str | None
    reward_lambda_per_ms: float
    reward_alpha: float
    params: LearningParams
    episodes: int
    train_horizon_ms: float | None
    max_train_steps: int | None


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _reject_unknown(obj: dict, path: str, allowed) -> None:
    for key in obj:
        if key not in allowed:
            _fail(f"{path}.{key}" if path else key, "unknown field")


def _get(obj: dict, path: str, key: str, required: bool = True, default=None):
    if key not in obj:
        if required:
            _fail(f"{path}.{key}" if path else key, "missing required field")
        return default
    return obj[key]


def _number(val, path: str) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        _fail(path, f"expected a number, got {val!r}")
    return float(val)


def _integer(val, path: str) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        _fail(path, f"expected an integer, got {val!r}")
    return val


def _string(val, path: str) -> str:
    if not isinstance(val, str):
        _fail(path, f"expected a string, got {val!r}")
    return val


def _listval(val, path: str) -> list:
    if not isinstance(val, list):
        _fail(path, f"expected a list, got {val!r}")
    return val


def _resource(obj, path: str) -> ResourceVector:
    if not isinstance(obj, dict):
        _fail(path, f"expected an object, got {obj!r}")
    _reject_unknown(obj, path, RESOURCE_DIMS)
    vals = {dim: _number(obj[dim], f"{path}.{dim}") for dim in obj}
    try:
        return ResourceVector(**vals)
    except InvalidSpec as e:
        _fail(path, str(e))


def _parse_service(obj, path: str) -> ServiceSpec:
    if not isinstance(obj, dict):
        _fail(path, f"expected an object, got {obj!r}")
    allowed = (
        "service_id",
        "replicas",
        "capacity_per_replica",
        "base_service_time_ms",
        "demand_per_request",
        "downstream",
    )
    _reject_unknown(obj, path, allowed)
    sid = _integer(_get(obj, path, "service_id"), f"{path}.service_id")
    replicas = _integer(_get(obj, path, "replicas"), f"{path}.replicas")
    cap = _resource(_get(obj, path, "capacity_per_replica"), f"{path}.capacity_per_replica")
    base = _number(_get(obj, path, "base_service_time_ms"), f"{path}.base_service_time_ms")
    demand = _resource(_get(obj, path, "demand_per_request"), f"{path}.demand_per_request")
    down_raw = _listval(_get(obj, path, "downstream", required=False, default=[]), f"{path}.downstream")
    down = tuple(
        _integer(v, f"{path}.downstream[{i}]") for i, v in enumerate(down_raw)
    )
    try:
        return ServiceSpec(
            service_id=sid,
            replicas=replicas,
            capacity_per_replica=cap,
            base_service_time_ms=base,
            demand_per_request=demand,
            downstream=down,
        )
    except InvalidSpec as e:
        _fail(path, str(e))


def parse_config(obj: dict) -> ExperimentConfig:
    """Validate a config mapping; unknown fields fail with their dotted path."""
    if not isinstance(obj, dict):
        raise ConfigError("config root must be an object")
    top = (
        "version",
        "seeds",
        "schedulers",
        "mode",
        "slo_ms",
        "max_queue",
        "topology",
        "network",
        "workload",
        "reward",
        "agent",
    )
    _reject_unknown(obj, "", top)

    version = _integer(_get(obj, "", "version"), "version")
    if version != CONFIG_VERSION:
        _fail("version", f"expected {CONFIG_VERSION}, got {version}")

    seeds_raw = _listval(_get(obj, "", "seeds"), "seeds")
    if not seeds_raw:
        _fail("seeds", "need at least one seed")
    seeds = [_integer(v, f"seeds[{i}]") for i, v in enumerate(seeds_raw)]
    for i, s in enumerate(seeds):
        if s < 0:
            _fail(f"seeds[{i}]", "seeds must be >= 0")
    if len(set(seeds)) != len(seeds):
        _fail("seeds", "duplicate seed")

    sched_raw = _listval(_get(obj, "", "schedulers"), "schedulers")
    if not sched_raw:
        _fail("schedulers", "need at least one scheduler")
    schedulers = []
    for i, v in enumerate(sched_raw):
        name = _string(v, f"schedulers[{i}]")
        if name not in SCHEDULER_NAMES:
            _fail(f"schedulers[{i}]", f"unknown scheduler {name!r}")
        if name in schedulers:
            _fail(f"schedulers[{i}]", f"duplicate scheduler {name!r}")
        schedulers.append(name)

    mode = _string(_get(obj, "", "mode", required=False, default="routing"), "mode")
    if mode not in ("routing", "allocation"):
        _fail("mode", f"expected 'routing' or 'allocation', got {mode!r}")
    if mode == "allocation":
        for name in schedulers:
            if name in ("round_robin", "least_loaded", "random"):
                _fail("mode", f"scheduler {name!r} needs replica decisions; use routing")

    slo_ms = _number(_get(obj, "", "slo_ms", required=False, default=DEFAULT_SLO_MS), "slo_ms")
    if slo_ms <= 0:
        _fail("slo_ms", "must be positive")

    max_queue = _get(obj, "", "max_queue", required=False, default=64)
    if max_queue is not None:
        max_queue = _integer(max_queue, "max_queue")
        if max_queue < 0:
            _fail("max_queue", "must be >= 0 (or null for unbounded)")

    topo = _get(obj, "", "topology")
    if not isinstance(topo, dict):
        _fail("topology", "expected an object")
    _reject_unknown(topo, "topology", ("services",))
    services_raw = _listval(_get(topo, "topology", "services"), "topology.services")
    if not services_raw:
        _fail("topology.services", "need at least one service")
    specs = [
        _parse_service(svc, f"topology.services[{i}]") for i, svc in enumerate(services_raw)
    ]

    net_obj = _get(obj, "", "network", required=False, default={})
    if not isinstance(net_obj, dict):
        _fail("network", "expected an object")
    _reject_unknown(net_obj, "network", ("per_hop_latency_ms", "jitter_fraction"))
    try:
        network = NetworkModel(
            per_hop_latency_ms=_number(
                net_obj.get("per_hop_latency_ms", 0.0), "network.per_hop_latency_ms"
            ),
            jitter_fraction=_number(
                net_obj.get("jitter_fraction", 0.0), "network.jitter_fraction"
            ),
        )
    except InvalidSpec as e:
        _fail("network", str(e))

    wl = _get(obj, "", "workload")
    if not isinstance(wl, dict):
        _fail("workload", "expected an object")
    kind = _string(_get(wl, "workload", "kind"), "workload.kind")
    base_rate = horizon = level = trace_path = None
    if kind == "poisson":
        _reject_unknown(wl, "workload", ("kind", "base_rate_per_ms", "horizon_ms", "level"))
        base_rate = _number(_get(wl, "workload", "base_rate_per_ms"), "workload.base_rate_per_ms")
        if base_rate <= 0:
            _fail("workload.base_rate_per_ms", "must be positive")
        horizon = _number(_get(wl, "workload", "horizon_ms"), "workload.horizon_ms")
        if horizon <= 0:
            _fail("workload.horizon_ms", "must be positive")
        level_raw = _get(wl, "workload", "level", required=False)
        if level_raw is not None:
            level_str = _string(level_raw, "workload.level")
            try:
                level = LoadLevel(level_str)
            except ValueError:
                names = ", ".join(lv.value for lv in LoadLevel)
                _fail("workload.level", f"expected one of {names}, got {level_str!r}")
    elif kind == "trace":
        _reject_unknown(wl, "workload", ("kind", "path"))
        trace_path = _string(_get(wl, "workload", "path"), "workload.path")
    else:
        _fail("workload.kind", f"expected 'poisson' or 'trace', got {kind!r}")

    rew = _get(obj, "", "reward", required=False, default={})
    if not isinstance(rew, dict):
        _fail("reward", "expected an object")
    _reject_unknown(rew, "reward", ("lambda_per_ms", "alpha"))
    reward_lambda = _number(rew.get("lambda_per_ms", DEFAULT_LAMBDA_PER_MS), "reward.lambda_per_ms")
    reward_alpha = _number(rew.get("alpha", DEFAULT_ALPHA), "reward.alpha")
    if reward_lambda < 0 or reward_alpha < 0:
        _fail("reward", "weights must be >= 0")

    agent = _get(obj, "", "agent", required=False, default={})
    if not isinstance(agent, dict):
        _fail("agent", "expected an object")
    param_fields = (
        "alpha",
        "gamma",
        "epsilon_start",
        "epsilon_end",
        "epsilon_decay_steps",
        "learning_rate",
        "replay_capacity",
        "batch_size",
        "sync_interval",
        "hidden",
    )
    _reject_unknown(
        agent, "agent", param_fields + ("episodes", "train_horizon_ms", "max_train_steps")
    )
    episodes = _integer(agent.get("episodes", 6), "agent.episodes")
    if episodes < 1:
        _fail("agent.episodes", "must be >= 1")
    train_horizon = agent.get("train_horizon_ms")
    if train_horizon is not None:
        train_horizon = _number(train_horizon, "agent.train_horizon_ms")
        if train_horizon <= 0:
            _fail("agent.train_horizon_ms", "must be positive")
    max_train_steps = agent.get("max_train_steps")
    if max_train_steps is not None:
        max_train_steps = _integer(max_train_steps, "agent.max_train_steps")
        if max_train_steps < 1:
            _fail("agent.max_train_steps", "must be >= 1")
    kwargs = {}
    for name in param_fields:
        if name not in agent:
            continue
        path = f"agent.{name}"
        if name == "hidden":
            sizes = _listval(agent[name], path)
            kwargs[name] = tuple(_integer(v, f"{path}[{i}]") for i, v in enumerate(sizes))
            for i, width in enumerate(kwargs[name]):
                if width < 1:
                    _fail(f"{path}[{i}]", "layer width must be >= 1")
        elif name in ("epsilon_decay_steps", "replay_capacity", "batch_size", "sync_interval"):
            kwargs[name] = _integer(agent[name], path)
        else:
            kwargs[name] = _number(agent[name], path)
    try:
        params = LearningParams(**kwargs)
    except InvalidSpec as e:
        _fail("agent", str(e))

    return ExperimentConfig(
        seeds=seeds,
        schedulers=schedulers,
        mode=mode,
        slo_ms=slo_ms,
        max_queue=max_queue,
        specs=specs,
        network=network,
        workload_kind=kind,
        base_rate_per_ms=base_rate,
        horizon_ms=horizon,
        level=level,
        trace_path=trace_path,
        reward_lambda_per_ms=reward_lambda,
        reward_alpha=reward_alpha,
        params=params,
        episodes=episodes,
        train_horizon_ms=train_horizon,
        max_train_steps=max_train_steps,
    )


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise IoError(f"cannot read config {path}: {e}") from e
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    return parse_config(obj)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Round-trippable mapping: parse_config(config_to_dict(cfg)) == cfg."""
    services = []
    for s in cfg.specs:
        services.append(
            {
                "service_id": s.service_id,
                "replicas": s.replicas,
                "capacity_per_replica": dict(
                    zip(RESOURCE_DIMS, s.capacity_per_replica.as_tuple())
                ),
                "base_service_time_ms": s.base_service_time_ms,
                "demand_per_request": dict(
                    zip(RESOURCE_DIMS, s.demand_per_request.as_tuple())
                ),
                "downstream": list(s.downstream),
            }
        )
    if cfg.workload_kind == "poisson":
        workload = {
            "kind": "poisson",
            "base_rate_per_ms": cfg.base_rate_per_ms,
            "horizon_ms": cfg.horizon_ms,
        }
        if cfg.level is not None:
            workload["level"] = cfg.level.value
    else:
        workload = {"kind": "trace", "path": cfg.trace_path}
    agent = {
        "episodes": cfg.episodes,
        "alpha": cfg.params.alpha,
        "gamma": cfg.params.gamma,
        "epsilon_start": cfg.params.epsilon_start,
        "epsilon_end": cfg.params.epsilon_end,
        "epsilon_decay_steps": cfg.params.epsilon_decay_steps,
        "learning_rate": cfg.params.learning_rate,
        "replay_capacity": cfg.params.replay_capacity,
        "batch_size": cfg.params.batch_size,
        "sync_interval": cfg.params.sync_interval,
        "hidden": list(cfg.params.hidden),
    }
    if cfg.train_horizon_ms is not None:
        agent["train_horizon_ms"] = cfg.train_horizon_ms
    if cfg.max_train_steps is not None:
        agent["max_train_steps"] = cfg.max_train_steps
    return {
        "version": CONFIG_VERSION,
        "seeds": list(cfg.seeds),
        "schedulers": list(cfg.schedulers),
        "mode": cfg.mode,
        "slo_ms": cfg.slo_ms,
        "max_queue": cfg.max_queue,
        "topology": {"services": services},
        "network": {
            "per_hop_latency_ms": cfg.network.per_hop_latency_ms,
            "jitter_fraction": cfg.network.jitter_fraction,
        },
        "workload": workload,
        "reward": {"lambda_per_ms": cfg.reward_lambda_per_ms, "alpha": cfg.reward_alpha},
        "agent": agent,
    }


def reference_config_dict() -> dict:
    """Default experiment: a 4-service chain, 3 replicas each, medium load."""
    capacity = {"cpu": 4.0, "memory": 4.0, "storage": 4.0, "network": 4.0}
    demand = {"cpu": 1.0, "memory": 0.5, "storage": 0.25, "network": 0.25}

    def svc(sid: int, base_ms: float, down: list[int]) -> dict:
        return {
            "service_id": sid,
            "replicas": 3,
            "capacity_per_replica": dict(capacity),
            "base_service_time_ms": base_ms,
            "demand_per_request": dict(demand),
            "downstream": down,
        }

    return {
        "version": CONFIG_VERSION,
        "seeds": [1, 2, 3],
        "schedulers": list(SCHEDULER_NAMES),
        "mode": "routing",
        "slo_ms": 250.0,
        "max_queue": 64,
        "topology": {
            "services": [
                svc(0, 8.0, [1]),  # gateway
                svc(1, 10.0, [2]),  # auth
                svc(2, 20.0, [3]),  # logic
                svc(3, 14.0, []),  # store
            ]
        },
        "network": {"per_hop_latency_ms": 5.0, "jitter_fraction": 0.1},
        "workload": {
            "kind": "poisson",
            "base_rate_per_ms": 0.1,
            "horizon_ms": 4000.0,
            "level": "medium",
        },
        "reward": {"lambda_per_ms": 0.01, "alpha": 0.5},
        "agent": {
            "episodes": 60,
            "train_horizon_ms": 2000.0,
            "max_train_steps": 20000,
            "learning_rate": 0.003,
            "epsilon_decay_steps": 15000,
        },
    }


def reference_config() -> ExperimentConfig:
    return parse_config(reference_config_dict())


# ----- running one scheduler -----


def make_env(cfg: ExperimentConfig, base_seed: int, horizon_ms: float | None = None) -> SchedulingEnv:
    n = len(cfg.specs)
    weights = RewardWeights(
        lambdas=(cfg.reward_lambda_per_ms,) * n,
        alphas=(cfg.reward_alpha,) * n,
    )
    common = dict(
        base_seed=base_seed,
        weights=weights,
        mode=cfg.mode,
        slo_ms=cfg.slo_ms,
        max_queue=cfg.max_queue,
    )
    if cfg.workload_kind == "trace":
        arrivals = trace_to_arrivals(load_trace(cfg.trace_path))
        return SchedulingEnv(cfg.specs, cfg.network, arrivals=arrivals, **common)
    return SchedulingEnv(
        cfg.specs,
        cfg.network,
        arrival_rate_per_ms=cfg.base_rate_per_ms,
        horizon_ms=horizon_ms if horizon_ms is not None else cfg.horizon_ms,
        level=cfg.level,
        **common,
    )


class _SeedCycler:
    """Rotates the env base seed through the training seeds, one per episode."""

    def __init__(self, env: SchedulingEnv, seeds: list[int]):
        self.env = env
        self.seeds = list(seeds)

    @property
    def n_actions(self) -> int:
        return self.env.n_actions

    @property
    def n_features(self) -> int:
        return self.env.n_features

    def reset(self, episode: int):
        self.env.base_seed = self.seeds[episode % len(self.seeds)]
        return self.env.reset(episode)

    def step(self, action: int):
        return self.env.step(action)


def build_policy(name: str, cfg: ExperimentConfig) -> Policy:
    """Instantiate a scheduler; learning schedulers train on the config seeds."""
    if name == "static":
        return StaticPolicy()
    if name == "round_robin":
        return RoundRobinPolicy()
    if name == "least_loaded":
        return LeastLoadedPolicy()
    if name == "random":
        return RandomPolicy(cfg.seeds[0])
    if name not in ("tabular", "dqn"):
        raise ConfigError(f"schedulers: unknown scheduler {name!r}")
    env = make_env(cfg, cfg.seeds[0], horizon_ms=cfg.train_horizon_ms)
    cycler = _SeedCycler(env, cfg.seeds)
    if name == "tabular":
        result = train_tabular(
            cycler, cfg.params, cfg.episodes,
            seed=cfg.seeds[0], max_steps=cfg.max_train_steps,
        )
        return GreedyTablePolicy(result.table)
    result = train_dqn(
        cycler, cfg.params, cfg.episodes,
        seed=cfg.seeds[0], max_steps=cfg.max_train_steps,
    )
    return GreedyNetworkPolicy(result.network)


def evaluate_policy(policy: Policy, cfg: ExperimentConfig, seed: int) -> MetricsReport:
    """One greedy evaluation episode on the held-out stream for this seed."""
    env = make_env(cfg, seed + EVAL_SEED_OFFSET)
    policy.reseed(seed)
    obs = env.reset(0)
    while not env.done:
        action = policy.act(obs, env.pending_decision())
        obs, _, _, _ = env.step(action)
    return build_report(env.cluster, cfg.slo_ms, EnergyModel())


# ----- aggregation -----


def _report_values(report: MetricsReport) -> list[float]:
    """Scalar values aligned with CSV_FIELDS."""
    return [
        report.mean_response_ms,
        report.p95_response_ms,
        report.throughput_rps,
        *(report.utilization_pct[k] for k in UTIL_KEYS),
        report.energy_joules,
        report.cost_efficiency_pct,
        report.scheduling_efficiency_pct,
        float(report.offered),
        float(report.completed),
        float(report.rejected),
        float(report.in_flight),
    ]


def mean_report(reports: list[MetricsReport]) -> MetricsReport:
    """Field-wise mean; counts become float means, NaN propagates honestly."""
    n = len(reports)
    util = {k: sum(r.utilization_pct[k] for r in reports) / n for k in UTIL_KEYS}
    return MetricsReport(
        mean_response_ms=sum(r.mean_response_ms for r in reports) / n,
        p95_response_ms=sum(r.p95_response_ms for r in reports) / n,
        throughput_rps=sum(r.throughput_rps for r in reports) / n,
        utilization_pct=util,
        energy_joules=sum(r.energy_joules for r in reports) / n,
        cost_efficiency_pct=sum(r.cost_efficiency_pct for r in reports) / n,
        scheduling_efficiency_pct=sum(r.scheduling_efficiency_pct for r in reports) / n,
        offered=sum(r.offered for r in reports) / n,
        completed=sum(r.completed for r in reports) / n,
        rejected=sum(r.rejected for r in reports) / n,
        in_flight=sum(r.in_flight for r in reports) / n,
    )


def std_fields(reports: list[MetricsReport]) -> dict[str, float]:
    """Sample stddev over seeds per CSV field (0.0 for a single seed)."""
    rows = [_report_values(r) for r in reports]
    n = len(rows)
    out = {}
    for j, field in enumerate(CSV_FIELDS):
        col = [row[j] for row in rows]
        if n < 2:
            out[field] = 0.0
            continue
        m = sum(col) / n
        out[field] = math.sqrt(sum((x - m) ** 2 for x in col) / (n - 1))
    return out


@dataclass
class CompareResult:
    """Per-scheduler evaluation reports plus seed-mean aggregates."""

    config: ExperimentConfig
    schedulers: list[str]
    seeds: list[int]
    per_seed: dict[str, dict[int, MetricsReport]]
    mean: dict[str, MetricsReport]
    std: dict[str, dict[str, float]]


@dataclass
class SweepResult:
    """One axis swept over run_compare cells; one report per (value, scheduler, seed)."""

    config: ExperimentConfig
    axis: str
    values: list[str]
    schedulers: list[str]
    seeds: list[int]
    per_seed: dict[str, dict[str, dict[int, MetricsReport]]]
    mean: dict[str, dict[str, MetricsReport]]
    std: dict[str, dict[str, dict[str, float]]]


def run_compare(
    cfg: ExperimentConfig, policies: dict[str, object] | None = None
) -> CompareResult:
    """Train each learning scheduler once, evaluate everything per seed.

    Cost efficiency is relative within the scheduler set: computed per seed
    across schedulers, then recomputed on the seed-mean reports so the best
    aggregate row scores exactly 100.  Prebuilt policies skip training.
    """
    if policies is None:
        policies = {name: build_policy(name, cfg) for name in cfg.schedulers}
    per_seed: dict[str, dict[int, MetricsReport]] = {name: {} for name in cfg.schedulers}
    for seed in cfg.seeds:
        row = {name: evaluate_policy(policies[name], cfg, seed) for name in cfg.schedulers}
        cost_efficiency(row)
        for name, report in row.items():
            per_seed[name][seed] = report
    mean = {
        name: mean_report([per_seed[name][s] for s in cfg.seeds]) for name in cfg.schedulers
    }
    cost_efficiency(mean)
    std = {name: std_fields([per_seed[name][s] for s in cfg.seeds]) for name in cfg.schedulers}
    return CompareResult(cfg, list(cfg.schedulers), list(cfg.seeds), per_seed, mean, std)


def _sweep(
    cfg: ExperimentConfig,
    axis: str,
    cells: list[tuple[str, ExperimentConfig]],
    policies: dict[str, object] | None = None,
) -> SweepResult:
    values = []
    per_seed = {}
    mean = {}
    std = {}
    for key, cell_cfg in cells:
        cr = run_compare(cell_cfg, policies)
        values.append(key)
        per_seed[key] = cr.per_seed
        mean[key] = cr.mean
        std[key] = cr.std
    return SweepResult(
        cfg, axis, values, list(cfg.schedulers), list(cfg.seeds), per_seed, mean, std
    )


def sweep_load(
    cfg: ExperimentConfig, levels: Sequence[LoadLevel] | None = None
) -> SweepResult:
    """Retrain and evaluate at each arrival-rate multiplier."""
    if cfg.workload_kind != "poisson":
        raise ConfigError("workload.kind: a load sweep needs a poisson workload")
    if levels is None:
        levels = list(LoadLevel)
    cells = [
        (level.value, dataclasses.replace(cfg, level=level)) for level in levels
    ]
    return _sweep(cfg, "load_level", cells)


def sweep_latency(
    cfg: ExperimentConfig, values_ms: Sequence[float] | None = None
) -> SweepResult:
    """Train once on the configured network, evaluate across hop latencies.

    The latency axis degrades a fixed deployed policy; retraining per cell
    would confound the axis with training variation.
    """
    if values_ms is None:
        values_ms = HOP_LATENCY_VALUES_MS
    for latency in values_ms:
        if not latency >= 0.0:
            raise ConfigError(f"network.per_hop_latency_ms: expected >= 0, got {latency!r}")
    policies = {name: build_policy(name, cfg) for name in cfg.schedulers}
    cells = []
    for latency in values_ms:
        net = NetworkModel(
            per_hop_latency_ms=latency, jitter_fraction=cfg.network.jitter_fraction
        )
        cells.append((repr(latency), dataclasses.replace(cfg, network=net)))
    return _sweep(cfg, "hop_latency_ms", cells, policies)


def sweep_resource(
    cfg: ExperimentConfig, profiles: Sequence[ResourceProfile] | None = None
) -> SweepResult:
    """Retrain and evaluate with each demand dimension dominating."""
    if profiles is None:
        profiles = list(ResourceProfile)
    cells = []
    for profile in profiles:
        demand = profile.demand(PROFILE_DEMAND_UNIT)
        try:
            specs = [
                dataclasses.replace(s, demand_per_request=demand) for s in cfg.specs
            ]
        except InvalidSpec as e:
            raise ConfigError(f"topology.services: {e}") from e
        cells.append((profile.value, dataclasses.replace(cfg, specs=specs)))
    return _sweep(cfg, "resource_profile", cells)


# ----- report emission -----


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def comparison_csv(result: CompareResult) -> str:
    lines = ["scheduler," + ",".join(CSV_FIELDS)]
    for name in result.schedulers:
        row = [_fmt(v) for v in _report_values(result.mean[name])]
        lines.append(name + "," + ",".join(row))
    return "\n".join(lines) + "\n"


def sweep_csv(result: SweepResult) -> str:
    lines = ["axis_value,scheduler,seed,metric,value"]
    for value in result.values:
        for name in result.schedulers:
            for seed in result.seeds:
                report = result.per_seed[value][name][seed]
                for field, v in zip(CSV_FIELDS, _report_values(report)):
                    lines.append(f"{value},{name},{seed},{field},{_fmt(v)}")
    return "\n".join(lines) + "\n"


def plotdata_csv(result: SweepResult) -> str:
    """Seed-mean scheduling efficiency per scheduler, one row per axis value."""
    header = ["axis_value"]
    for name in result.schedulers:
        header.append(f"{name}_scheduling_efficiency_mean")
        header.append(f"{name}_scheduling_efficiency_std")
    lines = [",".join(header)]
    for value in result.values:
        row = [value]
        for name in result.schedulers:
            row.append(_fmt(result.mean[value][name].scheduling_efficiency_pct))
            row.append(_fmt(result.std[value][name]["scheduling_efficiency_pct"]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def compare_to_dict(result: CompareResult) -> dict:
    return {
        "schedulers": list(result.schedulers),
        "seeds": list(result.seeds),
        "results": {
            name: {
                "mean": report_to_dict(result.mean[name]),
                "std": result.std[name],
                "per_seed": {
                    str(seed): report_to_dict(result.per_seed[name][seed])
                    for seed in result.seeds
                },
            }
            for name in result.schedulers
        },
    }


def sweep_to_dict(result: SweepResult) -> dict:
    return {
        "axis": result.axis,
        "values": list(result.values),
        "schedulers": list(result.schedulers),
        "seeds": list(result.seeds),
        "cells": {
            value: {
                name: {
                    "mean": report_to_dict(result.mean[value][name]),
                    "std": result.std[value][name],
                    "per_seed": {
                        str(seed): report_to_dict(result.per_seed[value][name][seed])
                        for seed in result.seeds
                    },
                }
                for name in result.schedulers
            }
            for value in result.values
        },
    }


def emit_reports(results, output_dir: str) -> list[str]:
    """Write comparison.csv / sweep CSVs / plotdata CSVs / report.json.

    Accepts a CompareResult, a SweepResult, or a list mixing both. Returns
    the paths written. Identical results produce byte-identical files.
    """
    if isinstance(results, (CompareResult, SweepResult)):
        results = [results]
    if not results:
        raise ConfigError("nothing to emit")
    try:
        os.makedirs(output_dir, exist_ok=True)
    except OSError as e:
        raise IoError(f"cannot create {output_dir}: {e}") from e

    written = []
    doc = {"config": config_to_dict(results[0].config)}
    for result in results:
        if isinstance(result, CompareResult):
            path = os.path.join(output_dir, "comparison.csv")
            write_text(path, comparison_csv(result))
            written.append(path)
            doc["comparison"] = compare_to_dict(result)
        elif isinstance(result, SweepResult):
            path = os.path.join(output_dir, f"sweep_{result.axis}.csv")
            write_text(path, sweep_csv(result))
            written.append(path)
            path = os.path.join(output_dir, f"plotdata_{result.axis}.csv")
            write_text(path, plotdata_csv(result))
            written.append(path)
            doc.setdefault("sweeps", {})[result.axis] = sweep_to_dict(result)
        else:
            raise ConfigError(f"cannot emit {type(result).__name__}")
    path = os.path.join(output_dir, "report.json")
    write_text(path, json.dumps(doc, indent=2) + "\n")
    written.append(path)
    return written

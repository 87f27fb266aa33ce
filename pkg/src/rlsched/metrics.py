"""Evaluation metrics for finished simulation runs.

Pure computations over run outputs: response statistics, throughput,
busy-time utilization, a linear idle-to-peak energy model, SLO attainment
(scheduling efficiency), and cost per completed request relative to the
best scheduler in a comparison set (cost efficiency).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import (
    EmptySample,
    InvalidSpec,
    NoCompletions,
    ZeroOffered,
    ZeroWindow,
)
from .simcore import RESOURCE_DIMS, ClusterState

DEFAULT_SLO_MS = 250.0

UTIL_KEYS = RESOURCE_DIMS + ("overall",)


@dataclass(frozen=True)
class EnergyModel:
    """Per-replica power: p_idle watts at rest, p_max at full cpu."""

    p_idle: float = 10.0
    p_max: float = 20.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_idle <= self.p_max):
            raise InvalidSpec("need 0 <= p_idle <= p_max")


@dataclass
class MetricsReport:
    """One run's evaluation summary; field order is the serialization order."""

    mean_response_ms: float
    p95_response_ms: float
    throughput_rps: float
    utilization_pct: dict[str, float]
    energy_joules: float
    cost_efficiency_pct: float
    scheduling_efficiency_pct: float
    offered: int
    completed: int
    rejected: int
    in_flight: int


# ----- elementary operations -----


def throughput(completed: int, wall_time_s: float) -> float:
    """Completions per second of simulated wall time."""
    if wall_time_s <= 0:
        raise ZeroWindow("wall time must be positive")
    return completed / wall_time_s


def utilization(
    in_use_integrals_s: list[tuple[float, float, float, float]],
    capacities: list[tuple[float, float, float, float]],
    wall_time_s: float,
) -> dict[str, float]:
    """Busy-time fraction per dimension (percent), plus their mean.

    Each entry of in_use_integrals_s is one replica's integral of in-use
    resources over time (unit-seconds); capacities aligns with it.
    """
    if wall_time_s <= 0:
        raise ZeroWindow("wall time must be positive")
    if len(in_use_integrals_s) != len(capacities):
        raise InvalidSpec("one capacity vector per replica integral")
    out: dict[str, float] = {}
    for d, dim in enumerate(RESOURCE_DIMS):
        total = sum(integ[d] for integ in in_use_integrals_s)
        denom = sum(cap[d] for cap in capacities) * wall_time_s
        out[dim] = 100.0 * total / denom if denom > 0 else 0.0
    out["overall"] = sum(out[dim] for dim in RESOURCE_DIMS) / len(RESOURCE_DIMS)
    return out


def energy(
    util_cpu_integrals_s: list[float],
    model: EnergyModel,
    wall_time_s: float,
) -> float:
    """Joules over all replicas: integral of p_idle + (p_max-p_idle)*util_cpu."""
    if wall_time_s < 0:
        raise ZeroWindow("wall time must be >= 0")
    span = model.p_max - model.p_idle
    total = 0.0
    for integ in util_cpu_integrals_s:
        total += model.p_idle * wall_time_s + span * integ
    return total


def scheduling_efficiency(completed_within_slo: int, offered: int) -> float:
    """Percent of offered requests that finished within the SLO."""
    if offered <= 0:
        raise ZeroOffered("no offered requests")
    return 100.0 * completed_within_slo / offered


def response_stats(samples_ms: list[float]) -> tuple[float, float]:
    """Mean and nearest-rank p95 of completed response times."""
    n = len(samples_ms)
    if n == 0:
        raise EmptySample("no completed requests")
    ordered = sorted(samples_ms)
    p95 = ordered[math.ceil(0.95 * n) - 1]
    return sum(ordered) / n, p95


def count_within_slo(samples_ms: list[float], slo_ms: float) -> int:
    return sum(1 for s in samples_ms if s <= slo_ms)


def cost_efficiency(reports: dict[str, MetricsReport]) -> dict[str, float]:
    """Relative cost per completed request; the cheapest scheduler scores 100.

    Updates each report's cost_efficiency_pct in place and returns the map.
    """
    if not reports:
        raise NoCompletions("empty comparison set")
    costs: dict[str, float] = {}
    for name, rep in reports.items():
        if rep.completed <= 0:
            raise NoCompletions(f"scheduler {name!r} completed nothing")
        costs[name] = rep.energy_joules / rep.completed
    best = min(costs.values())
    out: dict[str, float] = {}
    for name, cost in costs.items():
        pct = 100.0 * best / cost if cost > 0 else 100.0
        reports[name].cost_efficiency_pct = pct
        out[name] = pct
    return out


# ----- report assembly -----


def build_report(
    cluster: ClusterState,
    slo_ms: float = DEFAULT_SLO_MS,
    model: EnergyModel | None = None,
) -> MetricsReport:
    """Summarize a finished cluster run.

    Response statistics are NaN when nothing completed. cost_efficiency_pct
    starts at the single-scheduler value of 100 and is overwritten when the
    report joins a comparison set.
    """
    if model is None:
        model = EnergyModel()
    cluster.settle_integrals()
    cluster.check_conservation()
    wall_s = cluster.clock_us / 1e6
    if wall_s <= 0:
        raise ZeroWindow("run advanced no simulated time")

    samples = cluster.response_samples_ms
    if samples:
        mean_ms, p95_ms = response_stats(samples)
    else:
        mean_ms, p95_ms = float("nan"), float("nan")

    integrals = []
    caps = []
    cpu_utils = []
    for reps in cluster.replicas:
        for rep in reps:
            integrals.append(tuple(v / 1e6 for v in rep.in_use_integral_us))
            caps.append(tuple(v / (1e6 * wall_s) for v in rep.cap_integral_us))
            cpu_utils.append(rep.util_cpu_integral_us / 1e6)
    util = utilization(integrals, caps, wall_s)

    offered = cluster.injected
    if offered <= 0:
        raise ZeroOffered("run offered no requests")

    return MetricsReport(
        mean_response_ms=mean_ms,
        p95_response_ms=p95_ms,
        throughput_rps=throughput(cluster.completed, wall_s),
        utilization_pct=util,
        energy_joules=energy(cpu_utils, model, wall_s),
        cost_efficiency_pct=100.0,
        scheduling_efficiency_pct=scheduling_efficiency(
            count_within_slo(samples, slo_ms), offered
        ),
        offered=offered,
        completed=cluster.completed,
        rejected=cluster.rejected,
        in_flight=cluster.in_flight,
    )


def check_report_conservation(report: MetricsReport) -> None:
    if report.offered != report.completed + report.rejected + report.in_flight:
        raise AssertionError("report conservation violated")


# ----- serialization -----

CSV_FIELDS = (
    "mean_response_ms",
    "p95_response_ms",
    "throughput_rps",
    "utilization_pct_cpu",
    "utilization_pct_memory",
    "utilization_pct_storage",
    "utilization_pct_network",
    "utilization_pct_overall",
    "energy_joules",
    "cost_efficiency_pct",
    "scheduling_efficiency_pct",
    "offered",
    "completed",
    "rejected",
    "in_flight",
)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def report_csv_row(report: MetricsReport) -> list[str]:
    """Values aligned with CSV_FIELDS."""
    vals = [
        report.mean_response_ms,
        report.p95_response_ms,
        report.throughput_rps,
        *(report.utilization_pct[k] for k in UTIL_KEYS),
        report.energy_joules,
        report.cost_efficiency_pct,
        report.scheduling_efficiency_pct,
        report.offered,
        report.completed,
        report.rejected,
        report.in_flight,
    ]
    return [_fmt(v) for v in vals]


def report_to_dict(report: MetricsReport) -> dict:
    """JSON-ready mapping in field-definition order."""
    return {
        "mean_response_ms": report.mean_response_ms,
        "p95_response_ms": report.p95_response_ms,
        "throughput_rps": report.throughput_rps,
        "utilization_pct": {k: report.utilization_pct[k] for k in UTIL_KEYS},
        "energy_joules": report.energy_joules,
        "cost_efficiency_pct": report.cost_efficiency_pct,
        "scheduling_efficiency_pct": report.scheduling_efficiency_pct,
        "offered": report.offered,
        "completed": report.completed,
        "rejected": report.rejected,
        "in_flight": report.in_flight,
    }

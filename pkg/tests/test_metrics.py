"""Metric arithmetic against hand values, plus report assembly from runs."""

from __future__ import annotations

import math

import numpy as np
import pytest

from rlsched import errors
from rlsched.metrics import (
    CSV_FIELDS,
    EnergyModel,
    MetricsReport,
    build_report,
    check_report_conservation,
    cost_efficiency,
    count_within_slo,
    energy,
    report_csv_row,
    report_to_dict,
    response_stats,
    scheduling_efficiency,
    throughput,
    utilization,
)
from rlsched.simcore import (
    ClusterState,
    NetworkModel,
    Request,
    ResourceVector,
    ServiceSpec,
    make_rng,
)

UNIT = ResourceVector(1.0, 1.0, 1.0, 1.0)


def mk_report(energy_joules=100.0, completed=50, offered=60, rejected=10) -> MetricsReport:
    return MetricsReport(
        mean_response_ms=120.0,
        p95_response_ms=200.0,
        throughput_rps=950.0,
        utilization_pct={k: 85.0 for k in ("cpu", "memory", "storage", "network", "overall")},
        energy_joules=energy_joules,
        cost_efficiency_pct=100.0,
        scheduling_efficiency_pct=92.0,
        offered=offered,
        completed=completed,
        rejected=rejected,
        in_flight=offered - completed - rejected,
    )


# ----- throughput -----


def test_throughput_hand_values():
    assert throughput(9500, 10.0) == pytest.approx(950.0)
    assert throughput(0, 5.0) == 0.0
    with pytest.raises(errors.ZeroWindow):
        throughput(10, 0.0)


# ----- utilization -----


def test_utilization_fully_busy_cpu():
    integ = [(10.0, 0.0, 0.0, 0.0)]
    caps = [(1.0, 1.0, 1.0, 1.0)]
    u = utilization(integ, caps, 10.0)
    assert u["cpu"] == pytest.approx(100.0)
    assert u["memory"] == 0.0
    assert u["overall"] == pytest.approx(25.0)


def test_utilization_half_capacity_half_time():
    # half the cpu for half the run: integral 0.5 * 0.5 * wall
    integ = [(2.5, 0.0, 0.0, 0.0)]
    caps = [(1.0, 1.0, 1.0, 1.0)]
    assert utilization(integ, caps, 10.0)["cpu"] == pytest.approx(25.0)


def test_utilization_idle_and_errors():
    u = utilization([(0.0,) * 4], [(1.0,) * 4], 10.0)
    assert all(u[k] == 0.0 for k in u)
    with pytest.raises(errors.ZeroWindow):
        utilization([(0.0,) * 4], [(1.0,) * 4], 0.0)
    with pytest.raises(errors.InvalidSpec):
        utilization([(0.0,) * 4], [], 1.0)


def test_utilization_sums_replicas():
    integ = [(10.0, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0, 0.0)]
    caps = [(1.0,) * 4, (1.0,) * 4]
    assert utilization(integ, caps, 10.0)["cpu"] == pytest.approx(50.0)


# ----- energy -----


def test_energy_hand_values():
    m = EnergyModel(p_idle=10.0, p_max=20.0)
    # idle replica for 10 s
    assert energy([0.0], m, 10.0) == pytest.approx(100.0)
    # fully busy for 10 s: util integral = 10
    assert energy([10.0], m, 10.0) == pytest.approx(200.0)
    # degenerate model ignores load
    flat = EnergyModel(p_idle=15.0, p_max=15.0)
    assert energy([0.0], flat, 10.0) == energy([10.0], flat, 10.0) == pytest.approx(150.0)


def test_energy_monotone_in_utilization():
    m = EnergyModel()
    rng = make_rng(5, 0)
    for _ in range(100):
        a = float(rng.uniform(0.0, 10.0))
        b = a + float(rng.uniform(0.0, 5.0))
        assert energy([b], m, 10.0) >= energy([a], m, 10.0)


def test_energy_model_validation():
    with pytest.raises(errors.InvalidSpec):
        EnergyModel(p_idle=20.0, p_max=10.0)
    with pytest.raises(errors.InvalidSpec):
        EnergyModel(p_idle=-1.0, p_max=10.0)


# ----- scheduling efficiency -----


def test_scheduling_efficiency_hand_values():
    assert scheduling_efficiency(92, 100) == pytest.approx(92.0)
    assert scheduling_efficiency(0, 100) == 0.0
    with pytest.raises(errors.ZeroOffered):
        scheduling_efficiency(0, 0)


def test_scheduling_efficiency_penalizes_rejections():
    # holding within-SLO completions fixed, more offered (rejected) lowers it
    base = scheduling_efficiency(50, 60)
    worse = scheduling_efficiency(50, 80)
    assert worse < base


def test_count_within_slo_boundary():
    assert count_within_slo([100.0, 250.0, 250.001, 400.0], 250.0) == 2


# ----- response stats -----


def test_response_stats_hand_values():
    mean, p95 = response_stats([100.0, 200.0, 300.0])
    assert mean == pytest.approx(200.0)
    samples = [120.0] * 100
    mean, p95 = response_stats(samples)
    assert mean == pytest.approx(120.0) and p95 == pytest.approx(120.0)


def test_response_stats_nearest_rank():
    samples = [float(i) for i in range(1, 21)]
    _, p95 = response_stats(samples)
    assert p95 == 19.0
    _, p95_single = response_stats([42.0])
    assert p95_single == 42.0


def test_response_stats_empty():
    with pytest.raises(errors.EmptySample):
        response_stats([])


# ----- cost efficiency -----


def test_cost_efficiency_single_scheduler():
    reports = {"only": mk_report(energy_joules=80.0, completed=40)}
    out = cost_efficiency(reports)
    assert out == {"only": pytest.approx(100.0)}
    assert reports["only"].cost_efficiency_pct == pytest.approx(100.0)


def test_cost_efficiency_ratio():
    reports = {
        "cheap": mk_report(energy_joules=50.0, completed=50),  # 1 J/req
        "dear": mk_report(energy_joules=100.0, completed=50),  # 2 J/req
    }
    out = cost_efficiency(reports)
    assert out["cheap"] == pytest.approx(100.0)
    assert out["dear"] == pytest.approx(50.0)


def test_cost_efficiency_exactly_one_best_or_ties():
    reports = {
        "a": mk_report(energy_joules=60.0, completed=60),
        "b": mk_report(energy_joules=30.0, completed=30),
        "c": mk_report(energy_joules=90.0, completed=45),
    }
    out = cost_efficiency(reports)
    best = [k for k, v in out.items() if v == 100.0]
    assert set(best) == {"a", "b"}
    assert out["c"] == pytest.approx(50.0)


def test_cost_efficiency_no_completions():
    with pytest.raises(errors.NoCompletions):
        cost_efficiency({"x": mk_report(completed=0, rejected=60)})
    with pytest.raises(errors.NoCompletions):
        cost_efficiency({})


# ----- report assembly -----


def finished_cluster(seed: int = 3) -> ClusterState:
    cap = ResourceVector(4.0, 4.0, 4.0, 4.0)
    specs = [
        ServiceSpec(0, 2, cap, 8.0, UNIT, (1,)),
        ServiceSpec(1, 2, cap, 10.0, UNIT, ()),
    ]
    cluster = ClusterState(specs, NetworkModel(2.0, 0.1), seed, max_queue=8)
    gaps = make_rng(seed, 0).exponential(scale=2.0, size=400)
    t = 0.0
    for i, g in enumerate(gaps):
        t += g
        cluster.inject_arrival(Request(i, t))
    while cluster.has_events():
        _, dp = cluster.advance()
        if dp is not None:
            cluster.place(dp, min(dp.candidates, key=lambda j: dp.loads[j]))
    return cluster


def test_build_report_from_run():
    report = build_report(finished_cluster())
    assert report.offered == 400
    assert report.completed + report.rejected + report.in_flight == 400
    assert report.in_flight == 0
    assert report.throughput_rps > 0
    assert 0.0 <= report.scheduling_efficiency_pct <= 100.0
    for k, v in report.utilization_pct.items():
        assert 0.0 <= v <= 100.0, k
    assert report.energy_joules > 0
    assert report.mean_response_ms > 0
    assert report.p95_response_ms >= report.mean_response_ms * 0.5
    check_report_conservation(report)


def test_report_energy_scales_with_wall_time():
    cluster = finished_cluster()
    wall_s = cluster.clock_us / 1e6
    report = build_report(cluster)
    n_replicas = 4
    m = EnergyModel()
    low = n_replicas * m.p_idle * wall_s
    high = n_replicas * m.p_max * wall_s
    assert low <= report.energy_joules <= high


def test_report_determinism():
    a = build_report(finished_cluster(11))
    b = build_report(finished_cluster(11))
    assert report_csv_row(a) == report_csv_row(b)
    assert report_to_dict(a) == report_to_dict(b)


def test_csv_row_alignment():
    report = build_report(finished_cluster())
    row = report_csv_row(report)
    assert len(row) == len(CSV_FIELDS)
    d = report_to_dict(report)
    assert list(d) == [
        "mean_response_ms",
        "p95_response_ms",
        "throughput_rps",
        "utilization_pct",
        "energy_joules",
        "cost_efficiency_pct",
        "scheduling_efficiency_pct",
        "offered",
        "completed",
        "rejected",
        "in_flight",
    ]
    assert list(d["utilization_pct"]) == ["cpu", "memory", "storage", "network", "overall"]
    # csv cells parse back to the dict values
    assert float(row[0]) == pytest.approx(d["mean_response_ms"])
    assert int(row[-4]) == d["offered"]


def test_conservation_check_rejects_bad_report():
    bad = mk_report(offered=60, completed=50, rejected=5)
    bad.in_flight = 99
    with pytest.raises(AssertionError):
        check_report_conservation(bad)

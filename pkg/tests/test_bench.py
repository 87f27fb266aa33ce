"""Config parsing, compare/sweep orchestration, and report emission."""

from __future__ import annotations

import json
import os

import pytest

from rlsched.agents import StaticPolicy
from rlsched.bench import (
    EVAL_SEED_OFFSET,
    CompareResult,
    comparison_csv,
    config_to_dict,
    emit_reports,
    evaluate_policy,
    load_config,
    make_env,
    parse_config,
    plotdata_csv,
    reference_config_dict,
    run_compare,
    sweep_csv,
    sweep_latency,
    sweep_load,
    sweep_resource,
)
from rlsched.errors import ConfigError, IoError
from rlsched.metrics import CSV_FIELDS, check_report_conservation
from rlsched.workload import LoadLevel, ResourceProfile, generate_trace, save_trace


def svc(sid: int, ms: float, downstream: list[int], replicas: int = 2) -> dict:
    return {
        "service_id": sid,
        "replicas": replicas,
        "capacity_per_replica": {"cpu": 2.0, "memory": 2.0, "storage": 2.0, "network": 2.0},
        "base_service_time_ms": ms,
        "demand_per_request": {"cpu": 1.0, "memory": 0.5, "storage": 0.5, "network": 0.5},
        "downstream": downstream,
    }


def tiny_config(**over) -> dict:
    """Two-service chain small enough for sub-second runs."""
    cfg = {
        "version": 1,
        "seeds": [1, 2],
        "schedulers": ["static", "round_robin", "least_loaded", "random"],
        "slo_ms": 120.0,
        "max_queue": 8,
        "topology": {"services": [svc(0, 5.0, [1]), svc(1, 8.0, [])]},
        "network": {"per_hop_latency_ms": 2.0, "jitter_fraction": 0.1},
        "workload": {"kind": "poisson", "base_rate_per_ms": 0.06, "horizon_ms": 400.0},
    }
    cfg.update(over)
    return cfg


def err(cfg_dict: dict) -> str:
    with pytest.raises(ConfigError) as ei:
        parse_config(cfg_dict)
    return str(ei.value)


# ----- config validation -----


def test_parse_tiny_config_ok():
    cfg = parse_config(tiny_config())
    assert cfg.seeds == [1, 2]
    assert list(cfg.schedulers) == ["static", "round_robin", "least_loaded", "random"]
    assert cfg.level is None
    assert len(cfg.specs) == 2


def test_version_required_and_checked():
    d = tiny_config()
    del d["version"]
    assert "version" in err(d)
    assert "version" in err(tiny_config(version=2))
    assert "version" in err(tiny_config(version=True))


def test_unknown_top_level_field_is_an_error():
    msg = err(tiny_config(extra_knob=1))
    assert "extra_knob" in msg


def test_unknown_nested_field_reports_dotted_path():
    d = tiny_config()
    d["network"]["bogus"] = 1
    assert "network.bogus" in err(d)

    d = tiny_config()
    d["topology"]["services"][1]["bogus"] = 1
    assert "topology.services[1].bogus" in err(d)


def test_seed_list_validation():
    assert "seeds" in err(tiny_config(seeds=[]))
    assert "seeds[0]" in err(tiny_config(seeds=[-1]))
    assert "seeds" in err(tiny_config(seeds=[3, 3]))


def test_scheduler_set_validation():
    assert "schedulers" in err(tiny_config(schedulers=[]))
    assert "schedulers[0]" in err(tiny_config(schedulers=["fancy"]))
    assert "schedulers" in err(tiny_config(schedulers=["static", "static"]))


def test_mode_validation():
    assert "mode" in err(tiny_config(mode="magic"))
    # per-replica routing baselines have no meaning for allocation decisions
    msg = err(tiny_config(mode="allocation", schedulers=["static", "least_loaded"]))
    assert "least_loaded" in msg


def test_workload_validation():
    d = tiny_config()
    d["workload"] = {"kind": "csv"}
    assert "workload.kind" in err(d)

    d = tiny_config()
    del d["workload"]["base_rate_per_ms"]
    assert "workload.base_rate_per_ms" in err(d)

    d = tiny_config()
    d["workload"]["level"] = "extreme"
    assert "workload.level" in err(d)

    d = tiny_config()
    d["workload"] = {"kind": "trace"}
    assert "workload.path" in err(d)


def test_topology_and_scalar_validation():
    d = tiny_config()
    d["topology"]["services"] = []
    assert "topology.services" in err(d)

    d = tiny_config()
    d["topology"]["services"][0]["replicas"] = 0
    assert "topology.services[0]" in err(d)

    assert "slo_ms" in err(tiny_config(slo_ms=0.0))
    assert "max_queue" in err(tiny_config(max_queue=-1))

    d = tiny_config()
    d["network"]["jitter_fraction"] = 1.5
    msg = err(d)
    assert "network" in msg and "jitter_fraction" in msg


def test_reward_and_agent_validation():
    assert "reward" in err(tiny_config(reward={"lambda_per_ms": -0.1}))
    assert "reward.weird" in err(tiny_config(reward={"weird": 1}))
    assert "agent" in err(tiny_config(agent={"learning_rate": -1.0}))
    assert "agent.episodes" in err(tiny_config(agent={"episodes": 0}))


def test_config_round_trip():
    d = reference_config_dict()
    cfg = parse_config(d)
    d2 = config_to_dict(cfg)
    assert parse_config(d2) == cfg
    assert config_to_dict(parse_config(d2)) == d2


def test_load_config_errors(tmp_path):
    with pytest.raises(IoError):
        load_config(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(bad))
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(arr))


def test_load_config_round_trips_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(tiny_config()), encoding="utf-8")
    assert load_config(str(p)) == parse_config(tiny_config())


# ----- compare -----


def test_compare_baselines_shape_and_determinism():
    cfg = parse_config(tiny_config())
    a = run_compare(cfg)
    b = run_compare(cfg)
    assert isinstance(a, CompareResult)
    assert a.schedulers == list(cfg.schedulers)
    assert a.seeds == [1, 2]
    for name in a.schedulers:
        assert set(a.per_seed[name]) == {1, 2}
    assert comparison_csv(a) == comparison_csv(b)


def test_compare_mean_cost_efficiency_tops_at_100():
    cfg = parse_config(tiny_config())
    res = run_compare(cfg)
    tops = [n for n in res.schedulers if res.mean[n].cost_efficiency_pct == 100.0]
    assert len(tops) == 1


def test_compare_reports_conserve_requests():
    cfg = parse_config(tiny_config())
    res = run_compare(cfg)
    for name in res.schedulers:
        for rep in res.per_seed[name].values():
            check_report_conservation(rep)


def test_evaluation_uses_offset_stream():
    cfg = parse_config(tiny_config(schedulers=["static"]))
    rep = evaluate_policy(StaticPolicy(), cfg, 1)
    env = make_env(cfg, 1 + EVAL_SEED_OFFSET)
    obs = env.reset(0)
    policy = StaticPolicy()
    policy.reseed(1)
    while not env.done:
        obs, _, _, _ = env.step(policy.act(obs, env.pending_decision()))
    from rlsched.metrics import EnergyModel, build_report

    assert build_report(env.cluster, cfg.slo_ms, EnergyModel()) == rep


def test_evaluations_do_not_disturb_each_other():
    # eval episodes own their envs; rerunning a seed reproduces its report
    cfg = parse_config(tiny_config(schedulers=["random"]))
    policy = StaticPolicy()
    first = evaluate_policy(policy, cfg, 1)
    evaluate_policy(policy, cfg, 7)
    evaluate_policy(policy, cfg, 8)
    assert evaluate_policy(policy, cfg, 1) == first


def test_training_smoke_and_determinism():
    d = tiny_config(
        schedulers=["tabular", "dqn"],
        agent={
            "episodes": 2,
            "train_horizon_ms": 150.0,
            "max_train_steps": 150,
            "replay_capacity": 64,
            "batch_size": 8,
        },
    )
    cfg = parse_config(d)
    a = run_compare(cfg)
    b = run_compare(cfg)
    assert comparison_csv(a) == comparison_csv(b)
    for name in a.schedulers:
        for rep in a.per_seed[name].values():
            check_report_conservation(rep)


def test_trace_workload_compare(tmp_path):
    path = tmp_path / "trace.csv"
    save_trace(generate_trace(40, seed=5, mean_gap_ms=8.0), str(path))
    d = tiny_config(workload={"kind": "trace", "path": str(path)})
    cfg = parse_config(d)
    a = run_compare(cfg)
    b = run_compare(cfg)
    assert comparison_csv(a) == comparison_csv(b)
    offered = {a.per_seed[n][1].offered for n in a.schedulers}
    assert len(offered) == 1  # arrivals come from the trace, not the seed


# ----- sweeps -----


def test_sweep_load_cells_and_single_point():
    cfg = parse_config(tiny_config(schedulers=["static", "least_loaded"]))
    res = sweep_load(cfg)
    assert res.axis == "load_level"
    assert res.values == [lv.value for lv in LoadLevel]
    for key in res.values:
        for name in res.schedulers:
            assert set(res.per_seed[key][name]) == {1, 2}
            for rep in res.per_seed[key][name].values():
                check_report_conservation(rep)
    single = sweep_load(cfg, [LoadLevel.LOW])
    assert single.values == ["low"]


def test_sweep_load_needs_poisson(tmp_path):
    path = tmp_path / "trace.csv"
    save_trace(generate_trace(10, seed=5), str(path))
    cfg = parse_config(tiny_config(workload={"kind": "trace", "path": str(path)}))
    with pytest.raises(ConfigError):
        sweep_load(cfg)


def test_sweep_latency_grid_and_edges():
    cfg = parse_config(tiny_config(schedulers=["static"]))
    res = sweep_latency(cfg)
    assert res.values == ["10.0", "20.0", "30.0", "40.0", "50.0"]
    single = sweep_latency(cfg, [25.0])
    assert single.values == ["25.0"]
    with pytest.raises(ConfigError):
        sweep_latency(cfg, [-1.0])


def test_zero_latency_no_worse_than_ten():
    # hot enough that the static policy misses some deadlines at 10 ms hops
    d = tiny_config(
        schedulers=["static"],
        workload={"kind": "poisson", "base_rate_per_ms": 0.15, "horizon_ms": 500.0},
    )
    cfg = parse_config(d)
    res = sweep_latency(cfg, [0.0, 10.0])
    eff0 = res.mean["0.0"]["static"].scheduling_efficiency_pct
    eff10 = res.mean["10.0"]["static"].scheduling_efficiency_pct
    assert eff10 < 100.0
    assert eff0 >= eff10


def test_sweep_resource_profiles():
    cfg = parse_config(tiny_config(schedulers=["static", "least_loaded"]))
    res = sweep_resource(cfg)
    assert res.axis == "resource_profile"
    assert res.values == [p.value for p in ResourceProfile]
    single = sweep_resource(cfg, [ResourceProfile.CPU_BOUND])
    assert single.values == ["cpu_bound"]
    # same cell twice: the profile only selects demands, so reports repeat
    again = sweep_resource(cfg, [ResourceProfile.CPU_BOUND])
    assert sweep_csv(single) == sweep_csv(again)


# ----- emission -----


def test_emit_compare_files(tmp_path):
    cfg = parse_config(tiny_config())
    res = run_compare(cfg)
    out = tmp_path / "out"
    written = emit_reports(res, str(out))
    names = {os.path.basename(p) for p in written}
    assert names == {"comparison.csv", "report.json"}

    text = (out / "comparison.csv").read_text(encoding="utf-8")
    lines = text.strip().split("\n")
    assert lines[0] == "scheduler," + ",".join(CSV_FIELDS)
    assert len(lines) == 1 + len(res.schedulers)

    doc = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert parse_config(doc["config"]) == cfg
    assert set(doc["comparison"]["results"]) == set(res.schedulers)


def test_emit_sweep_files_and_long_format(tmp_path):
    cfg = parse_config(tiny_config(schedulers=["static"]))
    res = sweep_latency(cfg, [10.0, 20.0])
    written = emit_reports(res, str(tmp_path))
    names = {os.path.basename(p) for p in written}
    assert names == {"sweep_hop_latency_ms.csv", "plotdata_hop_latency_ms.csv", "report.json"}

    lines = (tmp_path / "sweep_hop_latency_ms.csv").read_text(encoding="utf-8").strip().split("\n")
    assert lines[0] == "axis_value,scheduler,seed,metric,value"
    assert len(lines) == 1 + 2 * 1 * 2 * len(CSV_FIELDS)
    for row in lines[1:]:
        axis_value, scheduler, seed, metric, value = row.split(",")
        assert axis_value in ("10.0", "20.0")
        assert scheduler == "static"
        assert int(seed) in (1, 2)
        float(value)

    plot = (tmp_path / "plotdata_hop_latency_ms.csv").read_text(encoding="utf-8").strip().split("\n")
    assert plot[0].startswith("axis_value,")
    assert len(plot) == 1 + 2


def test_emit_mixed_results_single_report(tmp_path):
    cfg = parse_config(tiny_config(schedulers=["static"]))
    cr = run_compare(cfg)
    sw = sweep_load(cfg, [LoadLevel.LOW])
    written = emit_reports([cr, sw], str(tmp_path))
    doc = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert "comparison" in doc and "load_level" in doc["sweeps"]
    assert len(written) == 4


def test_emit_byte_identical_across_runs(tmp_path):
    cfg = parse_config(tiny_config())
    a = tmp_path / "a"
    b = tmp_path / "b"
    emit_reports(run_compare(cfg), str(a))
    emit_reports(run_compare(cfg), str(b))
    for fn in ("comparison.csv", "report.json"):
        assert (a / fn).read_bytes() == (b / fn).read_bytes()


def test_emit_unwritable_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x", encoding="utf-8")
    cfg = parse_config(tiny_config(schedulers=["static"]))
    res = run_compare(cfg)
    with pytest.raises(IoError):
        emit_reports(res, str(blocker / "sub"))


def test_plotdata_tracks_mean_efficiency():
    cfg = parse_config(tiny_config(schedulers=["static", "least_loaded"]))
    res = sweep_latency(cfg, [10.0])
    lines = plotdata_csv(res).strip().split("\n")
    header = lines[0].split(",")
    assert header[0] == "axis_value"
    assert "static_scheduling_efficiency_mean" in header
    assert "static_scheduling_efficiency_std" in header
    row = lines[1].split(",")
    i = header.index("static_scheduling_efficiency_mean")
    assert float(row[i]) == res.mean["10.0"]["static"].scheduling_efficiency_pct

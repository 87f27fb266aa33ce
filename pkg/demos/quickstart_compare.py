"""Smallest end-to-end run: four baselines on a two-service chain.

Builds a config dict inline, runs every scheduler on two seeds, and prints
the comparison table. Finishes in a couple of seconds.
"""

from __future__ import annotations

from rlsched.bench import comparison_csv, parse_config, run_compare


def service(sid: int, ms: float, downstream: list[int]) -> dict:
    return {
        "service_id": sid,
        "replicas": 2,
        "capacity_per_replica": {"cpu": 2.0, "memory": 2.0, "storage": 2.0, "network": 2.0},
        "base_service_time_ms": ms,
        "demand_per_request": {"cpu": 1.0, "memory": 0.5, "storage": 0.5, "network": 0.5},
        "downstream": downstream,
    }


CONFIG = {
    "version": 1,
    "seeds": [1, 2],
    "schedulers": ["static", "round_robin", "least_loaded", "random"],
    "slo_ms": 120.0,
    "max_queue": 8,
    "topology": {"services": [service(0, 5.0, [1]), service(1, 8.0, [])]},
    "network": {"per_hop_latency_ms": 2.0, "jitter_fraction": 0.1},
    "workload": {"kind": "poisson", "base_rate_per_ms": 0.12, "horizon_ms": 800.0},
}


def main() -> None:
    cfg = parse_config(CONFIG)
    result = run_compare(cfg)
    # rows are seed means; cost efficiency is relative, the best row reads 100
    print(comparison_csv(result), end="")


if __name__ == "__main__":
    main()

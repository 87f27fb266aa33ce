"""Replay a telemetry trace instead of a Poisson stream.

Synthesizes a trace file, round-trips it through the CSV loader, and runs
the heuristic schedulers on the replayed arrivals. With a trace workload
the arrival times come from the file, so every scheduler sees the same
offered stream and only service-time draws differ by seed.
"""

from __future__ import annotations

import os
import tempfile

from rlsched.bench import comparison_csv, parse_config, run_compare
from rlsched.workload import generate_trace, save_trace

from quickstart_compare import CONFIG


def main() -> None:
    records = generate_trace(60, seed=11, mean_gap_ms=12.0)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "trace.csv")
        save_trace(records, path)
        cfg_dict = dict(CONFIG)
        cfg_dict["workload"] = {"kind": "trace", "path": path}
        result = run_compare(parse_config(cfg_dict))
    offered = result.per_seed["static"][1].offered
    print(f"replayed {offered} arrivals from {len(records)} trace records")
    print(comparison_csv(result), end="")


if __name__ == "__main__":
    main()

"""Scheduling efficiency versus offered load on the reference topology.

Trains the deep learner at each load level and prints the efficiency curve
next to the static and least-loaded baselines. The interesting read: static
herds every request onto one replica per service and falls off a cliff as
soon as that replica saturates, while the learned router degrades smoothly.

Takes a minute or two (four training runs). Pass --quick for one seed.
"""

from __future__ import annotations

import argparse
import dataclasses

from rlsched.bench import reference_config, sweep_load

SCHEDULERS = ["static", "least_loaded", "dqn"]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--quick", action="store_true", help="single seed instead of three")
    args = ap.parse_args()

    cfg = dataclasses.replace(reference_config(), schedulers=SCHEDULERS)
    if args.quick:
        cfg = dataclasses.replace(cfg, seeds=[1])

    result = sweep_load(cfg)
    width = max(len(v) for v in result.values)
    header = " ".join(f"{name:>14s}" for name in SCHEDULERS)
    print(f"{'load level':>{width}s} {header}   (scheduling efficiency, % within SLO)")
    for value in result.values:
        cells = " ".join(
            f"{result.mean[value][name].scheduling_efficiency_pct:14.1f}" for name in SCHEDULERS
        )
        print(f"{value:>{width}s} {cells}")


if __name__ == "__main__":
    main()

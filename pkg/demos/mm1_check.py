"""Simulator sanity against the single-queue closed form.

In M/M/1 mode the cluster degenerates to one server with an unbounded
queue, so the mean response time has the textbook answer 1/(mu - lambda).
This sweeps the load factor and prints simulated versus predicted means.
"""

from __future__ import annotations

from rlsched.simcore import run_mm1_validation

MU = 1.0
RHOS = (0.3, 0.5, 0.7, 0.9)
REQUESTS = 100_000


def main() -> None:
    print(f"{'rho':>5s} {'simulated':>10s} {'predicted':>10s} {'rel err':>8s}")
    for rho in RHOS:
        lam = rho * MU
        observed = run_mm1_validation(lam, MU, REQUESTS, seed=9)
        predicted = 1.0 / (MU - lam)
        rel = abs(observed - predicted) / predicted
        print(f"{rho:5.2f} {observed:10.3f} {predicted:10.3f} {rel:8.2%}")


if __name__ == "__main__":
    main()

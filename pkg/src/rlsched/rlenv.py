"""Decision-process view of the cluster for learning schedulers.

An episode replays one arrival stream. In routing mode, every request
reaching a service is a decision point and the action picks the replica.
In allocation mode, decisions happen at fixed epoch boundaries, the action
rescales one service's capacity tier, and routing falls back to a
least-loaded rule between epochs.

The reward accrues between consecutive decision points: per service, minus
lambda_i times the mean response in the window (a fixed timeout stands in
when nothing completed) plus alpha_i times the time-averaged utilization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EpisodeOver,
    IndexOutOfRange,
    InvalidSpec,
    LengthMismatch,
)
from .simcore import (
    ClusterState,
    DecisionPoint,
    NetworkModel,
    Request,
    ServiceSpec,
)
from .workload import LoadLevel, generate_arrivals

FEATURES_PER_SERVICE = 6

ALLOCATION_TIERS = (0.5, 1.0, 2.0)

DEFAULT_LAMBDA_PER_MS = 0.01
DEFAULT_ALPHA = 0.5
DEFAULT_SLO_MS = 250.0


# ----- reward -----


@dataclass(frozen=True)
class RewardWeights:
    """Per-service response penalty (per ms) and utilization bonus."""

    lambdas: tuple[float, ...]
    alphas: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.lambdas) != len(self.alphas):
            raise LengthMismatch(
                f"{len(self.lambdas)} lambdas vs {len(self.alphas)} alphas"
            )
        if not self.lambdas:
            raise LengthMismatch("weights need at least one service")

    @classmethod
    def uniform(
        cls,
        n_services: int,
        lam: float = DEFAULT_LAMBDA_PER_MS,
        alpha: float = DEFAULT_ALPHA,
    ) -> "RewardWeights":
        return cls((lam,) * n_services, (alpha,) * n_services)


def reward(
    lambdas,
    alphas,
    responses_ms,
    utilizations,
) -> float:
    """Sum over services of -lambda_i * R_i + alpha_i * U_i."""
    n = len(lambdas)
    if not (len(alphas) == len(responses_ms) == len(utilizations) == n):
        raise LengthMismatch(
            "lambdas, alphas, responses, utilizations must share one length"
        )
    total = 0.0
    for i in range(n):
        total += -lambdas[i] * responses_ms[i] + alphas[i] * utilizations[i]
    return total


# ----- actions -----


@dataclass(frozen=True)
class ActionSpec:
    """Discrete action space for one mode.

    routing: one action per replica slot (heterogeneous services map the
    index onto their candidate list modulo its length).
    allocation: index = service * 3 + tier over tiers (0.5x, 1x, 2x).
    """

    mode: str
    n_services: int
    max_replicas: int

    def __post_init__(self) -> None:
        if self.mode not in ("routing", "allocation"):
            raise InvalidSpec(f"unknown mode {self.mode!r}")
        if self.n_services < 1 or self.max_replicas < 1:
            raise InvalidSpec("action space needs services and replicas")

    @property
    def n_actions(self) -> int:
        if self.mode == "routing":
            return self.max_replicas
        return self.n_services * len(ALLOCATION_TIERS)

    def decode(self, index: int):
        """Routing: replica slot. Allocation: (service_id, tier multiplier)."""
        if not (0 <= index < self.n_actions):
            raise IndexOutOfRange(f"action {index} outside 0..{self.n_actions - 1}")
        if self.mode == "routing":
            return index
        return index // len(ALLOCATION_TIERS), ALLOCATION_TIERS[index % len(ALLOCATION_TIERS)]


def decode_action(spec: ActionSpec, index: int):
    return spec.decode(index)


@dataclass(slots=True)
class Transition:
    """One (s, a, r, s', terminal) tuple for replay."""

    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool


# ----- the environment -----


def _derive_seed(base_seed: int, episode: int, tag: int) -> int:
    return int(np.random.SeedSequence([base_seed, episode, tag]).generate_state(1)[0])


class SchedulingEnv:
    """Episode driver around ClusterState with a 6-features-per-service state.

    Per service the state holds the four instantaneous utilization fractions,
    queue fill, and an EWMA of response times normalized by the timeout; all
    components are clamped to [0, 1].
    """

    def __init__(
        self,
        specs: list[ServiceSpec],
        network: NetworkModel,
        *,
        base_seed: int,
        arrival_rate_per_ms: float | None = None,
        horizon_ms: float | None = None,
        level: LoadLevel | None = None,
        arrivals: list[Request] | None = None,
        weights: RewardWeights | None = None,
        mode: str = "routing",
        slo_ms: float = DEFAULT_SLO_MS,
        penalty_ms: float | None = None,
        ewma_beta: float = 0.2,
        max_queue: int | None = 64,
        epoch_ms: float = 100.0,
        contention: bool = True,
    ):
        if arrivals is None and (arrival_rate_per_ms is None or horizon_ms is None):
            raise InvalidSpec("need either an arrival stream or a rate and horizon")
        if not (0.0 < ewma_beta <= 1.0):
            raise InvalidSpec("ewma_beta must lie in (0, 1]")
        if epoch_ms <= 0:
            raise InvalidSpec("epoch_ms must be positive")
        self.specs = list(specs)
        self.network = network
        self.base_seed = base_seed
        self.arrival_rate_per_ms = arrival_rate_per_ms
        self.horizon_ms = horizon_ms
        self.level = level
        self._fixed_arrivals = arrivals
        n = len(self.specs)
        self.weights = weights if weights is not None else RewardWeights.uniform(n)
        if len(self.weights.lambdas) != n:
            raise LengthMismatch(f"weights cover {len(self.weights.lambdas)} of {n} services")
        self.slo_ms = slo_ms
        self.penalty_ms = penalty_ms if penalty_ms is not None else 2.0 * slo_ms
        self.ewma_beta = ewma_beta
        self.max_queue = max_queue
        self.epoch_ms = epoch_ms
        self.contention = contention
        self.action_spec = ActionSpec(
            mode=mode,
            n_services=n,
            max_replicas=max(s.replicas for s in self.specs),
        )
        self.mode = mode
        self.cluster: ClusterState | None = None
        self._done = True
        self._pending: DecisionPoint | None = None

    # -- lifecycle --

    @property
    def n_actions(self) -> int:
        return self.action_spec.n_actions

    @property
    def done(self) -> bool:
        return self._done

    @property
    def n_features(self) -> int:
        return FEATURES_PER_SERVICE * len(self.specs)

    def reset(self, episode: int = 0) -> np.ndarray:
        """Fresh cluster plus arrival stream for this episode index."""
        cluster_seed = _derive_seed(self.base_seed, episode, 1)
        self.cluster = ClusterState(
            self.specs,
            self.network,
            cluster_seed,
            max_queue=self.max_queue,
            contention=self.contention,
        )
        if self._fixed_arrivals is not None:
            stream = [
                Request(request_id=r.request_id, arrival_time_ms=r.arrival_time_ms)
                for r in self._fixed_arrivals
            ]
        else:
            stream = generate_arrivals(
                self.arrival_rate_per_ms,
                self.horizon_ms,
                _derive_seed(self.base_seed, episode, 2),
                level=self.level,
            )
        self.cluster.inject_arrivals(stream)
        n = len(self.specs)
        self._ewma_ms = [None] * n
        self._cursors = [0] * n
        self._pending = None
        self._done = False
        self._next_epoch_us = 0
        if self.mode == "routing":
            self._advance_to_decision()
            self._done = self._pending is None
        else:
            # first allocation decision fires immediately at t=0
            self._done = not self.cluster.has_events()
        self._begin_window()
        return self.observe()

    # -- window bookkeeping --

    def _begin_window(self) -> None:
        cluster = self.cluster
        cluster.settle_integrals()
        self._win_start_us = cluster.clock_us
        self._win_in_use = self._integral_snapshot("in_use_integral_us")
        self._win_cap = self._integral_snapshot("cap_integral_us")
        self._cursors = [len(s) for s in cluster.stage_samples]

    def _integral_snapshot(self, field: str) -> list[list[float]]:
        return [
            [sum(getattr(rep, field)[d] for rep in reps) for d in range(4)]
            for reps in self.cluster.replicas
        ]

    def _window_reward(self) -> tuple[float, dict]:
        cluster = self.cluster
        cluster.settle_integrals()
        n = len(self.specs)
        responses = [0.0] * n
        utils = [0.0] * n
        completions = [0] * n
        for sid in range(n):
            samples = cluster.stage_samples[sid][self._cursors[sid] :]
            if samples:
                vals = [ms for _, ms in samples]
                responses[sid] = sum(vals) / len(vals)
                completions[sid] = len(vals)
                for v in vals:
                    prev = self._ewma_ms[sid]
                    self._ewma_ms[sid] = (
                        v if prev is None else (1.0 - self.ewma_beta) * prev + self.ewma_beta * v
                    )
            else:
                responses[sid] = self.penalty_ms
            new_in_use = [
                sum(rep.in_use_integral_us[d] for rep in cluster.replicas[sid])
                for d in range(4)
            ]
            new_cap = [
                sum(rep.cap_integral_us[d] for rep in cluster.replicas[sid])
                for d in range(4)
            ]
            fracs = []
            for d in range(4):
                dcap = new_cap[d] - self._win_cap[sid][d]
                if dcap > 0:
                    fracs.append((new_in_use[d] - self._win_in_use[sid][d]) / dcap)
                else:
                    fracs.append(self._instant_util(sid, d))
            utils[sid] = sum(fracs) / 4.0
        r = reward(self.weights.lambdas, self.weights.alphas, responses, utils)
        info = {
            "window_ms": (cluster.clock_us - self._win_start_us) / 1000.0,
            "responses_ms": responses,
            "utilizations": utils,
            "completions": completions,
        }
        return r, info

    def _instant_util(self, sid: int, dim: int) -> float:
        reps = self.cluster.replicas[sid]
        total_cap = sum(rep.capacity[dim] for rep in reps)
        if total_cap <= 0:
            return 0.0
        return sum(rep.in_use[dim] for rep in reps) / total_cap

    # -- observation --

    def observe(self) -> np.ndarray:
        state = np.zeros(self.n_features, dtype=np.float64)
        cluster = self.cluster
        for sid in range(len(self.specs)):
            base = sid * FEATURES_PER_SERVICE
            for d in range(4):
                state[base + d] = self._instant_util(sid, d)
            reps = cluster.replicas[sid]
            if self.max_queue:
                fill = sum(len(rep.queue) for rep in reps) / (self.max_queue * len(reps))
            else:
                fill = 0.0
            state[base + 4] = fill
            ewma = self._ewma_ms[sid]
            state[base + 5] = 0.0 if ewma is None else ewma / self.penalty_ms
        np.clip(state, 0.0, 1.0, out=state)
        return state

    # -- stepping --

    def _advance_to_decision(self) -> None:
        cluster = self.cluster
        self._pending = None
        while cluster.has_events():
            _, dp = cluster.advance()
            if dp is not None:
                self._pending = dp
                return

    def _auto_route(self, dp: DecisionPoint) -> None:
        best = min(dp.candidates, key=lambda i: dp.loads[i])
        self.cluster.place(dp, best)

    def step(self, action: int) -> tuple[np.ndarray, float, bool, dict]:
        """Apply one action, run to the next decision, return the transition."""
        if self._done or self.cluster is None:
            raise EpisodeOver("call reset() before stepping")
        if self.mode == "routing":
            slot = self.action_spec.decode(action)
            dp = self._pending
            replica = slot % len(dp.candidates)
            self.cluster.place(dp, replica)
            self._advance_to_decision()
            terminal = self._pending is None
        else:
            sid, tier = self.action_spec.decode(action)
            self.cluster.rescale_capacity(sid, tier)
            self._next_epoch_us += int(round(self.epoch_ms * 1000.0))
            cluster = self.cluster
            while cluster.has_events() and cluster.next_event_us() < self._next_epoch_us:
                _, dp = cluster.advance()
                if dp is not None:
                    self._auto_route(dp)
            terminal = not cluster.has_events()
        r, info = self._window_reward()
        obs = self.observe()
        self._begin_window()
        self._done = terminal
        if not terminal and self.mode == "routing":
            dp = self._pending
            info["decision"] = {
                "service_id": dp.service_id,
                "candidates": list(dp.candidates),
                "loads": list(dp.loads),
            }
        info["clock_ms"] = self.cluster.clock_ms
        return obs, r, terminal, info

    def pending_decision(self) -> DecisionPoint | None:
        return self._pending

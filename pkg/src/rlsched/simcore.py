"""Deterministic discrete-event simulation of a microservice cluster.

Requests flow through a directed acyclic graph of services. Each service
runs a fixed set of replicas with finite multi-dimensional capacity; a
replica serves any number of requests concurrently as long as their summed
demand fits, and queues the rest FIFO up to a bounded length. The clock is
kept in integer microseconds so event ordering never depends on float
rounding; ties break on insertion order.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CyclicTopology,
    EmptyQueue,
    InvalidReplica,
    InvalidSpec,
    PastTimestamp,
    UnstableSystem,
)

US_PER_MS = 1000

RESOURCE_DIMS = ("cpu", "memory", "storage", "network")

# event kinds; plain ints keep heap entries cheap
ARRIVAL = 0
STAGE_READY = 1
SERVICE_DONE = 2

_KIND_NAMES = {ARRIVAL: "arrival", STAGE_READY: "stage_ready", SERVICE_DONE: "service_done"}

# admission tolerance for float demand accounting
_EPS = 1e-9


def ms_to_us(t_ms: float) -> int:
    return int(round(t_ms * US_PER_MS))


def us_to_ms(t_us: int) -> float:
    return t_us / US_PER_MS


def make_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent generator for (seed, stream); streams never overlap."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream])))


# ----- static description types -----


@dataclass(frozen=True)
class ResourceVector:
    """Non-negative quantity over the four resource dimensions."""

    cpu: float = 0.0
    memory: float = 0.0
    storage: float = 0.0
    network: float = 0.0

    def __post_init__(self) -> None:
        for dim in RESOURCE_DIMS:
            v = getattr(self, dim)
            if not math.isfinite(v) or v < 0:
                raise InvalidSpec(f"resource component {dim}={v!r} must be finite and >= 0")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.cpu, self.memory, self.storage, self.network)

    def fits_within(self, other: "ResourceVector") -> bool:
        """Component-wise <=."""
        return all(a <= b for a, b in zip(self.as_tuple(), other.as_tuple()))

    def scaled(self, factor: float) -> "ResourceVector":
        return ResourceVector(*(v * factor for v in self.as_tuple()))


@dataclass(frozen=True)
class ServiceSpec:
    """One service: replica count, per-replica capacity, demand, downstream edges."""

    service_id: int
    replicas: int
    capacity_per_replica: ResourceVector
    base_service_time_ms: float
    demand_per_request: ResourceVector
    downstream: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "downstream", tuple(self.downstream))
        if self.replicas < 1:
            raise InvalidSpec(f"service {self.service_id}: replicas must be >= 1")
        if not (math.isfinite(self.base_service_time_ms) and self.base_service_time_ms > 0):
            raise InvalidSpec(f"service {self.service_id}: base_service_time_ms must be > 0")
        if not self.demand_per_request.fits_within(self.capacity_per_replica):
            raise InvalidSpec(
                f"service {self.service_id}: one request must fit an idle replica"
            )
        if len(set(self.downstream)) != len(self.downstream):
            raise InvalidSpec(f"service {self.service_id}: duplicate downstream edge")


@dataclass(frozen=True)
class NetworkModel:
    """Per-hop latency with symmetric uniform jitter."""

    per_hop_latency_ms: float = 0.0
    jitter_fraction: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.per_hop_latency_ms) and self.per_hop_latency_ms >= 0):
            raise InvalidSpec("per_hop_latency_ms must be finite and >= 0")
        if not (0.0 <= self.jitter_fraction < 1.0):
            raise InvalidSpec("jitter_fraction must lie in [0, 1)")

    def sample_hop_us(self, rng: np.random.Generator) -> int:
        if self.per_hop_latency_ms == 0.0:
            return 0
        factor = 1.0
        if self.jitter_fraction > 0.0:
            factor = 1.0 + self.jitter_fraction * (2.0 * rng.random() - 1.0)
        return max(0, int(round(self.per_hop_latency_ms * factor * US_PER_MS)))


# ----- dynamic per-request / per-replica state -----


@dataclass(slots=True)
class Request:
    """One request and its progress through the service graph."""

    request_id: int
    arrival_time_ms: float
    current_stage: int = 0
    path_taken: list[tuple[int, int]] = field(default_factory=list)
    completion_time_ms: float | None = None
    rejected: bool = False
    # internal flow tracking
    _arrival_us: int = 0
    _sinks_done: int = 0
    _arrived: dict[int, int] | None = None
    _ready_us: dict[int, int] = field(default_factory=dict)


class ReplicaState:
    """Mutable occupancy of one replica.

    in_use accumulates demand vectors of requests currently in service.
    Busy-time integrals are kept lazily: they advance whenever occupancy or
    capacity changes, so reading them at time t needs accumulate(t) first.
    """

    __slots__ = (
        "capacity",
        "in_use",
        "queue",
        "busy_until_us",
        "in_service",
        "in_use_integral_us",
        "cap_integral_us",
        "util_cpu_integral_us",
        "_last_update_us",
    )

    def __init__(self, capacity: ResourceVector):
        self.capacity: list[float] = list(capacity.as_tuple())
        self.in_use: list[float] = [0.0, 0.0, 0.0, 0.0]
        self.queue: deque[int] = deque()
        self.busy_until_us = 0
        self.in_service = 0
        self.in_use_integral_us: list[float] = [0.0, 0.0, 0.0, 0.0]
        self.cap_integral_us: list[float] = [0.0, 0.0, 0.0, 0.0]
        self.util_cpu_integral_us = 0.0
        self._last_update_us = 0

    def accumulate(self, now_us: int) -> None:
        dt = now_us - self._last_update_us
        if dt > 0:
            for d in range(4):
                self.in_use_integral_us[d] += self.in_use[d] * dt
                self.cap_integral_us[d] += self.capacity[d] * dt
            if self.capacity[0] > 0.0:
                self.util_cpu_integral_us += (self.in_use[0] / self.capacity[0]) * dt
            self._last_update_us = now_us

    def fits(self, demand: tuple[float, float, float, float]) -> bool:
        in_use = self.in_use
        cap = self.capacity
        return all(in_use[d] + demand[d] <= cap[d] + _EPS for d in range(4))

    def queue_len(self) -> int:
        return len(self.queue)


@dataclass
class DecisionPoint:
    """A request waiting at a service; the scheduler must pick a replica.

    loads snapshots (queue_len, in_use_cpu) per candidate at creation time
    so heuristic policies can act on the decision point alone.
    """

    request_id: int
    service_id: int
    candidates: list[int]
    loads: list[tuple[int, float]]
    created_us: int


# ----- topology helpers -----


def _topological_order(specs: list[ServiceSpec]) -> list[int]:
    n = len(specs)
    indeg = [0] * n
    for s in specs:
        for d in s.downstream:
            indeg[d] += 1
    ready = [i for i in range(n) if indeg[i] == 0]
    heapq.heapify(ready)
    order: list[int] = []
    indeg_work = list(indeg)
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for d in specs[i].downstream:
            indeg_work[d] -= 1
            if indeg_work[d] == 0:
                heapq.heappush(ready, d)
    if len(order) < n:
        raise CyclicTopology("service graph contains a cycle")
    return order


# ----- the cluster -----


class ClusterState:
    """Event queue, replica occupancy, and counters for one simulation run.

    max_queue bounds each replica queue (None means unbounded, used only by
    the validation mode). contention=False freezes the service-time
    contention factor at 1, again for validation against the closed form.
    """

    def __init__(
        self,
        specs: list[ServiceSpec],
        network: NetworkModel,
        seed: int,
        *,
        max_queue: int | None = 64,
        contention: bool = True,
    ):
        if not specs:
            raise InvalidSpec("cluster needs at least one service")
        if not isinstance(seed, int) or seed < 0:
            raise InvalidSpec("seed must be a non-negative integer")
        if max_queue is not None and max_queue < 0:
            raise InvalidSpec("max_queue must be >= 0 or None")
        for i, s in enumerate(specs):
            if s.service_id != i:
                raise InvalidSpec("service_id values must equal list positions 0..n-1")
            for d in s.downstream:
                if not (0 <= d < len(specs)):
                    raise InvalidSpec(f"service {i}: downstream id {d} out of range")

        self.specs = list(specs)
        self.network = network
        self.rng_seed = seed
        self.max_queue = max_queue
        self.contention = contention

        self.topo_order = _topological_order(self.specs)
        n = len(self.specs)
        indeg = [0] * n
        for s in self.specs:
            for d in s.downstream:
                indeg[d] += 1
        entries = [i for i in range(n) if indeg[i] == 0]
        if len(entries) != 1:
            raise InvalidSpec("cluster needs exactly one entry service (in-degree zero)")
        self.entry = entries[0]
        self._indegree = indeg

        # reachable-from-entry subgraph defines which sinks a request must hit
        reachable = {self.entry}
        frontier = [self.entry]
        while frontier:
            nxt: list[int] = []
            for i in frontier:
                for d in self.specs[i].downstream:
                    if d not in reachable:
                        reachable.add(d)
                        nxt.append(d)
            frontier = nxt
        self.reachable = reachable
        self.n_sinks = sum(1 for i in reachable if not self.specs[i].downstream)

        self.clock_us = 0
        self._seq = 0
        self._events: list[tuple[int, int, int, int, int, int]] = []

        self.replicas: list[list[ReplicaState]] = [
            [ReplicaState(s.capacity_per_replica) for _ in range(s.replicas)] for s in self.specs
        ]
        self._demands = [s.demand_per_request.as_tuple() for s in self.specs]

        self.requests: dict[int, Request] = {}
        self.injected = 0
        self.completed = 0
        self.rejected = 0
        self.response_samples_ms: list[float] = []
        # per service: (completion_us, queue wait + service time in ms)
        self.stage_samples: list[list[tuple[int, float]]] = [[] for _ in self.specs]

        self._rng_service = make_rng(seed, 1)
        self._rng_hop = make_rng(seed, 2)

    # -- properties --

    @property
    def clock_ms(self) -> float:
        return us_to_ms(self.clock_us)

    @property
    def in_flight(self) -> int:
        return self.injected - self.completed - self.rejected

    def has_events(self) -> bool:
        return bool(self._events)

    def next_event_us(self) -> int:
        if not self._events:
            raise EmptyQueue("no pending events")
        return self._events[0][0]

    def check_conservation(self) -> None:
        """Recount request states and compare with the running counters."""
        done = sum(1 for r in self.requests.values() if r.completion_time_ms is not None)
        lost = sum(1 for r in self.requests.values() if r.rejected)
        live = len(self.requests) - done - lost
        if not (
            done == self.completed
            and lost == self.rejected
            and live == self.in_flight
            and self.injected == len(self.requests)
        ):
            raise AssertionError("request conservation violated")

    # -- event plumbing --

    def _push(self, t_us: int, kind: int, rid: int, sid: int, ridx: int) -> None:
        heapq.heappush(self._events, (t_us, self._seq, kind, rid, sid, ridx))
        self._seq += 1

    def inject_arrival(self, request: Request) -> None:
        """Queue an external arrival at the entry service."""
        arrival_us = ms_to_us(request.arrival_time_ms)
        if arrival_us < self.clock_us:
            raise PastTimestamp(
                f"arrival at {request.arrival_time_ms} ms behind clock {self.clock_ms} ms"
            )
        if request.request_id in self.requests:
            raise InvalidSpec(f"duplicate request_id {request.request_id}")
        request._arrival_us = arrival_us
        self.requests[request.request_id] = request
        self.injected += 1
        self._push(arrival_us, ARRIVAL, request.request_id, self.entry, -1)

    def inject_arrivals(self, requests: list[Request]) -> None:
        for r in requests:
            self.inject_arrival(r)

    def advance(self) -> tuple[tuple[str, float, int, int], DecisionPoint | None]:
        """Pop the next event; return (event, decision point or None)."""
        if not self._events:
            raise EmptyQueue("no pending events")
        t, _, kind, rid, sid, ridx = heapq.heappop(self._events)
        self.clock_us = t
        req = self.requests[rid]
        dp: DecisionPoint | None = None

        if kind == SERVICE_DONE:
            self._finish_stage(req, sid, ridx, t)
        elif not req.rejected:
            if kind == STAGE_READY and self._indegree[sid] > 1:
                if req._arrived is None:
                    req._arrived = {}
                count = req._arrived.get(sid, 0) + 1
                req._arrived[sid] = count
                if count < self._indegree[sid]:
                    return (_KIND_NAMES[kind], us_to_ms(t), rid, sid), None
            req._ready_us[sid] = t
            req.current_stage = sid
            reps = self.replicas[sid]
            dp = DecisionPoint(
                request_id=rid,
                service_id=sid,
                candidates=list(range(len(reps))),
                loads=[(len(r.queue), r.in_use[0]) for r in reps],
                created_us=t,
            )
        return (_KIND_NAMES[kind], us_to_ms(t), rid, sid), dp

    def place(self, dp: DecisionPoint, replica_index: int) -> str:
        """Resolve a decision point; returns 'started', 'queued', or 'rejected'."""
        if not (0 <= replica_index < len(self.replicas[dp.service_id])):
            raise InvalidReplica(
                f"service {dp.service_id} has no replica {replica_index}"
            )
        req = self.requests[dp.request_id]
        if req.rejected:
            return "rejected"
        sid = dp.service_id
        rep = self.replicas[sid][replica_index]
        if not rep.queue and rep.fits(self._demands[sid]):
            self._start_service(req, sid, replica_index, self.clock_us)
            return "started"
        if self.max_queue is None or len(rep.queue) < self.max_queue:
            rep.queue.append(req.request_id)
            return "queued"
        req.rejected = True
        self.rejected += 1
        return "rejected"

    # -- internals --

    def _start_service(self, req: Request, sid: int, ridx: int, t_us: int) -> None:
        rep = self.replicas[sid][ridx]
        rep.accumulate(t_us)
        dur_ms = service_time(
            rep, self.specs[sid].base_service_time_ms, self._rng_service, contention=self.contention
        )
        dur_us = max(1, int(round(dur_ms * US_PER_MS)))
        demand = self._demands[sid]
        in_use = rep.in_use
        for d in range(4):
            in_use[d] += demand[d]
        rep.in_service += 1
        done_us = t_us + dur_us
        if done_us > rep.busy_until_us:
            rep.busy_until_us = done_us
        req.path_taken.append((sid, ridx))
        self._push(done_us, SERVICE_DONE, req.request_id, sid, ridx)

    def _finish_stage(self, req: Request, sid: int, ridx: int, t_us: int) -> None:
        rep = self.replicas[sid][ridx]
        rep.accumulate(t_us)
        demand = self._demands[sid]
        in_use = rep.in_use
        for d in range(4):
            v = in_use[d] - demand[d]
            in_use[d] = v if v > _EPS else 0.0
        rep.in_service -= 1

        if not req.rejected:
            self.stage_samples[sid].append((t_us, us_to_ms(t_us - req._ready_us[sid])))

        self._drain_queue(sid, ridx, t_us)

        if req.rejected:
            return
        downstream = self.specs[sid].downstream
        if downstream:
            for nxt in downstream:
                hop = self.network.sample_hop_us(self._rng_hop)
                self._push(t_us + hop, STAGE_READY, req.request_id, nxt, -1)
        else:
            req._sinks_done += 1
            if req._sinks_done == self.n_sinks:
                req.completion_time_ms = us_to_ms(t_us)
                self.completed += 1
                self.response_samples_ms.append(us_to_ms(t_us - req._arrival_us))

    def _drain_queue(self, sid: int, ridx: int, t_us: int) -> None:
        rep = self.replicas[sid][ridx]
        demand = self._demands[sid]
        while rep.queue:
            head = self.requests[rep.queue[0]]
            if head.rejected:
                rep.queue.popleft()
                continue
            if not rep.fits(demand):
                break
            rep.queue.popleft()
            self._start_service(head, sid, ridx, t_us)

    def rescale_capacity(self, service_id: int, factor: float) -> None:
        """Multiply every replica capacity of one service by factor.

        Requests already in service keep their reservation even if the new
        capacity falls below current occupancy; admission simply stalls
        until enough of them drain. Scaling up re-examines the queues.
        """
        if factor <= 0 or not math.isfinite(factor):
            raise InvalidSpec("capacity factor must be positive and finite")
        base = self.specs[service_id].capacity_per_replica.as_tuple()
        for ridx, rep in enumerate(self.replicas[service_id]):
            rep.accumulate(self.clock_us)
            rep.capacity = [c * factor for c in base]
            self._drain_queue(service_id, ridx, self.clock_us)

    def settle_integrals(self) -> None:
        """Advance every busy-time integral to the current clock."""
        for reps in self.replicas:
            for rep in reps:
                rep.accumulate(self.clock_us)


def init_cluster(
    specs: list[ServiceSpec],
    network: NetworkModel,
    seed: int,
    *,
    max_queue: int | None = 64,
    contention: bool = True,
) -> ClusterState:
    """Validate the topology and build a fresh cluster at clock zero."""
    return ClusterState(specs, network, seed, max_queue=max_queue, contention=contention)


def service_time(
    replica: ReplicaState,
    base_ms: float,
    rng: np.random.Generator,
    *,
    contention: bool = True,
) -> float:
    """Exponential service duration, mean base_ms, stretched by contention.

    The contention factor is 1 + in_use_cpu / capacity_cpu evaluated before
    the request is admitted, so an idle replica serves at the base rate.
    Draws exactly one uniform from rng via the inverse CDF -ln(1 - u).
    """
    factor = 1.0
    if contention and replica.capacity[0] > 0.0:
        factor = 1.0 + replica.in_use[0] / replica.capacity[0]
    u = rng.random()
    return base_ms * factor * -math.log1p(-u)


# ----- closed-form validation -----


def run_mm1_validation(
    arrival_rate_per_ms: float,
    service_rate_per_ms: float,
    n_requests: int = 100_000,
    seed: int = 9,
) -> float:
    """Mean response of a single-server FIFO queue, for checking against
    the closed form 1 / (mu - lambda).

    Uses one service, one replica, demand equal to capacity (one request in
    service at a time), unbounded queue, contention disabled.
    """
    if n_requests <= 0:
        raise InvalidSpec("n_requests must be positive")
    if not (arrival_rate_per_ms > 0 and service_rate_per_ms > 0):
        raise InvalidSpec("rates must be positive")
    if arrival_rate_per_ms >= service_rate_per_ms:
        raise UnstableSystem(
            f"offered load {arrival_rate_per_ms} >= capacity {service_rate_per_ms}"
        )
    unit = ResourceVector(1.0, 1.0, 1.0, 1.0)
    spec = ServiceSpec(
        service_id=0,
        replicas=1,
        capacity_per_replica=unit,
        base_service_time_ms=1.0 / service_rate_per_ms,
        demand_per_request=unit,
    )
    cluster = ClusterState(
        [spec], NetworkModel(), seed, max_queue=None, contention=False
    )
    gaps = make_rng(seed, 0).exponential(scale=1.0 / arrival_rate_per_ms, size=n_requests)
    t = 0.0
    for i in range(n_requests):
        t += gaps[i]
        cluster.inject_arrival(Request(request_id=i, arrival_time_ms=t))
    while cluster.has_events():
        _, dp = cluster.advance()
        if dp is not None:
            cluster.place(dp, 0)
    return float(np.mean(cluster.response_samples_ms))

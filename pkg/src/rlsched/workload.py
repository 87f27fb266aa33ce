"""Arrival generation and trace files.

Arrivals are Poisson streams shaped by a load level multiplier and a
resource profile. Traces are CSV files of cluster telemetry records; a
trace can be replayed as an arrival stream, one request per unit of
current_load per record.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec, OrderError, ParseError, SchemaError
from .simcore import RESOURCE_DIMS, Request, ResourceVector, make_rng

TRACE_HEADER = "timestamp_ms,resource_type,utilization,requested_capacity,current_load,response_time_ms"
TRACE_COLUMNS = tuple(TRACE_HEADER.split(","))


class ResourceType(enum.Enum):
    CPU = "cpu"
    MEMORY = "memory"
    STORAGE = "storage"
    NETWORK = "network"


class LoadLevel(enum.Enum):
    """Arrival-rate multiplier applied to a base rate."""

    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    ULTRA_HIGH = "ultra_high"

    @property
    def multiplier(self) -> float:
        return {"low": 1.0, "medium": 2.0, "high": 4.0, "ultra_high": 8.0}[self.value]


class ResourceProfile(enum.Enum):
    """Which demand dimension dominates; the dominant one is 4x the others."""

    CPU_BOUND = "cpu_bound"
    MEMORY_BOUND = "memory_bound"
    STORAGE_BOUND = "storage_bound"
    NETWORK_BOUND = "network_bound"

    def demand(self, unit: float = 1.0) -> ResourceVector:
        dominant = self.value.removesuffix("_bound")
        return ResourceVector(
            **{dim: (4.0 * unit if dim == dominant else unit) for dim in RESOURCE_DIMS}
        )


@dataclass(frozen=True)
class TraceRecord:
    """One telemetry line: utilization snapshot plus observed load."""

    timestamp_ms: float
    resource_type: ResourceType
    utilization: float
    requested_capacity: float
    current_load: int
    response_time_ms: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.utilization <= 1.0):
            raise InvalidSpec(f"utilization {self.utilization} outside [0, 1]")
        if self.current_load < 0:
            raise InvalidSpec("current_load must be >= 0")


# ----- synthetic arrivals -----


def generate_arrivals(
    rate_per_ms: float,
    horizon_ms: float,
    seed: int,
    *,
    level: LoadLevel | None = None,
    start_id: int = 0,
) -> list[Request]:
    """Poisson arrival stream over [0, horizon_ms); rate scaled by level."""
    if rate_per_ms <= 0 or horizon_ms <= 0:
        raise InvalidSpec("rate and horizon must be positive")
    rate = rate_per_ms * (level.multiplier if level is not None else 1.0)
    rng = make_rng(seed, 0)
    out: list[Request] = []
    t = 0.0
    rid = start_id
    # draw gaps in blocks; expected count plus slack keeps redraws rare
    block = max(64, int(rate * horizon_ms * 1.2))
    while True:
        for gap in rng.exponential(scale=1.0 / rate, size=block):
            t += gap
            if t >= horizon_ms:
                return out
            out.append(Request(request_id=rid, arrival_time_ms=t))
            rid += 1


# ----- trace files -----


def _format_float(x: float) -> str:
    return repr(float(x))


def save_trace(records: list[TraceRecord], path: str) -> None:
    """Write records in the canonical CSV form (LF, '.' decimals, UTF-8)."""
    lines = [TRACE_HEADER]
    for r in records:
        lines.append(
            ",".join(
                (
                    _format_float(r.timestamp_ms),
                    r.resource_type.value,
                    _format_float(r.utilization),
                    _format_float(r.requested_capacity),
                    str(r.current_load),
                    _format_float(r.response_time_ms),
                )
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_trace(path: str) -> list[TraceRecord]:
    """Parse a trace CSV; raises SchemaError / ParseError / OrderError."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise SchemaError("empty file", line=1)
    header = lines[0].rstrip("\r")
    if header != TRACE_HEADER:
        got = tuple(header.split(","))
        missing = [c for c in TRACE_COLUMNS if c not in got]
        extra = [c for c in got if c not in TRACE_COLUMNS]
        detail = []
        if missing:
            detail.append(f"missing {missing}")
        if extra:
            detail.append(f"unexpected {extra}")
        if not detail:
            detail.append("columns out of order")
        raise SchemaError("; ".join(detail), line=1)

    records: list[TraceRecord] = []
    prev_ts = -math.inf
    for lineno, raw in enumerate(lines[1:], start=2):
        row = raw.rstrip("\r")
        if row == "":
            raise ParseError("blank line inside data", line=lineno)
        parts = row.split(",")
        if len(parts) != len(TRACE_COLUMNS):
            raise ParseError(
                f"expected {len(TRACE_COLUMNS)} fields, got {len(parts)}", line=lineno
            )
        try:
            ts = float(parts[0])
            util = float(parts[2])
            req_cap = float(parts[3])
            load = int(parts[4])
            resp = float(parts[5])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from exc
        try:
            rtype = ResourceType(parts[1])
        except ValueError as exc:
            raise ParseError(f"unknown resource_type {parts[1]!r}", line=lineno) from exc
        if not all(map(math.isfinite, (ts, util, req_cap, resp))):
            raise ParseError("non-finite value", line=lineno)
        if ts < prev_ts:
            raise OrderError(
                f"timestamp {ts} decreases below {prev_ts}", line=lineno
            )
        prev_ts = ts
        try:
            records.append(
                TraceRecord(
                    timestamp_ms=ts,
                    resource_type=rtype,
                    utilization=util,
                    requested_capacity=req_cap,
                    current_load=load,
                    response_time_ms=resp,
                )
            )
        except InvalidSpec as exc:
            raise ParseError(str(exc), line=lineno) from exc
    return records


def trace_to_arrivals(records: list[TraceRecord], start_id: int = 0) -> list[Request]:
    """Replay a trace as arrivals: current_load requests per record."""
    out: list[Request] = []
    rid = start_id
    for r in records:
        for _ in range(r.current_load):
            out.append(Request(request_id=rid, arrival_time_ms=r.timestamp_ms))
            rid += 1
    return out


def generate_trace(
    n_records: int,
    seed: int,
    *,
    start_ms: float = 0.0,
    mean_gap_ms: float = 10.0,
) -> list[TraceRecord]:
    """Synthesize a plausible telemetry trace (round-trips through CSV)."""
    if n_records < 0:
        raise InvalidSpec("n_records must be >= 0")
    rng = make_rng(seed, 3)
    types = list(ResourceType)
    records: list[TraceRecord] = []
    t = start_ms
    for _ in range(n_records):
        t += float(rng.exponential(scale=mean_gap_ms))
        records.append(
            TraceRecord(
                timestamp_ms=round(t, 3),
                resource_type=types[int(rng.integers(len(types)))],
                utilization=round(float(rng.random()), 4),
                requested_capacity=round(float(rng.uniform(1.0, 16.0)), 3),
                current_load=int(rng.integers(0, 8)),
                response_time_ms=round(float(rng.lognormal(3.0, 0.5)), 3),
            )
        )
    return records

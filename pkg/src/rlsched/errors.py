"""Exception types shared across the package."""


class RlschedError(Exception):
    """Base class for every error raised by this package."""


# ----- cluster simulation -----

class CyclicTopology(RlschedError):
    """Service graph contains a cycle."""


class InvalidSpec(RlschedError):
    """A service or cluster description violates a structural constraint."""


class PastTimestamp(RlschedError):
    """Arrival injected behind the simulation clock."""


class EmptyQueue(RlschedError):
    """advance() called with no pending events."""


class InvalidReplica(RlschedError):
    """Placement named a replica index outside the candidate set."""


class UnstableSystem(RlschedError):
    """Offered load meets or exceeds service capacity in validation mode."""


# ----- environment and agents -----

class EpisodeOver(RlschedError):
    """step() called after the episode reached its terminal state."""


class LengthMismatch(RlschedError):
    """Per-service vectors disagree on the number of services."""


class IndexOutOfRange(RlschedError):
    """Action index outside the action space."""


class EmptyActionSet(RlschedError):
    """Action selection over zero candidates."""


class DimensionMismatch(RlschedError):
    """Input vector does not match the network input layer."""


class ArchitectureMismatch(RlschedError):
    """Online and target networks disagree on layer sizes."""


class NonFiniteLoss(RlschedError):
    """Training loss left the finite range."""


# ----- trace files -----

class TraceError(RlschedError):
    """Base class for trace file problems; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ParseError(TraceError):
    """A trace line failed to parse (bad field count, number, or enum)."""


class SchemaError(TraceError):
    """Trace header does not match the required column set."""


class OrderError(TraceError):
    """Trace timestamps decrease."""


# ----- metrics -----

class ZeroWindow(RlschedError):
    """Rate over a zero-length wall-clock window."""


class NoCompletions(RlschedError):
    """Cost efficiency over schedulers that completed nothing."""


class ZeroOffered(RlschedError):
    """Scheduling efficiency with no offered requests."""


class EmptySample(RlschedError):
    """Response statistics over an empty sample."""


# ----- benchmark harness -----

class ConfigError(RlschedError):
    """Experiment config rejected; message names the offending field path."""


class IoError(RlschedError, OSError):
    """Report emission failed at the filesystem."""

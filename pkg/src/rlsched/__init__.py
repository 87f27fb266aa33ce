"""Microservice cluster simulation with learned and heuristic schedulers."""

from . import errors
from .agents import (
    GreedyNetworkPolicy,
    GreedyTablePolicy,
    LearningParams,
    LeastLoadedPolicy,
    Policy,
    QTable,
    RandomPolicy,
    ReplayBuffer,
    RoundRobinPolicy,
    StaticPolicy,
    q_update,
    select_action,
    td_targets,
    train_dqn,
    train_tabular,
)
from .bench import (
    CompareResult,
    ExperimentConfig,
    SweepResult,
    emit_reports,
    load_config,
    parse_config,
    reference_config,
    run_compare,
    sweep_latency,
    sweep_load,
    sweep_resource,
)
from .metrics import (
    EnergyModel,
    MetricsReport,
    build_report,
    cost_efficiency,
    energy,
    response_stats,
    scheduling_efficiency,
    throughput,
    utilization,
)
from .rlenv import ActionSpec, RewardWeights, SchedulingEnv, Transition, reward
from .simcore import (
    ClusterState,
    DecisionPoint,
    NetworkModel,
    ReplicaState,
    Request,
    ResourceVector,
    ServiceSpec,
    init_cluster,
    run_mm1_validation,
    service_time,
)
from .valuenet import TargetNetwork, ValueNetwork, sgd_step, sync_target
from .workload import (
    LoadLevel,
    ResourceProfile,
    TraceRecord,
    generate_arrivals,
    generate_trace,
    load_trace,
    save_trace,
    trace_to_arrivals,
)

__version__ = "0.1.0"

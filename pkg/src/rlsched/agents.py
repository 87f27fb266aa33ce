"""Learning schedulers and fixed baselines.

The tabular learner discretizes each state feature into uniform bins and
keeps a dict of action-value rows. The deep learner trains a ValueNetwork
from experience replay against a periodically synced target snapshot.
Baselines share the same act(state, decision) protocol so every scheduler
plugs into the benchmark loop unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyActionSet, InvalidSpec
from .rlenv import Transition
from .simcore import DecisionPoint, make_rng
from .valuenet import TargetNetwork, ValueNetwork, sgd_step, sync_target

DEFAULT_BINS = 4


# ----- hyperparameters -----


@dataclass(frozen=True)
class LearningParams:
    """Shared knobs; defaults are the package-wide reference values."""

    alpha: float = 0.1
    gamma: float = 0.95
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 20_000
    learning_rate: float = 1e-3
    replay_capacity: int = 10_000
    batch_size: int = 32
    sync_interval: int = 500
    hidden: tuple[int, ...] = (64, 64)

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha <= 1.0):
            raise InvalidSpec("alpha must lie in (0, 1]")
        if not (0.0 <= self.gamma < 1.0):
            raise InvalidSpec("gamma must lie in [0, 1)")
        if not (0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0):
            raise InvalidSpec("need 0 <= epsilon_end <= epsilon_start <= 1")
        if self.epsilon_decay_steps < 1:
            raise InvalidSpec("epsilon_decay_steps must be >= 1")
        if self.learning_rate <= 0 or self.replay_capacity < 1 or self.batch_size < 1:
            raise InvalidSpec("learning_rate, replay_capacity, batch_size must be positive")
        if self.sync_interval < 1:
            raise InvalidSpec("sync_interval must be >= 1")

    def epsilon_at(self, step: int) -> float:
        """Linear decay from epsilon_start to epsilon_end, then flat."""
        frac = min(1.0, max(0.0, step / self.epsilon_decay_steps))
        return self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)


# ----- tabular learner -----


def q_update(q: float, alpha: float, gamma: float, reward: float, max_next: float) -> float:
    """One-step value update toward reward + gamma * max_next."""
    return q + alpha * (reward + gamma * max_next - q)


def select_action(values: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over a value row; greedy ties break to the lowest index."""
    n = len(values)
    if n == 0:
        raise EmptyActionSet("no actions to select from")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(n))
    return int(np.argmax(values))


def uniform_bins(n_bins: int = DEFAULT_BINS):
    """Discretizer mapping each [0, 1] feature to one of n_bins buckets."""

    def key_fn(state: np.ndarray) -> tuple[int, ...]:
        return tuple(
            min(n_bins - 1, max(0, int(v * n_bins))) for v in state
        )

    return key_fn


class QTable:
    """Sparse action-value table; absent states read as all zeros."""

    def __init__(self, n_actions: int, n_bins: int = DEFAULT_BINS):
        if n_actions < 1:
            raise InvalidSpec("n_actions must be >= 1")
        self.n_actions = n_actions
        self.n_bins = n_bins
        self._table: dict[tuple[int, ...], np.ndarray] = {}

    def __len__(self) -> int:
        return len(self._table)

    def values(self, key: tuple[int, ...]) -> np.ndarray:
        row = self._table.get(key)
        if row is None:
            return np.zeros(self.n_actions, dtype=np.float64)
        return row

    def learn(
        self,
        key: tuple[int, ...],
        action: int,
        reward: float,
        next_key: tuple[int, ...],
        terminal: bool,
        alpha: float,
        gamma: float,
    ) -> float:
        """Apply q_update in place; returns the new value."""
        row = self._table.get(key)
        if row is None:
            row = np.zeros(self.n_actions, dtype=np.float64)
            self._table[key] = row
        max_next = 0.0 if terminal else float(np.max(self.values(next_key)))
        row[action] = q_update(float(row[action]), alpha, gamma, reward, max_next)
        return float(row[action])

    def greedy(self, key: tuple[int, ...]) -> int:
        return int(np.argmax(self.values(key)))

    # -- serialization: sorted "bin,bin,... v0 v1 ..." lines --

    def save(self, path: str) -> None:
        lines = [
            "qtable v1",
            f"actions {self.n_actions} bins {self.n_bins}",
        ]
        for key in sorted(self._table):
            row = self._table[key]
            lines.append(
                ",".join(str(k) for k in key)
                + "\t"
                + " ".join(repr(float(v)) for v in row)
            )
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str) -> "QTable":
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
        if not lines or lines[0] != "qtable v1":
            raise InvalidSpec("not a qtable v1 file")
        head = lines[1].split()
        if len(head) != 4 or head[0] != "actions" or head[2] != "bins":
            raise InvalidSpec("malformed qtable header")
        table = cls(int(head[1]), int(head[3]))
        for ln in lines[2:]:
            if not ln:
                continue
            key_part, _, val_part = ln.partition("\t")
            key = tuple(int(tok) for tok in key_part.split(","))
            row = np.array([float(tok) for tok in val_part.split()], dtype=np.float64)
            if row.shape != (table.n_actions,):
                raise InvalidSpec("qtable row width mismatch")
            table._table[key] = row
        return table


@dataclass
class TabularResult:
    table: QTable
    episode_returns: list[float]
    steps: int


def train_tabular(
    env,
    params: LearningParams,
    episodes: int,
    *,
    seed: int = 0,
    key_fn=None,
    max_steps: int | None = None,
) -> TabularResult:
    """Epsilon-greedy tabular control on any env with reset/step/n_actions."""
    if key_fn is None:
        key_fn = uniform_bins(DEFAULT_BINS)
    table = QTable(env.n_actions, DEFAULT_BINS)
    rng = make_rng(seed, 10)
    returns: list[float] = []
    step = 0
    for ep in range(episodes):
        obs = env.reset(ep)
        key = key_fn(obs)
        done = False
        total = 0.0
        while not done:
            action = select_action(table.values(key), params.epsilon_at(step), rng)
            obs, r, done, _ = env.step(action)
            next_key = key_fn(obs)
            table.learn(key, action, r, next_key, done, params.alpha, params.gamma)
            key = next_key
            total += r
            step += 1
            if max_steps is not None and step >= max_steps:
                returns.append(total)
                return TabularResult(table, returns, step)
        returns.append(total)
    return TabularResult(table, returns, step)


# ----- replay and deep learner -----


class ReplayBuffer:
    """Fixed-capacity ring; oldest transitions evicted first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise InvalidSpec("capacity must be >= 1")
        self.capacity = capacity
        self._buf: list[Transition] = []
        self._pos = 0

    def __len__(self) -> int:
        return len(self._buf)

    def push(self, t: Transition) -> None:
        if len(self._buf) < self.capacity:
            self._buf.append(t)
        else:
            self._buf[self._pos] = t
            self._pos = (self._pos + 1) % self.capacity

    def __iter__(self):
        """Oldest to newest."""
        if len(self._buf) < self.capacity:
            yield from self._buf
        else:
            yield from self._buf[self._pos :]
            yield from self._buf[: self._pos]

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if not self._buf:
            raise EmptyActionSet("cannot sample from an empty buffer")
        idx = rng.integers(0, len(self._buf), size=batch_size)
        return [self._buf[i] for i in idx]


def td_targets(
    batch: list[Transition],
    online: ValueNetwork,
    target: ValueNetwork,
    gamma: float,
) -> np.ndarray:
    """Bootstrap targets: r for terminal steps, else r + gamma * max target(s')."""
    next_states = np.stack([t.next_state for t in batch])
    next_q = target.forward(next_states)
    best = next_q.max(axis=1)
    out = np.empty(len(batch), dtype=np.float64)
    for i, t in enumerate(batch):
        out[i] = t.reward if t.terminal else t.reward + gamma * best[i]
    return out


@dataclass
class DqnResult:
    network: ValueNetwork
    episode_returns: list[float]
    losses: list[float]
    steps: int


def train_dqn(
    env,
    params: LearningParams,
    episodes: int,
    *,
    seed: int = 0,
    max_steps: int | None = None,
) -> DqnResult:
    """Experience-replay DQN with a frozen target refreshed every sync_interval."""
    sizes = [env.n_features, *params.hidden, env.n_actions]
    net = ValueNetwork.initialized(sizes, make_rng(seed, 20))
    target = TargetNetwork(net, params.sync_interval)
    buffer = ReplayBuffer(params.replay_capacity)
    rng_act = make_rng(seed, 21)
    rng_sample = make_rng(seed, 22)
    returns: list[float] = []
    losses: list[float] = []
    step = 0
    for ep in range(episodes):
        obs = env.reset(ep)
        done = False
        total = 0.0
        while not done:
            q = net.forward(obs)
            action = select_action(q, params.epsilon_at(step), rng_act)
            nxt, r, done, _ = env.step(action)
            buffer.push(Transition(obs, action, r, nxt, done))
            obs = nxt
            total += r
            step += 1
            if len(buffer) >= params.batch_size:
                batch = buffer.sample(params.batch_size, rng_sample)
                y = td_targets(batch, net, target.net, params.gamma)
                states = np.stack([t.state for t in batch])
                actions = np.array([t.action for t in batch], dtype=np.int64)
                losses.append(sgd_step(net, states, actions, y, params.learning_rate))
            target.maybe_sync(net, step)
            if max_steps is not None and step >= max_steps:
                returns.append(total)
                return DqnResult(net, returns, losses, step)
        returns.append(total)
    return DqnResult(net, returns, losses, step)


# ----- schedulers: one act() protocol for the benchmark loop -----


class Policy:
    """act(state, decision) -> action index; reseed() restarts randomness."""

    def reseed(self, seed: int) -> None:
        pass

    def act(self, state: np.ndarray, decision: DecisionPoint | None) -> int:
        raise NotImplementedError


class StaticPolicy(Policy):
    """Always the first replica."""

    def act(self, state, decision) -> int:
        return 0


class RoundRobinPolicy(Policy):
    """Cyclic counter per service."""

    def __init__(self):
        self._counters: dict[int, int] = {}

    def reseed(self, seed: int) -> None:
        self._counters.clear()

    def act(self, state, decision) -> int:
        sid = decision.service_id
        k = self._counters.get(sid, 0)
        self._counters[sid] = k + 1
        return k % len(decision.candidates)


class LeastLoadedPolicy(Policy):
    """Smallest (queue length, cpu in use), ties to the lowest index."""

    def act(self, state, decision) -> int:
        return min(decision.candidates, key=lambda i: decision.loads[i])


class RandomPolicy(Policy):
    """Uniform over candidates."""

    def __init__(self, seed: int = 0):
        self._seed = seed
        self._rng = make_rng(seed, 30)

    def reseed(self, seed: int) -> None:
        self._rng = make_rng(seed, 30)

    def act(self, state, decision) -> int:
        return int(self._rng.integers(len(decision.candidates)))


class GreedyTablePolicy(Policy):
    """Greedy over a trained QTable."""

    def __init__(self, table: QTable, key_fn=None):
        self.table = table
        self.key_fn = key_fn if key_fn is not None else uniform_bins(table.n_bins)

    def act(self, state, decision) -> int:
        return self.table.greedy(self.key_fn(state))


class GreedyNetworkPolicy(Policy):
    """Greedy over a trained ValueNetwork."""

    def __init__(self, network: ValueNetwork):
        self.network = network

    def act(self, state, decision) -> int:
        return int(np.argmax(self.network.forward(state)))

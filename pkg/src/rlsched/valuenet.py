"""Fully-connected action-value network in plain numpy.

float64 end to end, ReLU hidden layers, identity output. Training is
squared TD error on the taken action only, minimized by plain gradient
descent; no momentum or adaptive step sizes. Parameters serialize to a
self-describing text format so checkpoints stay diffable.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ArchitectureMismatch, DimensionMismatch, InvalidSpec, NonFiniteLoss


class ValueNetwork:
    """Weights as a list of (out, in) matrices plus bias vectors."""

    def __init__(self, sizes: list[int], weights: list[np.ndarray], biases: list[np.ndarray]):
        if len(sizes) < 2:
            raise InvalidSpec("network needs at least input and output layers")
        if len(weights) != len(sizes) - 1 or len(biases) != len(sizes) - 1:
            raise InvalidSpec("one weight matrix and bias per layer transition")
        for k in range(len(sizes) - 1):
            if weights[k].shape != (sizes[k + 1], sizes[k]):
                raise InvalidSpec(f"weight {k} shape {weights[k].shape} != {(sizes[k+1], sizes[k])}")
            if biases[k].shape != (sizes[k + 1],):
                raise InvalidSpec(f"bias {k} shape {biases[k].shape} != {(sizes[k+1],)}")
        self.sizes = list(sizes)
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]

    # -- construction --

    @classmethod
    def initialized(cls, sizes: list[int], rng: np.random.Generator) -> "ValueNetwork":
        """He-scaled normal weights, zero biases."""
        weights = []
        biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            scale = math.sqrt(2.0 / fan_in)
            weights.append(rng.normal(0.0, scale, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out, dtype=np.float64))
        return cls(sizes, weights, biases)

    def copy(self) -> "ValueNetwork":
        return ValueNetwork(
            self.sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    # -- inference --

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Action values for one state (1d) or a batch (2d, row per state)."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        X = x[None, :] if single else x
        if X.shape[1] != self.sizes[0]:
            raise DimensionMismatch(f"input width {X.shape[1]} != {self.sizes[0]}")
        a = X
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.T + b
            a = z if k == last else np.maximum(z, 0.0)
        return a[0] if single else a

    def _forward_cached(self, X: np.ndarray):
        """Forward pass keeping activations for the backward pass."""
        acts = [X]
        a = X
        last = len(self.weights) - 1
        pre = []
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.T + b
            pre.append(z)
            a = z if k == last else np.maximum(z, 0.0)
            acts.append(a)
        return acts, pre

    # -- training math --

    def loss_and_grads(
        self,
        states: np.ndarray,
        actions: np.ndarray,
        targets: np.ndarray,
    ):
        """Mean squared TD error over the taken actions, with gradients.

        Only the output unit of the action actually taken receives error;
        the rest of the output layer contributes nothing.
        """
        X = np.asarray(states, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.sizes[0]:
            raise DimensionMismatch(f"states must be (batch, {self.sizes[0]})")
        actions = np.asarray(actions, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.float64)
        batch = X.shape[0]
        if actions.shape != (batch,) or targets.shape != (batch,):
            raise DimensionMismatch("actions and targets must match the batch")

        acts, pre = self._forward_cached(X)
        q = acts[-1]
        taken = q[np.arange(batch), actions]
        diff = taken - targets
        loss = float(np.mean(diff * diff))
        if not math.isfinite(loss):
            raise NonFiniteLoss(f"loss {loss!r}")

        # dL/dq is zero except at the taken action
        delta = np.zeros_like(q)
        delta[np.arange(batch), actions] = 2.0 * diff / batch

        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.weights)
        for k in range(len(self.weights) - 1, -1, -1):
            grads_w[k] = delta.T @ acts[k]
            grads_b[k] = delta.sum(axis=0)
            if k > 0:
                delta = (delta @ self.weights[k]) * (pre[k - 1] > 0.0)
        return loss, grads_w, grads_b

    # -- serialization --

    def save(self, path: str) -> None:
        lines = ["valuenet v1", "sizes " + " ".join(str(s) for s in self.sizes)]
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            lines.append(f"W{k}")
            for row in w:
                lines.append(" ".join(repr(float(v)) for v in row))
            lines.append(f"b{k}")
            lines.append(" ".join(repr(float(v)) for v in b))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str) -> "ValueNetwork":
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
        if not lines or lines[0] != "valuenet v1":
            raise InvalidSpec("not a valuenet v1 file")
        if not lines[1].startswith("sizes "):
            raise InvalidSpec("missing sizes line")
        sizes = [int(tok) for tok in lines[1].split()[1:]]
        weights = []
        biases = []
        i = 2
        for k in range(len(sizes) - 1):
            if lines[i] != f"W{k}":
                raise InvalidSpec(f"expected W{k} marker at line {i + 1}")
            i += 1
            rows = []
            for _ in range(sizes[k + 1]):
                rows.append([float(tok) for tok in lines[i].split()])
                i += 1
            if lines[i] != f"b{k}":
                raise InvalidSpec(f"expected b{k} marker at line {i + 1}")
            i += 1
            bias = [float(tok) for tok in lines[i].split()]
            i += 1
            weights.append(np.array(rows, dtype=np.float64))
            biases.append(np.array(bias, dtype=np.float64))
        return cls(sizes, weights, biases)


# ----- free functions used by the training loop -----


def sgd_step(
    network: ValueNetwork,
    states: np.ndarray,
    actions: np.ndarray,
    targets: np.ndarray,
    learning_rate: float,
) -> float:
    """One in-place gradient descent step; returns the pre-step loss."""
    loss, grads_w, grads_b = network.loss_and_grads(states, actions, targets)
    for w, gw in zip(network.weights, grads_w):
        w -= learning_rate * gw
    for b, gb in zip(network.biases, grads_b):
        b -= learning_rate * gb
    return loss


def sync_target(online: ValueNetwork, target: ValueNetwork) -> None:
    """Copy online parameters into target, bit for bit."""
    if online.sizes != target.sizes:
        raise ArchitectureMismatch(f"{online.sizes} vs {target.sizes}")
    for tw, ow in zip(target.weights, online.weights):
        np.copyto(tw, ow)
    for tb, ob in zip(target.biases, online.biases):
        np.copyto(tb, ob)


class TargetNetwork:
    """Frozen snapshot of an online network, refreshed every sync_interval."""

    def __init__(self, online: ValueNetwork, sync_interval: int):
        if sync_interval < 1:
            raise InvalidSpec("sync_interval must be >= 1")
        self.net = online.copy()
        self.sync_interval = sync_interval

    def maybe_sync(self, online: ValueNetwork, step: int) -> bool:
        if step > 0 and step % self.sync_interval == 0:
            sync_target(online, self.net)
            return True
        return False

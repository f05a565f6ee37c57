"""Softmax-output MLP treatment policy trained to maximize estimated value.

The network maps covariates to K+1 logits; the softmax gives a stochastic
treatment distribution and the argmax the recommended arm. Training is
minibatch gradient descent (Adam by default) on the negative empirical
value, where the per-arm joint-survival values are precomputed and fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PolicyNetwork",
    "TrainConfig",
    "DivergenceError",
    "init_network",
    "policy",
    "decide",
    "empirical_value_loss",
    "loss_and_grad",
    "train",
]


class DivergenceError(RuntimeError):
    pass


@dataclass
class PolicyNetwork:
    """ReLU MLP with layer dims [p, width, ..., K+1]; identity output layer."""

    weights: list  # per layer, shape (d_out, d_in)
    biases: list  # per layer, shape (d_out,)

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def forward(self, X: np.ndarray) -> np.ndarray:
        """Logits for a batch (n, p) -> (n, K+1)."""
        h = np.atleast_2d(np.asarray(X, dtype=float))
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ W.T + b, 0.0)
        return h @ self.weights[-1].T + self.biases[-1]

    def copy(self) -> "PolicyNetwork":
        return PolicyNetwork(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    batch_size: int = 64
    learning_rate: float = 1e-3
    optimizer: str = "adam"  # or "sgd"
    seed: int = 0
    weight_clip: float | None = None
    adam_betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("epochs and batch size must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning rate must be non-negative")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


def init_network(p: int, K: int, width: int = 32, seed: int = 0, depth: int = 2) -> PolicyNetwork:
    """He-uniform initialized network with `depth` hidden layers of `width`."""
    if min(p, K, width, depth) < 1:
        raise ValueError("p, K, width and depth must be >= 1")
    dims = [p] + [width] * depth + [K + 1]
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / d_in)
        weights.append(rng.uniform(-limit, limit, size=(d_out, d_in)))
        biases.append(np.zeros(d_out))
    return PolicyNetwork(weights=weights, biases=biases)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def policy(net: PolicyNetwork, x) -> np.ndarray:
    """Treatment probabilities; (K+1,) for a vector, (n, K+1) for a batch."""
    x = np.asarray(x, dtype=float)
    out = softmax(net.forward(x))
    return out[0] if x.ndim == 1 else out


def decide(net: PolicyNetwork, x):
    """Recommended arm: argmax logit, ties broken toward the smallest index."""
    x = np.asarray(x, dtype=float)
    logits = net.forward(x)
    idx = np.argmax(logits, axis=-1)
    return int(idx[0]) if x.ndim == 1 else idx


def empirical_value_loss(net: PolicyNetwork, X, S) -> float:
    """Negative mean of s' pi(x) over the batch."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.shape[0] != X.shape[0] or S.shape[1] != net.dims[-1]:
        raise ValueError(f"survival matrix shape {S.shape} does not match batch")
    pi = softmax(net.forward(X))
    return float(-np.mean(np.sum(S * pi, axis=1)))


def loss_and_grad(net: PolicyNetwork, X, S):
    """Loss plus analytic gradients w.r.t. all weights and biases."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.shape[0] != X.shape[0] or S.shape[1] != net.dims[-1]:
        raise ValueError(f"survival matrix shape {S.shape} does not match batch")
    n = X.shape[0]
    acts = [X]
    h = X
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        h = np.maximum(h @ W.T + b, 0.0)
        acts.append(h)
    logits = h @ net.weights[-1].T + net.biases[-1]
    pi = softmax(logits)
    value = np.sum(S * pi, axis=1)
    loss = float(-np.mean(value))
    # d loss / d logits: -(pi * s - pi * (s'pi)) / n
    delta = -(pi * S - pi * value[:, None]) / n
    grads_W, grads_b = [], []
    for layer in range(len(net.weights) - 1, -1, -1):
        grads_W.append(delta.T @ acts[layer])
        grads_b.append(delta.sum(axis=0))
        if layer > 0:
            delta = (delta @ net.weights[layer]) * (acts[layer] > 0)
    return loss, grads_W[::-1], grads_b[::-1]


def train(net: PolicyNetwork, X, S, cfg: TrainConfig = TrainConfig()) -> PolicyNetwork:
    """Minibatch training on the value loss; returns the trained network.

    The input network is not modified; the returned network carries the
    full-batch loss trajectory in ``loss_history``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("training data must be nonempty")
    net = net.copy()
    rng = np.random.default_rng(cfg.seed)
    params = net.weights + net.biases
    if cfg.optimizer == "adam":
        m = [np.zeros_like(p) for p in params]
        v = [np.zeros_like(p) for p in params]
        b1, b2 = cfg.adam_betas
        t = 0
    history = []
    n = X.shape[0]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, gW, gb = loss_and_grad(net, X[batch], S[batch])
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}")
            grads = gW + gb
            if cfg.optimizer == "adam":
                t += 1
                for k, (p_, g) in enumerate(zip(params, grads)):
                    m[k] = b1 * m[k] + (1 - b1) * g
                    v[k] = b2 * v[k] + (1 - b2) * g**2
                    mhat = m[k] / (1 - b1**t)
                    vhat = v[k] / (1 - b2**t)
                    p_ -= cfg.learning_rate * mhat / (np.sqrt(vhat) + cfg.adam_eps)
            else:
                for p_, g in zip(params, grads):
                    p_ -= cfg.learning_rate * g
            if cfg.weight_clip is not None:
                for p_ in params:
                    np.clip(p_, -cfg.weight_clip, cfg.weight_clip, out=p_)
        history.append(empirical_value_loss(net, X, S))
    net.loss_history = np.array(history)
    return net

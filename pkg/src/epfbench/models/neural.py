"""Fully connected networks trained with hand-written backpropagation.

A network with no hidden layers is a single linear neuron, which is how the
``dense0`` perceptron is fitted: both share one training loop.
"""

from __future__ import annotations

import numpy as np

from ..features import FeatureMatrix
from .base import DivergenceError, TrainedModel, check_training_matrix
from .specs import MlpSpec, SgdLinearSpec


def init_params(widths, rng: np.random.Generator):
    """Uniform weights in +-1/sqrt(fan_in), zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = 1.0 / np.sqrt(fan_in) if fan_in else 0.0
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _act(z, activation):
    return np.maximum(z, 0.0) if activation == "relu" else z


def forward(weights, biases, X, activation="relu"):
    """Return the output vector and the per-layer (input, pre-activation) cache."""
    a = X
    cache = []
    last = len(weights) - 1
    for i, (W, b) in enumerate(zip(weights, biases)):
        z = a @ W + b
        cache.append((a, z))
        a = z if i == last else _act(z, activation)
    return a[:, 0], cache


def loss_and_grads(weights, biases, X, y, activation="relu"):
    """Mean squared error and its gradients with respect to every weight and bias."""
    out, cache = forward(weights, biases, X, activation)
    resid = out - y
    loss = float(np.mean(resid**2))
    delta = (2.0 / y.size) * resid[:, None]
    grad_w = [None] * len(weights)
    grad_b = [None] * len(weights)
    for i in range(len(weights) - 1, -1, -1):
        a_in, z = cache[i]
        if i != len(weights) - 1 and activation == "relu":
            delta = delta * (z > 0)
        grad_w[i] = a_in.T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i:
            delta = delta @ weights[i].T
    return loss, grad_w, grad_b


class NetworkModel(TrainedModel):
    def __init__(self, spec, columns, weights, biases, activation, loss_trace):
        super().__init__(spec, columns)
        self.weights = weights
        self.biases = biases
        self.activation = activation
        self.loss_trace = np.asarray(loss_trace)

    @property
    def coefficients(self):
        """Per-feature weights; only defined for the single-neuron network."""
        if len(self.weights) != 1:
            return None
        return self.weights[0][:, 0]

    @property
    def intercept(self):
        return float(self.biases[-1][0]) if len(self.weights) == 1 else None

    def _predict(self, X):
        return forward(self.weights, self.biases, X, self.activation)[0]

    def parameters(self):
        params = {}
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            params[f"W{i}"] = W
            params[f"b{i}"] = b
        return params


def train_network(train: FeatureMatrix, hidden, activation, learning_rate, epochs, batch_size, seed, spec):
    check_training_matrix(train)
    X, y = train.X, train.y
    n, p = X.shape
    rng = np.random.default_rng(seed)
    weights, biases = init_params([p, *hidden, 1], rng)
    # start the output at the target mean; features are standardised but prices are not
    biases[-1][:] = y.mean()
    trace = []
    for epoch in range(epochs):
        order = rng.permutation(n)
        for lo in range(0, n, batch_size):
            idx = order[lo : lo + batch_size]
            _, gw, gb = loss_and_grads(weights, biases, X[idx], y[idx], activation)
            for W, G in zip(weights, gw):
                W -= learning_rate * G
            for b, G in zip(biases, gb):
                b -= learning_rate * G
        out = forward(weights, biases, X, activation)[0]
        loss = float(np.mean((out - y) ** 2))
        if not np.isfinite(loss):
            raise DivergenceError(
                f"training diverged at epoch {epoch + 1} (learning rate {learning_rate}); use a smaller learning rate"
            )
        trace.append(loss)
    return NetworkModel(spec, train.columns, weights, biases, activation, trace)


def fit_mlp(train: FeatureMatrix, spec: MlpSpec) -> NetworkModel:
    with np.errstate(over="ignore", invalid="ignore"):
        return train_network(
            train, spec.hidden, spec.activation, spec.learning_rate, spec.epochs, spec.batch_size, spec.seed, spec
        )


def fit_sgd_linear(train: FeatureMatrix, spec: SgdLinearSpec) -> NetworkModel:
    with np.errstate(over="ignore", invalid="ignore"):
        return train_network(train, (), "linear", spec.learning_rate, spec.epochs, spec.batch_size, spec.seed, spec)

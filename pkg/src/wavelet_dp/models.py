"""From-scratch learners used to score privatized data.

Logistic regression minimises the negative log-likelihood
``J = sum_i log(1 + exp(z_i)) - y_i z_i`` with ``z_i = b0 + b1 . x_i`` by
full-batch gradient descent on the summed gradient, with separate learning
rates for the bias and the coefficients.

The shallow network is ``n_in -> 10 (sigmoid) -> 2 (softmax)`` trained on
``E = (1/n) sum_i 0.5 ||softmax(z_i) - y_i||^2 + (lam/2) sum w^2``.  Weight
decay touches weights only, never biases.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import Divergence, NonBinaryLabels, ShapeMismatch

logger = logging.getLogger(__name__)


def _sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _minibatches(n, batch_size, rng):
    if batch_size is None or batch_size >= n:
        yield slice(None)
        return
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


# ---------------------------------------------------------------------------
# logistic regression

@dataclass
class LogisticModel:
    beta0: float
    beta1: np.ndarray

    def logit(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.beta1.shape[0]:
            raise ShapeMismatch(f"input has {X.shape[-1]} features, model expects {self.beta1.shape[0]}")
        return self.beta0 + X @ self.beta1


def _check_binary(y):
    y = np.asarray(y, dtype=float).ravel()
    if not np.isin(y, (0.0, 1.0)).all():
        raise NonBinaryLabels("labels must be 0 or 1")
    return y


def logistic_cost(beta0, beta1, X, y) -> float:
    z = beta0 + np.asarray(X, dtype=float) @ np.asarray(beta1, dtype=float)
    return float(np.sum(np.logaddexp(0.0, z) - y * z))


def logistic_gradient(beta0, beta1, X, y):
    """``(dJ/db0, dJ/db1)`` = ``(sum(p - y), X^T (p - y))``."""
    X = np.asarray(X, dtype=float)
    resid = _sigmoid(beta0 + X @ np.asarray(beta1, dtype=float)) - y
    return float(resid.sum()), X.T @ resid


def train_logistic(X, y, lr0=0.01, lr1=0.01, epochs=500, rng=None, batch_size=None) -> LogisticModel:
    X = np.asarray(X, dtype=float)
    y = _check_binary(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"X {X.shape} and y {y.shape} do not align")
    rng = np.random.default_rng(0) if rng is None else rng
    beta0, beta1 = 0.0, np.zeros(X.shape[1])
    prev = logistic_cost(beta0, beta1, X, y)
    warned = False
    for epoch in range(epochs):
        # overflow surfaces as Divergence below, not as numpy warnings
        with np.errstate(over="ignore", invalid="ignore"):
            for idx in _minibatches(X.shape[0], batch_size, rng):
                g0, g1 = logistic_gradient(beta0, beta1, X[idx], y[idx])
                beta0 -= lr0 * g0
                beta1 = beta1 - lr1 * g1
            cost = logistic_cost(beta0, beta1, X, y)
        if not np.isfinite(cost) or not np.isfinite(beta1).all() or not np.isfinite(beta0):
            raise Divergence(f"logistic cost became non-finite at epoch {epoch}")
        if cost > prev * (1 + 1e-12) and not warned:
            logger.warning("logistic cost increased at epoch %d (%.6g -> %.6g); learning rate may be too large",
                           epoch, prev, cost)
            warned = True
        prev = cost
    return LogisticModel(beta0, beta1)


def predict_logistic(model: LogisticModel, x):
    """Return ``(p, cls)``: probability of label 1 and the class (1 iff p >= 0.5)."""
    z = np.asarray(model.logit(x), dtype=float)
    p = _sigmoid(np.atleast_1d(z))
    cls = (p >= 0.5).astype(int)
    if np.ndim(z) == 0:
        return float(p[0]), int(cls[0])
    return p, cls


# ---------------------------------------------------------------------------
# shallow network

@dataclass
class ShallowNet:
    W1: np.ndarray   # hidden x n_in
    b1: np.ndarray
    W2: np.ndarray   # 2 x hidden
    b2: np.ndarray
    lam: float = 1e-4

    @property
    def sizes(self):
        return [self.W1.shape[1], self.W1.shape[0], self.W2.shape[0]]

    @classmethod
    def initialise(cls, n_in, hidden=10, n_out=2, lam=1e-4, rng=None):
        rng = np.random.default_rng(0) if rng is None else rng
        return cls(rng.uniform(-0.5, 0.5, (hidden, n_in)), np.zeros(hidden),
                   rng.uniform(-0.5, 0.5, (n_out, hidden)), np.zeros(n_out), lam)

    def copy(self):
        return ShallowNet(self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy(), self.lam)


def softmax(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _feed_forward(net, X):
    a2 = _sigmoid(X @ net.W1.T + net.b1)
    a3 = softmax(a2 @ net.W2.T + net.b2)
    return a2, a3


def one_hot(y, classes=2):
    y = np.asarray(y)
    if y.ndim == 2:
        return y.astype(float)
    y = _check_binary(y).astype(int)
    return np.eye(classes)[y]


def net_loss(net: ShallowNet, X, Y) -> float:
    X = np.asarray(X, dtype=float)
    _, a3 = _feed_forward(net, X)
    fit = 0.5 * np.sum((a3 - Y) ** 2) / X.shape[0]
    return float(fit + 0.5 * net.lam * (np.sum(net.W1 ** 2) + np.sum(net.W2 ** 2)))


def net_gradients(net: ShallowNet, X, Y):
    """Backpropagated ``(dW1, db1, dW2, db2)`` of :func:`net_loss`."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    a2, a3 = _feed_forward(net, X)
    g = (a3 - Y) / n
    # softmax Jacobian applied to g, row by row
    d3 = a3 * (g - np.sum(g * a3, axis=1, keepdims=True))
    d2 = (d3 @ net.W2) * a2 * (1.0 - a2)
    return (d2.T @ X + net.lam * net.W1, d2.sum(axis=0),
            d3.T @ a2 + net.lam * net.W2, d3.sum(axis=0))


def train_shallow_net(X, y, alpha1=0.1, alpha2=0.1, lam=1e-4, epochs=2000, rng=None,
                      hidden=10, batch_size=None) -> ShallowNet:
    X = np.asarray(X, dtype=float)
    Y = one_hot(y)
    if X.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ShapeMismatch(f"X {X.shape} and y {Y.shape} do not align")
    rng = np.random.default_rng(0) if rng is None else rng
    net = ShallowNet.initialise(X.shape[1], hidden, Y.shape[1], lam, rng)
    for epoch in range(epochs):
        with np.errstate(over="ignore", invalid="ignore"):
            for idx in _minibatches(X.shape[0], batch_size, rng):
                dW1, db1, dW2, db2 = net_gradients(net, X[idx], Y[idx])
                net.W1 -= alpha1 * dW1
                net.W2 -= alpha1 * dW2
                net.b1 -= alpha2 * db1
                net.b2 -= alpha2 * db2
        if not (np.isfinite(net.W1).all() and np.isfinite(net.W2).all()):
            raise Divergence(f"network weights became non-finite at epoch {epoch}")
    return net


def nn_predict(net: ShallowNet, x):
    """Class probabilities (last axis of length 2) for one sample or a batch."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.W1.shape[1]:
        raise ShapeMismatch(f"input has {x.shape[-1]} features, network expects {net.W1.shape[1]}")
    _, a3 = _feed_forward(net, np.atleast_2d(x))
    return a3[0] if x.ndim == 1 else a3

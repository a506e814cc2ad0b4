"""Minimal classical kernel: linear layers, activations, BCE loss, Adam.

Everything is float64 and batch-aware where noted; backward passes are exact
and verified against finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ShapeError, TrainingError

BCE_EPS = 1e-7


@dataclass
class LinearLayer:
    """Affine map x -> W x + b with W of shape [out_dim][in_dim]."""

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ShapeError(f"inconsistent linear layer shapes W{self.W.shape} b{self.b.shape}")

    @classmethod
    def init(cls, in_dim: int, out_dim: int, rng: np.random.Generator) -> "LinearLayer":
        # uniform in [-k, k], k = 1/sqrt(in_dim), applied to weights and bias
        k = 1.0 / np.sqrt(in_dim)
        return cls(rng.uniform(-k, k, size=(out_dim, in_dim)), rng.uniform(-k, k, size=out_dim))

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]


def linear_forward(layer: LinearLayer, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (layer.in_dim,):
        raise ShapeError(f"expected input of length {layer.in_dim}, got shape {x.shape}")
    return layer.W @ x + layer.b


def linear_backward(layer: LinearLayer, x: np.ndarray, upstream: np.ndarray):
    """Gradients (dW, db, dx) of upstream . (Wx + b)."""
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if x.shape != (layer.in_dim,) or upstream.shape != (layer.out_dim,):
        raise ShapeError(
            f"expected x({layer.in_dim},) and upstream({layer.out_dim},), "
            f"got {x.shape} and {upstream.shape}"
        )
    return np.outer(upstream, x), upstream.copy(), layer.W.T @ upstream


def linear_forward_batch(layer: LinearLayer, X: np.ndarray) -> np.ndarray:
    """Rows of X through the layer: (B, in) -> (B, out)."""
    if X.shape[-1] != layer.in_dim:
        raise ShapeError(f"expected trailing dim {layer.in_dim}, got {X.shape[-1]}")
    return X @ layer.W.T + layer.b


def linear_backward_batch(layer: LinearLayer, X: np.ndarray, upstream: np.ndarray):
    """Batched gradients: dW and db summed over rows, dX per row."""
    return upstream.T @ X, upstream.sum(axis=0), upstream @ layer.W


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic; never underflows to exactly 0 or 1 in range."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_grad_from_output(y: np.ndarray) -> np.ndarray:
    return y * (1.0 - y)


def tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(x)


def tanh_grad_from_output(y: np.ndarray) -> np.ndarray:
    return 1.0 - y * y


def bce_loss(prediction: float, label: float) -> tuple[float, float]:
    """Binary cross-entropy and its gradient w.r.t. the prediction.

    The prediction is clamped to [BCE_EPS, 1 - BCE_EPS] before the logs; the
    gradient is evaluated at the clamped value.
    """
    loss, grad = bce_loss_batch(np.asarray([prediction]), np.asarray([label]))
    return float(loss[0]), float(grad[0])


def bce_loss_batch(predictions: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if predictions.shape != labels.shape:
        raise ShapeError(f"predictions {predictions.shape} vs labels {labels.shape}")
    if not np.all((labels == 0.0) | (labels == 1.0)):
        raise DataError("labels must be 0 or 1")
    p = np.clip(predictions, BCE_EPS, 1.0 - BCE_EPS)
    losses = -(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p))
    grads = -labels / p + (1.0 - labels) / (1.0 - p)
    return losses, grads


@dataclass
class AdamState:
    """Adam accumulators over a named parameter set."""

    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: AdamState, params: dict, grads: dict) -> dict:
    """One Adam update with bias correction; returns the new parameter dict."""
    if set(params) != set(grads):
        raise ShapeError(f"parameter/gradient keys differ: {sorted(set(params) ^ set(grads))}")
    state.t += 1
    t = state.t
    updated = {}
    for name, value in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != value.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {value.shape} for {name}")
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter {name!r} at step {t}")
        if name not in state.m:
            state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)
        m = state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1**t)
        v_hat = v / (1.0 - state.beta2**t)
        updated[name] = value - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return updated

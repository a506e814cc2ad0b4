"""Model construction, the minibatch training loop, and evaluation.

All randomness flows through `derive_rng`, which namespaces independent
streams (model init, per-round/per-node shuffles, partitioning, splitting)
under one experiment seed, so every run is reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .data import Dataset, make_sequences, sequences_to_arrays
from .errors import TrainingError
from .metrics import accuracy, auc, roc_curve
from .nn import AdamState, adam_step
from .qlstm import ClassicalLstmModel, QlstmModel, VqcClassifierModel
from .vqc import VqcSpec

# Stream tags for derive_rng
RNG_INIT = 0
RNG_TRAIN = 1
RNG_PARTITION = 2
RNG_SPLIT = 3


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (seed, purpose, ...) without stream collisions."""
    return np.random.default_rng(np.random.SeedSequence((seed, *key)))


def build_model(config: RunConfig, input_dim: int, rng: np.random.Generator):
    """Instantiate the configured model kind with seeded parameters."""
    spec = VqcSpec(config.n_qubits, config.n_layers, config.encoding, config.entangler)
    if config.model_kind == "vqc":
        return VqcClassifierModel(input_dim, spec, rng)
    flags = dict(
        recurrent_input=config.recurrent_input,
        gate_activation=config.gate_activation,
        output_head_source=config.output_head_source,
    )
    if config.model_kind == "qlstm":
        return QlstmModel(input_dim, config.hidden_dim, spec, rng, **flags)
    if config.model_kind == "lstm":
        return ClassicalLstmModel(input_dim, config.hidden_dim, config.n_qubits, rng, **flags)
    raise ValueError(f"unknown model kind {config.model_kind!r}")


def snapshot_parameters(model) -> dict:
    return {name: value.copy() for name, value in model.parameters().items()}


def train_model(
    model,
    X: np.ndarray,
    y: np.ndarray,
    *,
    epochs: int,
    lr: float,
    batch_size: int,
    rng: np.random.Generator,
) -> list[float]:
    """Seeded-shuffle minibatch Adam training; returns per-epoch mean losses."""
    adam = AdamState(lr=lr)
    n = len(y)
    losses: list[float] = []
    for epoch in range(epochs):
        perm = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            idx = perm[start : start + batch_size]
            try:
                loss, grads = model.loss_and_gradients(X[idx], y[idx])
                model.set_parameters(adam_step(adam, model.parameters(), grads))
            except TrainingError as exc:
                raise TrainingError(f"epoch {epoch}: {exc}") from exc
            epoch_loss += loss * len(idx)
        mean_loss = epoch_loss / n
        if not np.isfinite(mean_loss):
            raise TrainingError(f"epoch {epoch}: non-finite training loss")
        losses.append(mean_loss)
    return losses


def predict_scores(model, X: np.ndarray, chunk: int = 512) -> np.ndarray:
    parts = [model.forward_batch(X[i : i + chunk]) for i in range(0, len(X), chunk)]
    return np.concatenate(parts)


@dataclass
class EvalResult:
    auc: float
    accuracy: float
    scores: np.ndarray
    roc_rows: list


def evaluate_model(model, X: np.ndarray, y: np.ndarray) -> EvalResult:
    scores = predict_scores(model, X)
    curve = roc_curve(scores, y)
    return EvalResult(auc(curve), accuracy(scores, y), scores, curve.rows())


def dataset_to_arrays(dataset: Dataset, window: int) -> tuple[np.ndarray, np.ndarray]:
    return sequences_to_arrays(make_sequences(dataset, window))

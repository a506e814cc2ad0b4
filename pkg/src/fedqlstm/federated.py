"""Simulated federated averaging: IID partitioning, local training, merging.

The federation is simulated in process. Each round broadcasts the global
parameters, trains every node for the configured local epochs with a fresh
optimizer, and merges the snapshots by exact weighted averaging. The
node-server boundary is a plain parameter dict, so a wire protocol could be
added without touching the training code. Node training is a pure function
of (broadcast parameters, shard, derived seed); with FEDQLSTM_WORKERS > 1
nodes train in parallel processes and the result is identical to the
sequential schedule.

Centralized training lives here too, as the degenerate single-shard case:
it routes the training set through the same seeded shuffle as a one-node
partition, which makes one-node/one-round federation bitwise equal to it.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .data import Dataset
from .errors import AggregationError, ConfigError, TrainingError
from .nn import AdamState
from .training import (
    RNG_INIT,
    RNG_PARTITION,
    RNG_TRAIN,
    EvalResult,
    build_model,
    dataset_to_arrays,
    derive_rng,
    evaluate_model,
    snapshot_parameters,
    train_model,
)


@dataclass
class FedConfig:
    """Federation topology and schedule."""

    n_nodes: int
    global_rounds: int = 5
    local_epochs: int = 30
    aggregation: str = "sample_weighted"
    seed: int = 0


@dataclass
class NodeState:
    node_id: int
    shard: Dataset
    params: dict
    optimizer: AdamState | None = None
    loss_trace: list = field(default_factory=list)


@dataclass
class RoundMetrics:
    round_index: int
    node_count: int
    model_kind: str
    train_loss: float
    test_auc: float
    test_accuracy: float
    wall_time_s: float

    def row(self) -> list:
        return [
            self.round_index,
            self.node_count,
            self.model_kind,
            self.train_loss,
            self.test_auc,
            self.test_accuracy,
            self.wall_time_s,
        ]


ROUND_LOG_COLUMNS = ("round", "node_count", "model_kind", "train_loss", "test_auc", "test_accuracy", "wall_time_s")


@dataclass
class FederationResult:
    model: object
    rounds: list
    final: EvalResult


def partition_iid(dataset: Dataset, n_nodes: int, seed: int) -> list[Dataset]:
    """Seeded shuffle, then a contiguous split into near-equal disjoint shards."""
    if n_nodes < 1:
        raise ConfigError(f"n_nodes must be >= 1, got {n_nodes}")
    if n_nodes > len(dataset):
        raise ConfigError(f"cannot split {len(dataset)} samples across {n_nodes} nodes")
    rng = derive_rng(seed, RNG_PARTITION)
    perm = rng.permutation(len(dataset))
    shards = []
    for chunk in np.array_split(perm, n_nodes):
        shards.append(Dataset(dataset.features[chunk], dataset.labels[chunk], dataset.feature_names))
    return shards


def fedavg(snapshots: list[dict], weights: list[float]) -> dict:
    """Exactly rounded weighted mean of parameter snapshots.

    Weights are normalized first and each scalar is reduced with math.fsum, so
    the result is the correctly rounded mean: permutation-invariant by
    construction, and the identity for a single snapshot.
    """
    if not snapshots:
        raise AggregationError("no snapshots to aggregate")
    if len(weights) != len(snapshots):
        raise AggregationError(f"{len(snapshots)} snapshots but {len(weights)} weights")
    weights = [float(w) for w in weights]
    if any(w < 0 for w in weights):
        raise AggregationError("weights must be non-negative")
    total = math.fsum(weights)
    if total <= 0:
        raise AggregationError("at least one weight must be positive")
    normalized = [w / total for w in weights]
    keys = list(snapshots[0])
    for snap in snapshots[1:]:
        if list(snap) != keys:
            raise AggregationError("snapshots have different parameter sets")
    out = {}
    for key in keys:
        arrays = [np.asarray(s[key], dtype=np.float64) for s in snapshots]
        shape = arrays[0].shape
        for a in arrays[1:]:
            if a.shape != shape:
                raise AggregationError(f"shape mismatch for {key}: {a.shape} vs {shape}")
        stacked = np.stack([a.reshape(-1) for a in arrays])
        merged = np.empty(stacked.shape[1])
        for i in range(stacked.shape[1]):
            merged[i] = math.fsum(w * x for w, x in zip(normalized, stacked[:, i]))
        out[key] = merged.reshape(shape)
    return out


def local_train(
    node: NodeState, config: RunConfig, epochs: int, rng: np.random.Generator
) -> NodeState:
    """Train one node from its current parameters; returns the updated state."""
    model = build_model(config, node.shard.features.shape[1], derive_rng(0, RNG_INIT))
    model.set_parameters(node.params)
    X, y = dataset_to_arrays(node.shard, config.window)
    try:
        losses = train_model(
            model, X, y, epochs=epochs, lr=config.lr, batch_size=config.batch_size, rng=rng
        )
    except TrainingError as exc:
        raise TrainingError(f"node {node.node_id}: {exc}") from exc
    return NodeState(node.node_id, node.shard, snapshot_parameters(model), loss_trace=losses)


def _node_job(payload) -> tuple[int, dict, list]:
    config, node_id, shard, params, epochs, seed, round_index = payload
    node = NodeState(node_id, shard, params)
    rng = derive_rng(seed, RNG_TRAIN, round_index, node_id)
    trained = local_train(node, config, epochs, rng)
    return node_id, trained.params, trained.loss_trace


def _worker_count() -> int:
    raw = os.environ.get("FEDQLSTM_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_federation(
    fed: FedConfig, config: RunConfig, train_ds: Dataset, test_ds: Dataset, on_round=None
) -> FederationResult:
    """Full federated run; returns the global model and per-round metrics.

    `on_round` is called with each RoundMetrics as it completes, so callers
    can append to a run log while the federation is still training.
    """
    input_dim = train_ds.features.shape[1]
    model = build_model(config, input_dim, derive_rng(fed.seed, RNG_INIT))
    global_params = snapshot_parameters(model)
    shards = partition_iid(train_ds, fed.n_nodes, fed.seed)
    if fed.aggregation == "sample_weighted":
        weights = [float(len(s)) for s in shards]
    else:
        weights = [1.0] * fed.n_nodes
    test_X, test_y = dataset_to_arrays(test_ds, config.window)
    workers = _worker_count()
    rounds: list[RoundMetrics] = []
    final_eval: EvalResult | None = None
    for round_index in range(fed.global_rounds):
        start = time.perf_counter()
        payloads = [
            (config, node_id, shards[node_id], global_params, fed.local_epochs, fed.seed, round_index)
            for node_id in range(fed.n_nodes)
        ]
        if workers > 1 and fed.n_nodes > 1:
            with ProcessPoolExecutor(max_workers=min(workers, fed.n_nodes)) as pool:
                results = list(pool.map(_node_job, payloads))
        else:
            results = [_node_job(p) for p in payloads]
        results.sort(key=lambda r: r[0])  # fixed reduction order
        global_params = fedavg([params for _, params, _ in results], weights)
        model.set_parameters(global_params)
        final_eval = evaluate_model(model, test_X, test_y)
        last_losses = [trace[-1] if trace else float("nan") for _, _, trace in results]
        train_loss = float(np.average(last_losses, weights=weights))
        metrics = RoundMetrics(
            round_index + 1,
            fed.n_nodes,
            config.model_kind,
            train_loss,
            final_eval.auc,
            final_eval.accuracy,
            time.perf_counter() - start,
        )
        rounds.append(metrics)
        if on_round is not None:
            on_round(metrics)
    return FederationResult(model, rounds, final_eval)


@dataclass
class CentralizedResult:
    model: object
    losses: list
    final: EvalResult


def train_centralized(config: RunConfig, train_ds: Dataset, test_ds: Dataset) -> CentralizedResult:
    """Centralized run on the single-shard shuffle of the training set.

    Uses the same RNG derivations as round 0 / node 0 of a federation, so a
    one-node one-round federation reproduces it exactly.
    """
    shard = partition_iid(train_ds, 1, config.seed)[0]
    model = build_model(config, train_ds.features.shape[1], derive_rng(config.seed, RNG_INIT))
    X, y = dataset_to_arrays(shard, config.window)
    losses = train_model(
        model,
        X,
        y,
        epochs=config.epochs,
        lr=config.lr,
        batch_size=config.batch_size,
        rng=derive_rng(config.seed, RNG_TRAIN, 0, 0),
    )
    test_X, test_y = dataset_to_arrays(test_ds, config.window)
    return CentralizedResult(model, losses, evaluate_model(model, test_X, test_y))

"""Quantum-enhanced LSTM, plain VQC, and classical LSTM baselines for binary
event classification, trainable centrally or under simulated federated
averaging, on SUSY-format data."""

__version__ = "0.1.0"

from .config import FedSettings, RunConfig, resolve_config
from .data import Dataset, load_csv, make_sequences, normalize_fit_transform, resolve_subset, select_features, split
from .federated import FedConfig, NodeState, fedavg, partition_iid, run_federation, train_centralized
from .metrics import RocCurve, accuracy, auc, auc_score, roc_curve
from .nn import AdamState, LinearLayer, adam_step, bce_loss, linear_backward, linear_forward, sigmoid, tanh
from .qlstm import (
    CellState,
    ClassicalLstmModel,
    QlstmModel,
    VqcClassifierModel,
    bptt_gradient,
    cell_step,
    param_count,
    sequence_forward,
)
from .statevector import Gate, StateVector, apply_gate, expect_z, init_zero_state
from .vqc import VqcParams, VqcSpec, encode_amplitude, encode_angle, vqc_forward, vqc_gradient

__all__ = [
    "__version__",
    "AdamState",
    "CellState",
    "ClassicalLstmModel",
    "Dataset",
    "FedConfig",
    "FedSettings",
    "Gate",
    "LinearLayer",
    "NodeState",
    "QlstmModel",
    "RocCurve",
    "RunConfig",
    "StateVector",
    "VqcClassifierModel",
    "VqcParams",
    "VqcSpec",
    "accuracy",
    "adam_step",
    "apply_gate",
    "auc",
    "auc_score",
    "bce_loss",
    "bptt_gradient",
    "cell_step",
    "encode_amplitude",
    "encode_angle",
    "expect_z",
    "fedavg",
    "init_zero_state",
    "linear_backward",
    "linear_forward",
    "load_csv",
    "make_sequences",
    "normalize_fit_transform",
    "param_count",
    "partition_iid",
    "resolve_config",
    "resolve_subset",
    "roc_curve",
    "run_federation",
    "select_features",
    "sequence_forward",
    "sigmoid",
    "split",
    "tanh",
    "train_centralized",
    "vqc_forward",
    "vqc_gradient",
]

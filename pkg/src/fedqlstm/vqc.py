"""Variational quantum circuit: encoding, trainable layers, readout, gradients.

Circuit layout, fixed so parameter files are portable:

    encoding                one rotation R_axis(x_j) on qubit j (angle modes),
                            or the normalized feature vector loaded directly
                            into the amplitudes (amplitude mode)
    for each layer l:       RZ(theta[l][j][0]) then RY(theta[l][j][1]) on
                            every qubit j, then the entangler pattern
    readout                 <Z> on every qubit

The entangler ring places control j -> target (j+1) mod n for every j; a
single-qubit circuit has no entanglers. Gradients use the parameter-shift
rule, which is exact for Pauli rotations; all shifted circuits for one
gradient call are simulated as a single amplitude batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, DataError, ShapeError, UnsupportedOperationError
from .statevector import (
    MAX_QUBITS,
    StateVector,
    apply_rotation,
    controlled_cols,
    expect_z_cols,
    pauli_cols,
    rotate_cols,
    z_sign_table,
    zero_amplitudes,
    zero_amplitudes_cols,
)

ENCODINGS = ("angle_rx", "angle_ry", "angle_rz", "amplitude")
ENTANGLERS = ("cnot_ring", "cz_ring", "cnot_chain", "cz_chain")

_ENCODING_AXIS = {"angle_rx": "RX", "angle_ry": "RY", "angle_rz": "RZ"}

SHIFT = 0.5 * np.pi


@dataclass(frozen=True)
class VqcSpec:
    """Circuit topology: register size, depth, encoding and entangler pattern."""

    n_qubits: int
    n_layers: int
    encoding: str = "angle_rx"
    entangler: str = "cnot_ring"

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ConfigError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        if self.n_layers < 1:
            raise ConfigError(f"n_layers must be >= 1, got {self.n_layers}")
        if self.encoding not in ENCODINGS:
            raise ConfigError(f"encoding must be one of {ENCODINGS}, got {self.encoding!r}")
        if self.entangler not in ENTANGLERS:
            raise ConfigError(f"entangler must be one of {ENTANGLERS}, got {self.entangler!r}")

    @property
    def n_params(self) -> int:
        return 2 * self.n_qubits * self.n_layers

    def entangler_pairs(self) -> tuple[tuple[int, int], ...]:
        n = self.n_qubits
        if n == 1:
            return ()
        if self.entangler.endswith("ring"):
            return tuple((j, (j + 1) % n) for j in range(n))
        return tuple((j, j + 1) for j in range(n - 1))

    @property
    def entangler_kind(self) -> str:
        return "CNOT" if self.entangler.startswith("cnot") else "CZ"


@dataclass
class VqcParams:
    """Trainable rotation angles, shape [n_layers][n_qubits][2] as (RZ, RY)."""

    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.ndim != 3 or self.theta.shape[-1] != 2:
            raise ShapeError(f"theta must have shape [layers][qubits][2], got {self.theta.shape}")

    @property
    def count(self) -> int:
        return self.theta.size


def init_theta(spec: VqcSpec, rng: np.random.Generator, scale: float = 0.1) -> np.ndarray:
    """Seeded near-identity start: uniform angles in [-scale, scale]."""
    return rng.uniform(-scale, scale, size=(spec.n_layers, spec.n_qubits, 2))


def _theta_array(spec: VqcSpec, params) -> np.ndarray:
    theta = params.theta if isinstance(params, VqcParams) else np.asarray(params, dtype=np.float64)
    expected = (spec.n_layers, spec.n_qubits, 2)
    if theta.shape != expected:
        raise ShapeError(f"theta shape {theta.shape} does not match spec {expected}")
    return theta


@lru_cache(maxsize=None)
def _circuit_ops(spec: VqcSpec, include_encoding: bool) -> tuple[tuple, int]:
    """Flat gate schedule. Rotations carry a column index into the angle matrix.

    Column layout: encoding angles (if any) first, then trainable angles in
    [layer][qubit][RZ, RY] flattening order -- the serialization order.
    """
    ops = []
    n = spec.n_qubits
    n_enc = 0
    if include_encoding and spec.encoding != "amplitude":
        axis = _ENCODING_AXIS[spec.encoding]
        for q in range(n):
            ops.append(("rot", axis, q, q))
        n_enc = n
    for layer in range(spec.n_layers):
        base = n_enc + layer * n * 2
        for q in range(n):
            ops.append(("rot", "RZ", q, base + 2 * q))
        for q in range(n):
            ops.append(("rot", "RY", q, base + 2 * q + 1))
        for control, target in spec.entangler_pairs():
            ops.append(("ent", spec.entangler_kind, control, target))
    return tuple(ops), n_enc + spec.n_params


def _simulate_cols(spec: VqcSpec, angle_rows: np.ndarray, initial: np.ndarray | None = None) -> np.ndarray:
    """Run the circuit for a batch of angle rows; returns final (2**n, B) columns.

    angle_rows: (B, n_cols) with one column per rotation gate.
    initial: optional (2**n, B) starting columns (amplitude encoding).
    """
    include_encoding = initial is None
    ops, n_cols = _circuit_ops(spec, include_encoding)
    if angle_rows.shape[-1] != n_cols:
        raise ShapeError(f"expected {n_cols} angle columns, got {angle_rows.shape[-1]}")
    n = spec.n_qubits
    amps = zero_amplitudes_cols(n, angle_rows.shape[0]) if initial is None else initial
    for op in ops:
        if op[0] == "rot":
            _, kind, qubit, col = op
            amps = rotate_cols(amps, kind, qubit, angle_rows[:, col], n)
        else:
            _, kind, control, target = op
            amps = controlled_cols(amps, kind, control, target, n)
    return amps


def _run_circuit(spec: VqcSpec, angle_cols: np.ndarray, initial: np.ndarray | None = None) -> np.ndarray:
    """Simulate the circuit for a batch of angle rows.

    angle_cols: (..., n_cols) with one column per rotation gate.
    initial: optional (..., 2**n) starting amplitudes (amplitude encoding).
    Returns <Z> per qubit, shape (..., n_qubits).
    """
    lead = angle_cols.shape[:-1]
    rows = angle_cols.reshape(-1, angle_cols.shape[-1])
    init_cols = None
    if initial is not None:
        init_cols = np.ascontiguousarray(initial.reshape(-1, initial.shape[-1]).T)
    amps = _simulate_cols(spec, rows, init_cols)
    n = spec.n_qubits
    exps = np.stack([expect_z_cols(amps, k, n) for k in range(n)], axis=-1)
    return exps.reshape(lead + (n,))


def _validate_angle_features(spec: VqcSpec, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.shape[-1] != spec.n_qubits:
        raise ShapeError(
            f"{spec.encoding} encoding needs {spec.n_qubits} features, got {features.shape[-1]}"
        )
    if not np.all(np.isfinite(features)):
        raise DataError("features contain non-finite values")
    return features


def encode_angle(spec: VqcSpec, features: np.ndarray) -> StateVector:
    """Load features as rotation angles, one rotation per qubit on |0...0>."""
    if spec.encoding == "amplitude":
        raise ConfigError("encode_angle requires an angle encoding spec")
    features = _validate_angle_features(spec, np.atleast_1d(features))
    amps = zero_amplitudes(spec.n_qubits)
    axis = _ENCODING_AXIS[spec.encoding]
    for q in range(spec.n_qubits):
        amps = apply_rotation(amps, axis, q, features[q], spec.n_qubits)
    return StateVector(spec.n_qubits, amps)


def amplitude_amps(spec: VqcSpec, features: np.ndarray) -> np.ndarray:
    """Normalized, zero-padded amplitudes for batches of feature rows (..., m)."""
    features = np.asarray(features, dtype=np.float64)
    dim = 1 << spec.n_qubits
    if features.shape[-1] > dim:
        raise ShapeError(f"amplitude encoding fits at most {dim} features, got {features.shape[-1]}")
    if not np.all(np.isfinite(features)):
        raise DataError("features contain non-finite values")
    norms = np.linalg.norm(features, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise DataError("amplitude encoding undefined for an all-zero feature vector")
    amps = np.zeros(features.shape[:-1] + (dim,), dtype=np.complex128)
    amps[..., : features.shape[-1]] = features / norms
    return amps


def encode_amplitude(spec: VqcSpec, features: np.ndarray) -> StateVector:
    """Load a feature vector into the state amplitudes (normalized, padded)."""
    return StateVector(spec.n_qubits, amplitude_amps(spec, np.atleast_1d(features)))


def _angle_cols(spec: VqcSpec, theta: np.ndarray, features: np.ndarray) -> np.ndarray:
    flat = theta.reshape(theta.shape[:-3] + (theta.shape[-3] * theta.shape[-2] * 2,))
    if features.ndim > 1 and flat.ndim == 1:
        flat = np.broadcast_to(flat, features.shape[:-1] + flat.shape)
    return np.concatenate([features, flat], axis=-1)


def vqc_forward(spec: VqcSpec, params, features: np.ndarray) -> np.ndarray:
    """Encode, run the trainable layers, and read out <Z> per qubit."""
    theta = _theta_array(spec, params)
    features = np.atleast_1d(features)
    if spec.encoding == "amplitude":
        initial = amplitude_amps(spec, features)
        return _run_circuit(spec, theta.reshape(-1), initial=initial)
    features = _validate_angle_features(spec, features)
    return _run_circuit(spec, _angle_cols(spec, theta, features))


def vqc_forward_batch(spec: VqcSpec, params, features: np.ndarray) -> np.ndarray:
    """Batched forward pass: features (B, m) -> expectations (B, n_qubits)."""
    theta = _theta_array(spec, params)
    features = np.asarray(features, dtype=np.float64)
    if spec.encoding == "amplitude":
        return _run_circuit(
            spec,
            np.broadcast_to(theta.reshape(-1), (features.shape[0], theta.size)),
            initial=amplitude_amps(spec, features),
        )
    features = _validate_angle_features(spec, features)
    return _run_circuit(spec, _angle_cols(spec, theta, features))


def vqc_gradient_batch(
    spec: VqcSpec,
    params,
    features: np.ndarray,
    upstream: np.ndarray,
    want_feature_grads: bool = True,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Parameter-shift gradients for a batch of samples sharing one theta.

    features: (B, m); upstream: (B, n_qubits), the loss gradient w.r.t. each
    Z expectation. Returns (theta_grads, feature_grads) where theta_grads has
    theta's shape and is summed over the batch, while feature_grads is
    per-sample with shape (B, m). Every shifted circuit is simulated in one
    vectorized pass.
    """
    theta = _theta_array(spec, params)
    features = np.asarray(features, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if features.ndim != 2 or upstream.shape != (features.shape[0], spec.n_qubits):
        raise ShapeError(
            f"features {features.shape} and upstream {upstream.shape} inconsistent "
            f"with a batch over {spec.n_qubits} qubits"
        )
    n_batch = features.shape[0]
    p = theta.size

    if spec.encoding == "amplitude":
        if want_feature_grads:
            raise UnsupportedOperationError(
                "feature gradients are unsupported for amplitude encoding; "
                "only rotation angles admit the parameter-shift rule"
            )
        base = np.broadcast_to(theta.reshape(-1), (n_batch, p))
        shift_cols = np.arange(p)
        initial = amplitude_amps(spec, features)
        initial = np.tile(initial, (2 * len(shift_cols), 1))
    else:
        features = _validate_angle_features(spec, features)
        base = _angle_cols(spec, theta, features)
        n_enc = spec.n_qubits
        shift_cols = np.arange(base.shape[-1]) if want_feature_grads else np.arange(n_enc, base.shape[-1])
        initial = None

    n_shift = len(shift_cols)
    cols = np.tile(base, (n_shift, 2, 1, 1))  # [shift, +/-, batch, col]
    for j, col in enumerate(shift_cols):
        cols[j, 0, :, col] += SHIFT
        cols[j, 1, :, col] -= SHIFT
    exps = _run_circuit(spec, cols.reshape(n_shift * 2 * n_batch, -1), initial=initial)
    exps = exps.reshape(n_shift, 2, n_batch, spec.n_qubits)
    deriv = 0.5 * (exps[:, 0] - exps[:, 1])  # [shift, batch, qubit]
    contracted = np.einsum("sbk,bk->sb", deriv, upstream)

    if spec.encoding == "amplitude":
        return contracted.sum(axis=1).reshape(theta.shape), None
    if want_feature_grads:
        n_enc = spec.n_qubits
        feature_grads = contracted[:n_enc].T.copy()
        theta_grads = contracted[n_enc:].sum(axis=1).reshape(theta.shape)
        return theta_grads, feature_grads
    return contracted.sum(axis=1).reshape(theta.shape), None


def vqc_gradient(
    spec: VqcSpec,
    params,
    features: np.ndarray,
    upstream: np.ndarray,
    want_feature_grads: bool = True,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Single-sample parameter-shift gradients; see `vqc_gradient_batch`."""
    features = np.atleast_1d(np.asarray(features, dtype=np.float64))
    upstream = np.atleast_1d(np.asarray(upstream, dtype=np.float64))
    if upstream.shape != (spec.n_qubits,):
        raise ShapeError(f"upstream must have length {spec.n_qubits}, got {upstream.shape}")
    theta_grads, feature_grads = vqc_gradient_batch(
        spec, params, features[None, :], upstream[None, :], want_feature_grads=want_feature_grads
    )
    return theta_grads, None if feature_grads is None else feature_grads[0]


_PAULI_OF_ROTATION = {"RX": "X", "RY": "Y", "RZ": "Z"}


def vqc_gradient_adjoint_batch(
    spec: VqcSpec,
    params,
    features: np.ndarray,
    upstream: np.ndarray,
    want_feature_grads: bool = True,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Adjoint-mode gradients, numerically equal to the parameter-shift rule.

    One forward pass plus one reverse sweep that un-applies each gate and
    accumulates Im(<lambda| P |psi>) per rotation, instead of 2(p + n) shifted
    circuit evaluations. Same contract as `vqc_gradient_batch`; the test suite
    pins the two engines against each other and against finite differences.
    """
    theta = _theta_array(spec, params)
    features = np.asarray(features, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if features.ndim != 2 or upstream.shape != (features.shape[0], spec.n_qubits):
        raise ShapeError(
            f"features {features.shape} and upstream {upstream.shape} inconsistent "
            f"with a batch over {spec.n_qubits} qubits"
        )
    n = spec.n_qubits
    n_batch = features.shape[0]

    if spec.encoding == "amplitude":
        if want_feature_grads:
            raise UnsupportedOperationError(
                "feature gradients are unsupported for amplitude encoding; "
                "only rotation angles admit the parameter-shift rule"
            )
        rows = np.broadcast_to(theta.reshape(-1), (n_batch, theta.size))
        initial = np.ascontiguousarray(amplitude_amps(spec, features).T)
        n_enc = 0
    else:
        features = _validate_angle_features(spec, features)
        rows = _angle_cols(spec, theta, features)
        initial = None
        n_enc = n

    ops, n_cols = _circuit_ops(spec, include_encoding=initial is None)
    psi = _simulate_cols(spec, rows, initial)
    # lambda = (sum_k upstream_k Z_k) |psi>; the observable is diagonal
    lam = (z_sign_table(n) @ upstream.T) * psi
    grads = np.zeros((n_batch, n_cols))
    for op in reversed(ops):
        if op[0] == "rot":
            _, kind, qubit, col = op
            p_psi = pauli_cols(psi, _PAULI_OF_ROTATION[kind], qubit, n)
            grads[:, col] = np.sum(np.conj(lam) * p_psi, axis=0).imag
            angles = -rows[:, col]
            psi = rotate_cols(psi, kind, qubit, angles, n)
            lam = rotate_cols(lam, kind, qubit, angles, n)
        else:
            _, kind, control, target = op
            psi = controlled_cols(psi, kind, control, target, n)
            lam = controlled_cols(lam, kind, control, target, n)
    theta_grads = grads[:, n_enc:].sum(axis=0).reshape(theta.shape)
    if spec.encoding != "amplitude" and want_feature_grads:
        return theta_grads, grads[:, :n_enc].copy()
    return theta_grads, None


GRADIENT_ENGINES = {
    "parameter_shift": vqc_gradient_batch,
    "adjoint": vqc_gradient_adjoint_batch,
}

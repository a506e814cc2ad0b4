"""Dense statevector simulation of small qubit registers.

Qubit ordering is little-endian throughout: qubit j is bit j of the basis
index, so qubit 0 is the least significant bit. Rotations follow the
half-angle convention R_P(theta) = exp(-i * theta * P / 2).

The low-level kernels (`apply_rotation`, `apply_controlled`, `expect_z_amps`)
accept amplitude arrays with arbitrary leading batch axes and, for rotations,
per-batch-element angles. A batch of independent circuit evaluations --
different samples, different parameter shifts -- is therefore simulated in a
single vectorized pass; this is the package's only form of intra-circuit
parallelism and it is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError

MAX_QUBITS = 20

ROTATION_KINDS = ("RX", "RY", "RZ")
ENTANGLER_KINDS = ("CNOT", "CZ")
GATE_KINDS = ROTATION_KINDS + ENTANGLER_KINDS


@dataclass(frozen=True)
class Gate:
    """One circuit operation: a Pauli rotation or a two-qubit entangler."""

    kind: str
    target: int
    control: int | None = None
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind in ROTATION_KINDS:
            if self.angle is None:
                raise ValueError(f"{self.kind} requires an angle")
            if self.control is not None:
                raise ValueError(f"{self.kind} takes no control qubit")
        else:
            if self.control is None:
                raise ValueError(f"{self.kind} requires a control qubit")
            if self.angle is not None:
                raise ValueError(f"{self.kind} takes no angle")
            if self.control == self.target:
                raise ValueError("control and target must differ")


@dataclass
class StateVector:
    """Pure state of an n-qubit register as 2**n complex amplitudes."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ShapeError(
                f"expected {1 << self.n_qubits} amplitudes for "
                f"{self.n_qubits} qubits, got shape {self.amplitudes.shape}"
            )

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.amplitudes.real**2 + self.amplitudes.imag**2)))

    def probabilities(self) -> np.ndarray:
        return self.amplitudes.real**2 + self.amplitudes.imag**2


def _check_n_qubits(n_qubits: int) -> None:
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigError(f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n_qubits!r}")


def zero_amplitudes(n_qubits: int, batch_shape: tuple = ()) -> np.ndarray:
    """Amplitude array for |0...0>, with optional leading batch axes."""
    amps = np.zeros(batch_shape + (1 << n_qubits,), dtype=np.complex128)
    amps[..., 0] = 1.0
    return amps


def init_zero_state(n_qubits: int) -> StateVector:
    """The |0>^n reference state."""
    _check_n_qubits(n_qubits)
    return StateVector(n_qubits, zero_amplitudes(n_qubits))


def rotation_coefficients(kind: str, angle) -> tuple:
    """Entries (m00, m01, m10, m11) of exp(-i*angle*P/2) for P in {X, Y, Z}.

    `angle` may be a scalar or an array; entries broadcast accordingly.
    """
    half = 0.5 * np.asarray(angle, dtype=np.float64)
    c = np.cos(half)
    s = np.sin(half)
    if kind == "RX":
        return c + 0j, -1j * s, -1j * s, c + 0j
    if kind == "RY":
        return c + 0j, -s + 0j, s + 0j, c + 0j
    if kind == "RZ":
        e = np.exp(-1j * half)
        zero = np.zeros_like(e)
        return e, zero, zero, np.conj(e)
    raise ValueError(f"not a rotation kind: {kind!r}")


def apply_rotation(amps: np.ndarray, kind: str, target: int, angle, n_qubits: int) -> np.ndarray:
    """Apply a single-qubit rotation to amplitudes of shape (..., 2**n).

    `angle` is a scalar or an array matching the leading batch axes, so one
    call can evaluate a whole batch of circuits with different angles.
    Returns a new array; the input is not modified.
    """
    if not 0 <= target < n_qubits:
        raise IndexError(f"qubit {target} out of range for {n_qubits} qubits")
    lead = amps.shape[:-1]
    hi = 1 << (n_qubits - 1 - target)
    lo = 1 << target
    a = amps.reshape(lead + (hi, 2, lo))
    m00, m01, m10, m11 = rotation_coefficients(kind, angle)
    if np.ndim(m00) > 0:  # batched angles: align with the (hi, 2, lo) axes
        m00, m01, m10, m11 = (m[..., None, None] for m in (m00, m01, m10, m11))
    a0 = a[..., 0, :]
    a1 = a[..., 1, :]
    out = np.empty_like(a)
    out[..., 0, :] = m00 * a0 + m01 * a1
    out[..., 1, :] = m10 * a0 + m11 * a1
    return out.reshape(amps.shape)


def apply_controlled(amps: np.ndarray, kind: str, control: int, target: int, n_qubits: int) -> np.ndarray:
    """Apply CNOT or CZ to amplitudes of shape (..., 2**n)."""
    for q in (control, target):
        if not 0 <= q < n_qubits:
            raise IndexError(f"qubit {q} out of range for {n_qubits} qubits")
    if control == target:
        raise ValueError("control and target must differ")
    lead = amps.shape[:-1]
    t = amps.reshape(lead + (2,) * n_qubits)
    axc = len(lead) + n_qubits - 1 - control
    axt = len(lead) + n_qubits - 1 - target
    out = t.copy()
    sel: list = [slice(None)] * t.ndim
    if kind == "CNOT":
        i10 = list(sel)
        i10[axc], i10[axt] = 1, 0
        i11 = list(sel)
        i11[axc], i11[axt] = 1, 1
        out[tuple(i10)] = t[tuple(i11)]
        out[tuple(i11)] = t[tuple(i10)]
    elif kind == "CZ":
        i11 = list(sel)
        i11[axc], i11[axt] = 1, 1
        out[tuple(i11)] = -t[tuple(i11)]
    else:
        raise ValueError(f"not an entangler kind: {kind!r}")
    return out.reshape(amps.shape)


def expect_z_amps(amps: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """<Z> on one qubit for amplitudes of shape (..., 2**n); returns (...)."""
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {n_qubits} qubits")
    lead = amps.shape[:-1]
    hi = 1 << (n_qubits - 1 - qubit)
    lo = 1 << qubit
    p = (amps.real**2 + amps.imag**2).reshape(lead + (hi, 2, lo))
    return p[..., 0, :].sum(axis=(-2, -1)) - p[..., 1, :].sum(axis=(-2, -1))


# ---------------------------------------------------------------- column kernels
#
# The circuit runners keep batches in column-major layout (2**n, batch): a
# qubit slice is then a contiguous block per row, which is several times
# faster than slicing a (batch, 2**n) array. These kernels are the
# performance twins of the generic ones above and are cross-checked against
# them in the tests.


def zero_amplitudes_cols(n_qubits: int, n_cols: int) -> np.ndarray:
    amps = np.zeros((1 << n_qubits, n_cols), dtype=np.complex128)
    amps[0, :] = 1.0
    return amps


def rotate_cols(amps: np.ndarray, kind: str, target: int, angles, n_qubits: int) -> np.ndarray:
    """Rotation on (2**n, B) columns; `angles` is scalar or (B,)."""
    hi = 1 << (n_qubits - 1 - target)
    lo = 1 << target
    n_cols = amps.shape[1]
    a = amps.reshape(hi, 2, lo, n_cols)
    m00, m01, m10, m11 = rotation_coefficients(kind, angles)
    out = np.empty_like(a)
    if kind == "RZ":  # diagonal: two multiplies instead of four plus adds
        np.multiply(m00, a[:, 0], out=out[:, 0])
        np.multiply(m11, a[:, 1], out=out[:, 1])
    else:
        a0 = a[:, 0]
        a1 = a[:, 1]
        out[:, 0] = m00 * a0 + m01 * a1
        out[:, 1] = m10 * a0 + m11 * a1
    return out.reshape(amps.shape)


def controlled_cols(amps: np.ndarray, kind: str, control: int, target: int, n_qubits: int) -> np.ndarray:
    """CNOT or CZ on (2**n, B) columns."""
    p, q = max(control, target), min(control, target)
    hi = 1 << (n_qubits - 1 - p)
    mid = 1 << (p - q - 1)
    lo = 1 << q
    n_cols = amps.shape[1]
    a = amps.reshape(hi, 2, mid, 2, lo * n_cols)
    out = a.copy()
    control_is_high = control == p
    if kind == "CNOT":
        if control_is_high:
            out[:, 1, :, 0] = a[:, 1, :, 1]
            out[:, 1, :, 1] = a[:, 1, :, 0]
        else:
            out[:, 0, :, 1] = a[:, 1, :, 1]
            out[:, 1, :, 1] = a[:, 0, :, 1]
    else:  # CZ is symmetric in control/target
        out[:, 1, :, 1] = -a[:, 1, :, 1]
    return out.reshape(amps.shape)


def expect_z_cols(amps: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """<Z> per column of a (2**n, B) batch; returns (B,)."""
    hi = 1 << (n_qubits - 1 - qubit)
    lo = 1 << qubit
    n_cols = amps.shape[1]
    p = (amps.real**2 + amps.imag**2).reshape(hi, 2, lo, n_cols)
    return p[:, 0].sum(axis=(0, 1)) - p[:, 1].sum(axis=(0, 1))


def pauli_cols(amps: np.ndarray, pauli: str, qubit: int, n_qubits: int) -> np.ndarray:
    """Apply a bare Pauli X, Y, or Z to (2**n, B) columns."""
    hi = 1 << (n_qubits - 1 - qubit)
    lo = 1 << qubit
    n_cols = amps.shape[1]
    a = amps.reshape(hi, 2, lo, n_cols)
    out = np.empty_like(a)
    if pauli == "X":
        out[:, 0] = a[:, 1]
        out[:, 1] = a[:, 0]
    elif pauli == "Y":
        out[:, 0] = -1j * a[:, 1]
        out[:, 1] = 1j * a[:, 0]
    elif pauli == "Z":
        out[:, 0] = a[:, 0]
        out[:, 1] = -a[:, 1]
    else:
        raise ValueError(f"unknown Pauli {pauli!r}")
    return out.reshape(amps.shape)


def z_sign_table(n_qubits: int) -> np.ndarray:
    """(2**n, n) matrix of Z eigenvalues: entry [i, k] = +1 if bit k of i is 0."""
    indices = np.arange(1 << n_qubits)
    bits = (indices[:, None] >> np.arange(n_qubits)[None, :]) & 1
    return 1.0 - 2.0 * bits


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply one gate to a state. Value-in/value-out; the input state is untouched."""
    n = state.n_qubits
    if gate.kind in ROTATION_KINDS:
        amps = apply_rotation(state.amplitudes, gate.kind, gate.target, gate.angle, n)
    else:
        amps = apply_controlled(state.amplitudes, gate.kind, gate.control, gate.target, n)
    return StateVector(n, amps)


def expect_z(state: StateVector, qubit: int) -> float:
    """Pauli-Z expectation of one qubit; always in [-1, 1] for normalized states."""
    return float(expect_z_amps(state.amplitudes, qubit, state.n_qubits))

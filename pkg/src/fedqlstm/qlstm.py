"""Recurrent cell with four quantum gate branches, plus the two baselines.

The cell follows, per time step t and gate g in (forget, input, output, cell):

    z_t     = W_c * v_t + b_c          v_t = [h_{t-1}; x_t] or x_t alone
    q_t^g   = VQC(z_t; theta^g)        Z expectation per qubit
    s_t^g   = act_g(W_q^g q_t^g + b_q^g)
    c_t     = s_t^f . c_{t-1} + s_t^i . s_t^c
    h_t     = s_t^o . tanh(c_t)
    logit_t = W_o * (c_t or h_t) + b_o

with act = sigmoid on forget/input/output and tanh on the cell candidate when
gate activations are enabled, identity otherwise. The classical baseline
replaces each VQC branch by tanh(W z + b) of the same width. A sequence is
classified by sigmoid of the final step's logit.

Backpropagation through time chains the linear/activation backward passes
with the parameter-shift rule of the quantum branches; per-sample work is
vectorized over the batch and reduced in a fixed order, so gradients are
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, ShapeError, TrainingError
from .nn import (
    LinearLayer,
    bce_loss_batch,
    linear_backward_batch,
    linear_forward_batch,
    sigmoid,
    sigmoid_grad_from_output,
    tanh_grad_from_output,
)
from .vqc import GRADIENT_ENGINES, VqcSpec, init_theta, vqc_forward_batch

GATES = ("forget", "input", "output", "cell")

_GATE_ACTIVATION = {"forget": "sigmoid", "input": "sigmoid", "output": "sigmoid", "cell": "tanh"}


@dataclass
class CellState:
    """Recurrent state carried between steps."""

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_dim: int) -> "CellState":
        return cls(np.zeros(hidden_dim), np.zeros(hidden_dim))


def _apply_gate_activation(gate: str, a: np.ndarray, enabled: bool) -> np.ndarray:
    if not enabled:
        return a
    return np.tanh(a) if _GATE_ACTIVATION[gate] == "tanh" else sigmoid(a)


def _gate_activation_grad(gate: str, s: np.ndarray, enabled: bool) -> np.ndarray:
    if not enabled:
        return np.ones_like(s)
    return tanh_grad_from_output(s) if _GATE_ACTIVATION[gate] == "tanh" else sigmoid_grad_from_output(s)


class _RecurrentModel:
    """Shared cell machinery; subclasses provide the per-gate branch."""

    kind = "base"

    def __init__(
        self,
        input_dim: int,
        hidden_dim: int,
        branch_width: int,
        rng: np.random.Generator,
        recurrent_input: str = "input_only",
        gate_activation: bool = True,
        output_head_source: str = "cell",
    ):
        if recurrent_input not in ("concat", "input_only"):
            raise ShapeError(f"recurrent_input must be 'concat' or 'input_only', got {recurrent_input!r}")
        if output_head_source not in ("cell", "hidden"):
            raise ShapeError(f"output_head_source must be 'cell' or 'hidden', got {output_head_source!r}")
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.branch_width = branch_width
        self.recurrent_input = recurrent_input
        self.gate_activation = gate_activation
        self.output_head_source = output_head_source
        proj_in = input_dim + (hidden_dim if recurrent_input == "concat" else 0)
        self.input_proj = LinearLayer.init(proj_in, branch_width, rng)
        self._init_branches(rng)
        self.out_proj = {g: LinearLayer.init(branch_width, hidden_dim, rng) for g in GATES}
        self.head = LinearLayer.init(hidden_dim, 1, rng)

    # branch interface -------------------------------------------------
    def _init_branches(self, rng: np.random.Generator) -> None:
        raise NotImplementedError

    def _branch_forward(self, gate: str, Z: np.ndarray) -> tuple[np.ndarray, dict]:
        raise NotImplementedError

    def _branch_backward(self, gate: str, cache: dict, dq: np.ndarray, grads: dict) -> np.ndarray:
        raise NotImplementedError

    def _branch_params(self) -> dict:
        raise NotImplementedError

    # parameter bookkeeping ---------------------------------------------
    def parameters(self) -> dict:
        """Live parameter arrays in declaration (= serialization) order."""
        out = {"input_proj.W": self.input_proj.W, "input_proj.b": self.input_proj.b}
        branch = self._branch_params()
        for g in GATES:
            for key, value in branch[g].items():
                out[f"{g}.{key}"] = value
            out[f"{g}.out_proj.W"] = self.out_proj[g].W
            out[f"{g}.out_proj.b"] = self.out_proj[g].b
        out["head.W"] = self.head.W
        out["head.b"] = self.head.b
        return out

    def set_parameters(self, params: dict) -> None:
        current = self.parameters()
        if set(params) != set(current):
            raise ShapeError(f"parameter keys differ: {sorted(set(params) ^ set(current))}")
        for name, value in params.items():
            value = np.asarray(value, dtype=np.float64)
            if value.shape != current[name].shape:
                raise ShapeError(f"shape {value.shape} != {current[name].shape} for {name}")
            current[name][...] = value

    def param_count(self) -> int:
        return sum(v.size for v in self.parameters().values())

    # forward / backward -------------------------------------------------
    def _step_forward(self, X_t: np.ndarray, h: np.ndarray, c: np.ndarray, t: int):
        v = np.concatenate([h, X_t], axis=1) if self.recurrent_input == "concat" else X_t
        z = linear_forward_batch(self.input_proj, v)
        branch_q, branch_cache, s = {}, {}, {}
        for g in GATES:
            q, cache = self._branch_forward(g, z)
            a = linear_forward_batch(self.out_proj[g], q)
            s[g] = _apply_gate_activation(g, a, self.gate_activation)
            branch_q[g] = q
            branch_cache[g] = cache
        c_new = s["forget"] * c + s["input"] * s["cell"]
        if not np.all(np.isfinite(c_new)):
            raise TrainingError(f"non-finite cell state at step {t}")
        tanh_c = np.tanh(c_new)
        h_new = s["output"] * tanh_c
        src = c_new if self.output_head_source == "cell" else h_new
        logit = linear_forward_batch(self.head, src)[:, 0]
        step = {
            "v": v,
            "z": z,
            "q": branch_q,
            "branch": branch_cache,
            "s": s,
            "c_prev": c,
            "c": c_new,
            "tanh_c": tanh_c,
            "src": src,
        }
        return h_new, c_new, logit, step

    def forward_batch(self, X: np.ndarray, keep_cache: bool = False):
        """Probabilities for a batch of sequences X of shape (B, T, F)."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 3 or X.shape[-1] != self.input_dim:
            raise ShapeError(f"expected sequences (B, T, {self.input_dim}), got {X.shape}")
        if X.shape[1] == 0:
            raise DataError("empty sequence")
        n_batch, n_steps = X.shape[0], X.shape[1]
        h = np.zeros((n_batch, self.hidden_dim))
        c = np.zeros((n_batch, self.hidden_dim))
        steps = []
        logit = None
        for t in range(n_steps):
            h, c, logit, step = self._step_forward(X[:, t], h, c, t)
            if keep_cache:
                steps.append(step)
        probs = sigmoid(logit)
        return (probs, logit, steps) if keep_cache else probs

    def loss_and_gradients(self, X: np.ndarray, y: np.ndarray) -> tuple[float, dict]:
        """Mean BCE over the batch and exact gradients for every parameter."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        probs, logit, steps = self.forward_batch(X, keep_cache=True)
        losses, dp = bce_loss_batch(probs, y)
        loss = float(losses.mean())
        n_batch, n_steps = X.shape[0], X.shape[1]
        dlogit = (dp / n_batch) * sigmoid_grad_from_output(probs)

        grads = {name: np.zeros_like(value) for name, value in self.parameters().items()}
        g_head_W, g_head_b, dsrc = linear_backward_batch(self.head, steps[-1]["src"], dlogit[:, None])
        grads["head.W"] += g_head_W
        grads["head.b"] += g_head_b
        dh = np.zeros((n_batch, self.hidden_dim))
        dc = np.zeros((n_batch, self.hidden_dim))
        if self.output_head_source == "cell":
            dc += dsrc
        else:
            dh += dsrc

        for t in range(n_steps - 1, -1, -1):
            step = steps[t]
            s = step["s"]
            ds = {}
            # h_t = s_o . tanh(c_t)
            ds["output"] = dh * step["tanh_c"]
            dc = dc + dh * s["output"] * tanh_grad_from_output(step["tanh_c"])
            # c_t = s_f . c_{t-1} + s_i . s_c
            ds["forget"] = dc * step["c_prev"]
            ds["input"] = dc * s["cell"]
            ds["cell"] = dc * s["input"]
            dc_prev = dc * s["forget"]

            dz = np.zeros_like(step["z"])
            for g in GATES:
                da = ds[g] * _gate_activation_grad(g, s[g], self.gate_activation)
                gW, gb, dq = linear_backward_batch(self.out_proj[g], step["q"][g], da)
                grads[f"{g}.out_proj.W"] += gW
                grads[f"{g}.out_proj.b"] += gb
                dz += self._branch_backward(g, step["branch"][g], dq, grads)
            if not np.all(np.isfinite(dz)):
                raise TrainingError(f"non-finite gradient at step {t}")

            gW, gb, dv = linear_backward_batch(self.input_proj, step["v"], dz)
            grads["input_proj.W"] += gW
            grads["input_proj.b"] += gb
            dh = dv[:, : self.hidden_dim] if self.recurrent_input == "concat" else np.zeros_like(dh)
            dc = dc_prev
        return loss, grads


class QlstmModel(_RecurrentModel):
    """LSTM cell whose four gate transformations are variational circuits.

    `gradient_engine` selects how the circuit gradients are computed during
    BPTT: "adjoint" (default, one reverse sweep) or "parameter_shift" (2p+2n
    shifted evaluations). The two are numerically equal; the tests pin them
    against each other and against finite differences.
    """

    kind = "qlstm"

    def __init__(
        self,
        input_dim: int,
        hidden_dim: int,
        spec: VqcSpec,
        rng: np.random.Generator,
        gradient_engine: str = "adjoint",
        **flags,
    ):
        self.spec = spec
        if gradient_engine not in GRADIENT_ENGINES:
            raise ShapeError(f"gradient_engine must be one of {sorted(GRADIENT_ENGINES)}")
        self.gradient_engine = gradient_engine
        super().__init__(input_dim, hidden_dim, spec.n_qubits, rng, **flags)

    def _init_branches(self, rng: np.random.Generator) -> None:
        self.theta = {g: init_theta(self.spec, rng) for g in GATES}

    def _branch_params(self) -> dict:
        return {g: {"theta": self.theta[g]} for g in GATES}

    def _branch_forward(self, gate: str, Z: np.ndarray):
        q = vqc_forward_batch(self.spec, self.theta[gate], Z)
        return q, {"z": Z}

    def _branch_backward(self, gate: str, cache: dict, dq: np.ndarray, grads: dict) -> np.ndarray:
        engine = GRADIENT_ENGINES[self.gradient_engine]
        theta_grads, dz = engine(self.spec, self.theta[gate], cache["z"], dq)
        grads[f"{gate}.theta"] += theta_grads
        return dz


class ClassicalLstmModel(_RecurrentModel):
    """Baseline: each quantum branch replaced by tanh(W z + b) of equal width."""

    kind = "lstm"

    def _init_branches(self, rng: np.random.Generator) -> None:
        self.branch = {g: LinearLayer.init(self.branch_width, self.branch_width, rng) for g in GATES}

    def _branch_params(self) -> dict:
        return {g: {"branch.W": self.branch[g].W, "branch.b": self.branch[g].b} for g in GATES}

    def _branch_forward(self, gate: str, Z: np.ndarray):
        q = np.tanh(linear_forward_batch(self.branch[gate], Z))
        return q, {"z": Z, "q": q}

    def _branch_backward(self, gate: str, cache: dict, dq: np.ndarray, grads: dict) -> np.ndarray:
        du = dq * tanh_grad_from_output(cache["q"])
        gW, gb, dz = linear_backward_batch(self.branch[gate], cache["z"], du)
        grads[f"{gate}.branch.W"] += gW
        grads[f"{gate}.branch.b"] += gb
        return dz


class VqcClassifierModel:
    """Plain variational classifier: compression layer, one VQC, linear head."""

    kind = "vqc"

    def __init__(self, input_dim: int, spec: VqcSpec, rng: np.random.Generator, gradient_engine: str = "adjoint"):
        self.input_dim = input_dim
        self.spec = spec
        if gradient_engine not in GRADIENT_ENGINES:
            raise ShapeError(f"gradient_engine must be one of {sorted(GRADIENT_ENGINES)}")
        self.gradient_engine = gradient_engine
        self.input_proj = LinearLayer.init(input_dim, spec.n_qubits, rng)
        self.theta = init_theta(spec, rng)
        self.head = LinearLayer.init(spec.n_qubits, 1, rng)

    def parameters(self) -> dict:
        return {
            "input_proj.W": self.input_proj.W,
            "input_proj.b": self.input_proj.b,
            "theta": self.theta,
            "head.W": self.head.W,
            "head.b": self.head.b,
        }

    def set_parameters(self, params: dict) -> None:
        current = self.parameters()
        if set(params) != set(current):
            raise ShapeError(f"parameter keys differ: {sorted(set(params) ^ set(current))}")
        for name, value in params.items():
            value = np.asarray(value, dtype=np.float64)
            if value.shape != current[name].shape:
                raise ShapeError(f"shape {value.shape} != {current[name].shape} for {name}")
            current[name][...] = value

    def param_count(self) -> int:
        return sum(v.size for v in self.parameters().values())

    def _as_events(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 3:
            if X.shape[1] != 1:
                raise ShapeError("the VQC baseline classifies single events; use window=1")
            X = X[:, 0]
        if X.ndim != 2 or X.shape[-1] != self.input_dim:
            raise ShapeError(f"expected events (B, {self.input_dim}), got {X.shape}")
        return X

    def forward_batch(self, X: np.ndarray, keep_cache: bool = False):
        X = self._as_events(X)
        z = linear_forward_batch(self.input_proj, X)
        q = vqc_forward_batch(self.spec, self.theta, z)
        logit = linear_forward_batch(self.head, q)[:, 0]
        probs = sigmoid(logit)
        if keep_cache:
            return probs, {"x": X, "z": z, "q": q}
        return probs

    def loss_and_gradients(self, X: np.ndarray, y: np.ndarray) -> tuple[float, dict]:
        y = np.asarray(y, dtype=np.float64)
        probs, cache = self.forward_batch(X, keep_cache=True)
        losses, dp = bce_loss_batch(probs, y)
        loss = float(losses.mean())
        dlogit = (dp / len(y)) * sigmoid_grad_from_output(probs)
        g_head_W, g_head_b, dq = linear_backward_batch(self.head, cache["q"], dlogit[:, None])
        theta_grads, dz = GRADIENT_ENGINES[self.gradient_engine](self.spec, self.theta, cache["z"], dq)
        g_in_W, g_in_b, _ = linear_backward_batch(self.input_proj, cache["x"], dz)
        grads = {
            "input_proj.W": g_in_W,
            "input_proj.b": g_in_b,
            "theta": theta_grads,
            "head.W": g_head_W,
            "head.b": g_head_b,
        }
        return loss, grads


def cell_step(model: _RecurrentModel, x_t: np.ndarray, prev: CellState) -> tuple[CellState, float]:
    """One recurrent step on a single sample; returns the new state and logit."""
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.shape != (model.input_dim,):
        raise ShapeError(f"expected input of length {model.input_dim}, got {x_t.shape}")
    h, c, logit, _ = model._step_forward(x_t[None, :], prev.h[None, :], prev.c[None, :], 0)
    return CellState(h[0], c[0]), float(logit[0])


def sequence_forward(model, sequence: np.ndarray) -> float:
    """Probability for one sequence (T, F), iterated from a zero state."""
    sequence = np.asarray(sequence, dtype=np.float64)
    if sequence.ndim == 1:
        sequence = sequence[None, :]
    if sequence.shape[0] == 0:
        raise DataError("empty sequence")
    return float(model.forward_batch(sequence[None, :, :])[0])


def bptt_gradient(model, sequence: np.ndarray, label: float) -> dict:
    """Exact gradients of BCE(sequence_forward(model, sequence), label)."""
    sequence = np.asarray(sequence, dtype=np.float64)
    if sequence.ndim == 1:
        sequence = sequence[None, :]
    _, grads = model.loss_and_gradients(sequence[None, :, :], np.asarray([label]))
    return grads


def param_count(model) -> int:
    """Exact number of trainable scalars in the model."""
    return model.param_count()

"""Fast built-in oracle suite, runnable from the CLI in well under a minute.

Each check re-derives an expected value through an independent route (finite
differences, dense linear algebra, rank statistics, exact algebra) and
compares it against the production path. `gradient_corruption` exists for
test harnesses that need to prove a broken gradient is caught and named.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MetricError
from .federated import fedavg
from .metrics import auc_score
from .nn import AdamState, LinearLayer, adam_step, bce_loss, linear_backward, linear_forward
from .qlstm import QlstmModel
from .statevector import Gate, apply_gate, expect_z, init_zero_state
from .vqc import VqcSpec, init_theta, vqc_forward, vqc_gradient


@dataclass
class CheckResult:
    module: str
    name: str
    passed: bool
    detail: str

    @property
    def label(self) -> str:
        return f"{self.module}.{self.name}"


def _random_gates(rng: np.random.Generator, n_qubits: int, count: int) -> list[Gate]:
    gates = []
    for _ in range(count):
        if n_qubits > 1 and rng.uniform() < 0.3:
            control, target = rng.choice(n_qubits, size=2, replace=False)
            kind = "CNOT" if rng.uniform() < 0.5 else "CZ"
            gates.append(Gate(kind, int(target), control=int(control)))
        else:
            kind = ("RX", "RY", "RZ")[rng.integers(3)]
            gates.append(Gate(kind, int(rng.integers(n_qubits)), angle=float(rng.uniform(-np.pi, np.pi))))
    return gates


def _check_norm_conservation() -> CheckResult:
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(5):
        state = init_zero_state(6)
        for gate in _random_gates(rng, 6, 100):
            state = apply_gate(state, gate)
        worst = max(worst, abs(state.norm() - 1.0))
    return CheckResult("statevector", "norm_conservation", worst < 1e-10, f"max |norm-1| = {worst:.2e}")


def _check_gate_inverse() -> CheckResult:
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(5):
        state = init_zero_state(4)
        for gate in _random_gates(rng, 4, 30):
            state = apply_gate(state, gate)
        original = state.amplitudes.copy()
        gate = _random_gates(rng, 4, 1)[0]
        inverse = (
            Gate(gate.kind, gate.target, angle=-gate.angle)
            if gate.angle is not None
            else gate  # CNOT and CZ are self-inverse
        )
        roundtrip = apply_gate(apply_gate(state, gate), inverse)
        worst = max(worst, float(np.max(np.abs(roundtrip.amplitudes - original))))
    return CheckResult("statevector", "gate_inverse", worst < 1e-10, f"max roundtrip error = {worst:.2e}")


def _check_expect_z_rotation() -> CheckResult:
    worst = 0.0
    for theta in (0.3, 1.1, 2.7):
        state = apply_gate(init_zero_state(1), Gate("RY", 0, angle=theta))
        worst = max(worst, abs(expect_z(state, 0) - np.cos(theta)))
    return CheckResult("statevector", "expect_z_rotation", worst < 1e-12, f"max |<Z>-cos| = {worst:.2e}")


def _fd_gradient(fn, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    grad = np.zeros_like(x)
    flat = grad.reshape(-1)
    xf = x.reshape(-1)
    for i in range(xf.size):
        old = xf[i]
        xf[i] = old + h
        up = fn()
        xf[i] = old - h
        down = fn()
        xf[i] = old
        flat[i] = (up - down) / (2 * h)
    return grad


def _rel_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(b))), 1e-12)
    return float(np.max(np.abs(a - b))) / scale


def _check_parameter_shift(gradient_corruption: float = 0.0) -> CheckResult:
    rng = np.random.default_rng(103)
    worst = 0.0
    for n_qubits, n_layers in ((2, 1), (3, 2), (4, 2)):
        spec = VqcSpec(n_qubits, n_layers)
        theta = init_theta(spec, rng, scale=1.0)
        features = rng.uniform(-np.pi, np.pi, n_qubits)
        upstream = rng.normal(size=n_qubits)
        theta_grads, feature_grads = vqc_gradient(spec, theta, features, upstream)
        theta_grads = theta_grads + gradient_corruption
        fd_theta = _fd_gradient(lambda: float(vqc_forward(spec, theta, features) @ upstream), theta)
        fd_features = _fd_gradient(lambda: float(vqc_forward(spec, theta, features) @ upstream), features)
        worst = max(worst, _rel_error(theta_grads, fd_theta), _rel_error(feature_grads, fd_features))
    return CheckResult("vqc", "parameter_shift_vs_fd", worst < 1e-5, f"max rel err = {worst:.2e}")


def _check_linear_backward() -> CheckResult:
    rng = np.random.default_rng(104)
    layer = LinearLayer(rng.normal(size=(3, 4)), rng.normal(size=3))
    x = rng.normal(size=4)
    upstream = rng.normal(size=3)
    dW, db, dx = linear_backward(layer, x, upstream)
    fd_W = _fd_gradient(lambda: float(linear_forward(layer, x) @ upstream), layer.W)
    fd_x = _fd_gradient(lambda: float(linear_forward(layer, x) @ upstream), x)
    worst = max(_rel_error(dW, fd_W), _rel_error(dx, fd_x), _rel_error(db, upstream))
    return CheckResult("nn", "linear_backward_vs_fd", worst < 1e-6, f"max rel err = {worst:.2e}")


def _check_bce_values() -> CheckResult:
    loss_half, _ = bce_loss(0.5, 1.0)
    loss_wrong, _ = bce_loss(0.8, 0.0)
    ok = abs(loss_half - np.log(2.0)) < 1e-12 and abs(loss_wrong + np.log(0.2)) < 1e-12
    return CheckResult("nn", "bce_reference_values", ok, "ln2 and -ln0.2 cases")


def _check_adam_fixed_point() -> CheckResult:
    params = {"w": np.array([0.3, -0.2])}
    state = AdamState(lr=0.01)
    updated = adam_step(state, params, {"w": np.zeros(2)})
    drift = float(np.max(np.abs(updated["w"] - params["w"])))
    return CheckResult("nn", "adam_zero_gradient_fixed_point", drift == 0.0, f"drift = {drift:.1e}")


def _check_bptt() -> CheckResult:
    rng = np.random.default_rng(105)
    model = QlstmModel(3, 1, VqcSpec(2, 1), rng, recurrent_input="concat")
    X = rng.uniform(-1, 1, size=(1, 2, 3))
    y = np.array([1.0])

    def loss_fn() -> float:
        loss, _ = model.loss_and_gradients(X, y)
        return loss

    _, grads = model.loss_and_gradients(X, y)
    worst = 0.0
    for name, value in model.parameters().items():
        fd = _fd_gradient(loss_fn, value)
        worst = max(worst, _rel_error(grads[name], fd))
    return CheckResult("qlstm", "bptt_vs_fd", worst < 1e-4, f"max rel err = {worst:.2e}")


def _rank_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    for p in pos:
        wins += np.sum(p > neg) + 0.5 * np.sum(p == neg)
    return float(wins / (len(pos) * len(neg)))


def _check_auc_oracle() -> CheckResult:
    rng = np.random.default_rng(106)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(10, 60))
        scores = rng.choice(np.linspace(0, 1, 7), size=n)  # heavy ties
        labels = rng.integers(0, 2, size=n).astype(float)
        if labels.min() == labels.max():
            continue
        try:
            worst = max(worst, abs(auc_score(scores, labels) - _rank_auc(scores, labels)))
        except MetricError:
            continue
    return CheckResult("metrics", "auc_vs_rank_oracle", worst < 1e-12, f"max |diff| = {worst:.2e}")


def _check_fedavg_algebra() -> CheckResult:
    rng = np.random.default_rng(107)
    snaps = [{"w": rng.normal(size=4), "b": rng.normal(size=2)} for _ in range(4)]
    weights = [1.0, 2.0, 0.5, 1.5]
    merged = fedavg(snaps, weights)
    perm = [2, 0, 3, 1]
    permuted = fedavg([snaps[i] for i in perm], [weights[i] for i in perm])
    perm_err = max(float(np.max(np.abs(merged[k] - permuted[k]))) for k in merged)
    same = fedavg([snaps[0]] * 3, [1.0, 1.0, 1.0])
    idem_err = max(float(np.max(np.abs(same[k] - snaps[0][k]))) for k in same)
    ok = perm_err == 0.0 and idem_err < 1e-15
    return CheckResult("federated", "fedavg_algebra", ok, f"perm = {perm_err:.1e}, idem = {idem_err:.1e}")


def run_selftest(gradient_corruption: float = 0.0) -> list[CheckResult]:
    return [
        _check_norm_conservation(),
        _check_gate_inverse(),
        _check_expect_z_rotation(),
        _check_parameter_shift(gradient_corruption),
        _check_linear_backward(),
        _check_bce_values(),
        _check_adam_fixed_point(),
        _check_bptt(),
        _check_auc_oracle(),
        _check_fedavg_algebra(),
    ]


def format_report(results: list[CheckResult]) -> str:
    lines = []
    per_module: dict[str, list[CheckResult]] = {}
    for result in results:
        per_module.setdefault(result.module, []).append(result)
        status = "PASS" if result.passed else "FAIL"
        lines.append(f"{status}  {result.label}  ({result.detail})")
    lines.append("")
    for module, items in per_module.items():
        n_ok = sum(r.passed for r in items)
        lines.append(f"{module}: {n_ok}/{len(items)} oracles passed")
    failed = [r.label for r in results if not r.passed]
    lines.append("all oracles passed" if not failed else f"FAILED: {', '.join(failed)}")
    return "\n".join(lines)

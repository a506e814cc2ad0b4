"""Run configuration: defaults, config-file parsing, validation, hashing.

Uninvoked defaults encode the reference experiment: 6 qubits, ring-entangled
circuits, learning rate 0.01, binary cross-entropy, 30 epochs, 5 global
rounds, 80:20 split of the first 20K rows. The one exception is the layer
count for the full 18-feature subset, which defaults to 3 instead of 4 so the
model stays under the 300-parameter budget; the adjustment is echoed into the
run manifest.

Config files are flat `key = value` text with '#' comments; keys are the
field names below. Command-line flags override file values.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace

from .errors import ConfigError

MODEL_KINDS = ("qlstm", "lstm", "vqc")
FEATURE_SUBSETS = ("low7", "full18")
ENCODINGS_TRAINABLE = ("angle_rx", "angle_ry", "angle_rz")
ENTANGLER_CHOICES = ("cnot_ring", "cz_ring", "cnot_chain", "cz_chain")
RECURRENT_INPUT_CHOICES = ("input_only", "concat")
OUTPUT_HEAD_CHOICES = ("cell", "hidden")
NORMALIZATION_CHOICES = ("minmax", "zscore")
SAMPLE_CHOICES = ("head", "random")
AGGREGATION_CHOICES = ("uniform", "sample_weighted")

PARAM_BUDGET = 300
DEFAULT_LAYERS = {"low7": 4, "full18": 3}


@dataclass(frozen=True)
class FedSettings:
    """Federation schedule and topology."""

    n_nodes: int = 3
    global_rounds: int = 5
    local_epochs: int = 30
    aggregation: str = "sample_weighted"


@dataclass(frozen=True)
class RunConfig:
    model_kind: str = "qlstm"
    feature_subset: str = "low7"
    n_qubits: int = 6
    n_layers: int | None = None  # resolved per feature subset if unset
    hidden_dim: int = 1
    epochs: int = 30
    lr: float = 0.01
    batch_size: int = 32
    seed: int = 0
    window: int = 1
    encoding: str = "angle_rx"
    entangler: str = "cnot_ring"
    recurrent_input: str = "input_only"
    gate_activation: bool = True
    output_head_source: str = "cell"
    normalization: str = "minmax"
    max_rows: int | None = 20000
    has_header: bool = False
    sample: str = "head"
    split_ratio: float = 0.8
    fed: FedSettings | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        fed = d.pop("fed", None)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config = cls(**d)
        if fed is not None:
            config = replace(config, fed=FedSettings(**fed))
        return config


def resolve_config(config: RunConfig) -> tuple[RunConfig, list[str]]:
    """Fill derived defaults and validate; returns (resolved, adjustment notes)."""
    notes: list[str] = []
    if config.n_layers is None:
        layers = DEFAULT_LAYERS[config.feature_subset] if config.feature_subset in DEFAULT_LAYERS else 4
        if config.feature_subset == "full18":
            notes.append(
                f"n_layers defaulted to {layers} for full18 to keep the parameter "
                f"count under {PARAM_BUDGET}"
            )
        config = replace(config, n_layers=layers)
    _validate(config)
    return config, notes


def _validate(config: RunConfig) -> None:
    problems = []
    if config.model_kind not in MODEL_KINDS:
        problems.append(f"model_kind must be one of {MODEL_KINDS}, got {config.model_kind!r}")
    if config.feature_subset not in FEATURE_SUBSETS:
        problems.append(f"feature_subset must be one of {FEATURE_SUBSETS}, got {config.feature_subset!r}")
    if not 1 <= config.n_qubits <= 20:
        problems.append(f"n_qubits must be in [1, 20], got {config.n_qubits}")
    if config.n_layers is None or config.n_layers < 1:
        problems.append(f"n_layers must be >= 1, got {config.n_layers}")
    if config.hidden_dim < 1:
        problems.append(f"hidden_dim must be >= 1, got {config.hidden_dim}")
    if config.epochs < 0:
        problems.append(f"epochs must be >= 0, got {config.epochs}")
    if config.lr <= 0:
        problems.append(f"lr must be > 0, got {config.lr}")
    if config.batch_size < 1:
        problems.append(f"batch_size must be >= 1, got {config.batch_size}")
    if config.window < 1:
        problems.append(f"window must be >= 1, got {config.window}")
    if config.model_kind == "vqc" and config.window != 1:
        problems.append("the vqc baseline classifies single events; window must be 1")
    if config.encoding not in ENCODINGS_TRAINABLE:
        problems.append(
            f"encoding must be one of {ENCODINGS_TRAINABLE} for trainable models "
            f"(amplitude encoding admits no feature gradients), got {config.encoding!r}"
        )
    if config.entangler not in ENTANGLER_CHOICES:
        problems.append(f"entangler must be one of {ENTANGLER_CHOICES}, got {config.entangler!r}")
    if config.recurrent_input not in RECURRENT_INPUT_CHOICES:
        problems.append(f"recurrent_input must be one of {RECURRENT_INPUT_CHOICES}")
    if config.output_head_source not in OUTPUT_HEAD_CHOICES:
        problems.append(f"output_head_source must be one of {OUTPUT_HEAD_CHOICES}")
    if config.normalization not in NORMALIZATION_CHOICES:
        problems.append(f"normalization must be one of {NORMALIZATION_CHOICES}")
    if config.sample not in SAMPLE_CHOICES:
        problems.append(f"sample must be one of {SAMPLE_CHOICES}")
    if config.max_rows is not None and config.max_rows < 1:
        problems.append(f"max_rows must be >= 1 or unset, got {config.max_rows}")
    if not 0.0 < config.split_ratio < 1.0:
        problems.append(f"split_ratio must be in (0, 1), got {config.split_ratio}")
    if config.fed is not None:
        fed = config.fed
        if fed.n_nodes < 1:
            problems.append(f"n_nodes must be >= 1, got {fed.n_nodes}")
        if fed.global_rounds < 1:
            problems.append(f"global_rounds must be >= 1, got {fed.global_rounds}")
        if fed.local_epochs < 0:
            problems.append(f"local_epochs must be >= 0, got {fed.local_epochs}")
        if fed.aggregation not in AGGREGATION_CHOICES:
            problems.append(f"aggregation must be one of {AGGREGATION_CHOICES}")
    if problems:
        raise ConfigError("; ".join(problems))


def config_hash(config: RunConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


_BOOL_WORDS = {"true": True, "yes": True, "on": True, "1": True,
               "false": False, "no": False, "off": False, "0": False}

_FED_KEYS = {f for f in FedSettings.__dataclass_fields__}
_RUN_KEYS = {f for f in RunConfig.__dataclass_fields__} - {"fed"}


def _coerce(key: str, raw: str):
    field = (FedSettings if key in _FED_KEYS else RunConfig).__dataclass_fields__[key]
    kind = field.type
    if raw.lower() in ("none", "null") and "None" in kind:
        return None
    if kind.startswith("bool"):
        if raw.lower() not in _BOOL_WORDS:
            raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
        return _BOOL_WORDS[raw.lower()]
    if kind.startswith("int"):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if kind.startswith("float"):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    return raw


def parse_config_file(path: str) -> dict:
    """Flat `key = value` file -> raw value dict (fed keys included flat)."""
    values: dict = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value', got {line!r}")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in _RUN_KEYS and key not in _FED_KEYS:
                raise ConfigError(f"{path}:{line_no}: unknown config key {key!r}")
            values[key] = _coerce(key, raw)
    return values


def build_config(file_values: dict | None, overrides: dict, with_fed: bool) -> RunConfig:
    """Merge file values and CLI overrides (CLI wins) into a RunConfig."""
    merged: dict = {}
    for source in (file_values or {}), overrides:
        for key, value in source.items():
            if value is not None:
                merged[key] = value
    fed_values = {k: merged.pop(k) for k in list(merged) if k in _FED_KEYS}
    config = RunConfig(**merged)
    if with_fed:
        config = replace(config, fed=FedSettings(**fed_values))
    elif fed_values:
        raise ConfigError(f"federation keys {sorted(fed_values)} given to a non-federated command")
    return config

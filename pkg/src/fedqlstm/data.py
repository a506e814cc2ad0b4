"""SUSY-format CSV ingestion, feature selection, normalization, splitting.

The archive layout is one label column (0/1) followed by 18 kinematic
features. Headerless files are assumed to follow that layout exactly;
headered files declare their own feature names, label column first.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, CsvFormatError, DataError

# Archive column order of the SUSY dataset.
SUSY_FEATURE_NAMES = (
    "lepton 1 pT",
    "lepton 1 eta",
    "lepton 1 phi",
    "lepton 2 pT",
    "lepton 2 eta",
    "lepton 2 phi",
    "missing energy magnitude",
    "missing energy phi",
    "MET_rel",
    "axial MET",
    "M_R",
    "M_TR_2",
    "R",
    "MT2",
    "S_R",
    "M_Delta_R",
    "dPhi_r_b",
    "cos(theta_r1)",
)

# The reduced feature list, in its published order.
LOW7_FEATURE_NAMES = (
    "lepton 1 pT",
    "lepton 2 pT",
    "missing energy magnitude",
    "M_TR_2",
    "M_Delta_R",
    "lepton 1 eta",
    "lepton 2 eta",
)

NORMALIZATION_MODES = ("minmax", "zscore")
ANGLE_RANGE = np.pi  # min-max targets [-pi, pi]: one rotation period


def _canonical(name: str) -> str:
    return " ".join(name.split())


@dataclass
class Dataset:
    """Immutable-by-convention labeled feature matrix."""

    features: np.ndarray  # [n_samples, n_features] float64
    labels: np.ndarray  # [n_samples] float64 in {0, 1}
    feature_names: tuple
    normalization: dict | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise DataError(
                f"inconsistent dataset shapes {self.features.shape} / {self.labels.shape}"
            )
        if len(self.feature_names) != self.features.shape[1]:
            raise DataError("feature_names length does not match feature columns")

    def __len__(self) -> int:
        return self.features.shape[0]

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.features).tobytes())
        h.update(np.ascontiguousarray(self.labels).tobytes())
        h.update("|".join(self.feature_names).encode())
        return h.hexdigest()


@dataclass
class FeatureSubset:
    """Named, ordered column selection."""

    name: str
    indices: tuple
    feature_names: tuple


def resolve_subset(name: str, feature_names: tuple) -> FeatureSubset:
    """Resolve 'full18' or 'low7' against the dataset's columns, by name."""
    canon = [_canonical(c) for c in feature_names]
    if name == "full18":
        return FeatureSubset("full18", tuple(range(len(feature_names))), tuple(feature_names))
    if name == "low7":
        indices = []
        for wanted in LOW7_FEATURE_NAMES:
            try:
                indices.append(canon.index(_canonical(wanted)))
            except ValueError:
                raise ConfigError(f"feature {wanted!r} not present in dataset columns") from None
        return FeatureSubset("low7", tuple(indices), LOW7_FEATURE_NAMES)
    raise ConfigError(f"unknown feature subset {name!r} (expected 'full18' or 'low7')")


def load_csv(
    path: str,
    max_rows: int | None = None,
    has_header: bool = False,
    sample: str = "head",
    seed: int = 0,
) -> Dataset:
    """Parse a SUSY-layout CSV: label first, features after.

    `sample="head"` takes the first `max_rows` rows; `sample="random"` draws a
    seeded uniform sample of that size via reservoir sampling (single pass).
    Malformed rows raise CsvFormatError carrying the 1-based line number.
    """
    if sample not in ("head", "random"):
        raise ConfigError(f"sample must be 'head' or 'random', got {sample!r}")
    names: tuple | None = None
    rows: list[list[float]] = []
    rng = np.random.default_rng(seed) if sample == "random" else None
    n_seen = 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for line_no, record in enumerate(reader, start=1):
            if not record:
                continue
            if line_no == 1:
                if has_header:
                    names = tuple(_canonical(c) for c in record[1:])
                    continue
                names = SUSY_FEATURE_NAMES
                if len(record) != 1 + len(names):
                    raise CsvFormatError(
                        f"expected {1 + len(names)} columns (label + 18 features), got {len(record)}",
                        line_no,
                    )
            if len(record) != 1 + len(names):
                raise CsvFormatError(
                    f"expected {1 + len(names)} columns, got {len(record)}", line_no
                )
            try:
                values = [float(v) for v in record]
            except ValueError:
                bad = next(v for v in record if not _is_float(v))
                raise CsvFormatError(f"non-numeric field {bad!r}", line_no) from None
            if max_rows is None or sample == "head":
                rows.append(values)
                if max_rows is not None and len(rows) >= max_rows:
                    break
            else:  # reservoir sampling keeps a uniform subset in file order of replacement
                if len(rows) < max_rows:
                    rows.append(values)
                else:
                    j = int(rng.integers(0, n_seen + 1))
                    if j < max_rows:
                        rows[j] = values
            n_seen += 1
    if not rows:
        raise CsvFormatError("no data rows found", None)
    data = np.asarray(rows, dtype=np.float64)
    labels, features = data[:, 0], data[:, 1:]
    if not np.all(np.isfinite(features)) or not np.all(np.isfinite(labels)):
        raise DataError("non-finite values after ingestion")
    if not np.all((labels == 0.0) | (labels == 1.0)):
        bad = labels[(labels != 0.0) & (labels != 1.0)][0]
        raise DataError(f"labels must be 0 or 1, found {bad}")
    return Dataset(features, labels, names)


def _is_float(v: str) -> bool:
    try:
        float(v)
        return True
    except ValueError:
        return False


def select_features(dataset: Dataset, subset: FeatureSubset) -> Dataset:
    for idx in subset.indices:
        if not 0 <= idx < dataset.features.shape[1]:
            raise ConfigError(f"feature index {idx} out of range")
    return Dataset(
        dataset.features[:, list(subset.indices)],
        dataset.labels,
        tuple(subset.feature_names),
        normalization=dataset.normalization,
    )


def split(dataset: Dataset, ratio: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded shuffle then split with floor(ratio * n) training samples."""
    if not 0.0 < ratio < 1.0:
        raise ConfigError(f"split ratio must be in (0, 1), got {ratio}")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 3)))
    perm = rng.permutation(len(dataset))
    n_train = int(np.floor(ratio * len(dataset)))
    train_idx, test_idx = perm[:n_train], perm[n_train:]
    return (
        Dataset(dataset.features[train_idx], dataset.labels[train_idx], dataset.feature_names),
        Dataset(dataset.features[test_idx], dataset.labels[test_idx], dataset.feature_names),
    )


def normalize_fit_transform(
    train: Dataset, test: Dataset, mode: str = "minmax"
) -> tuple[Dataset, Dataset, dict]:
    """Fit per-feature scaling on the training split only, apply to both.

    minmax maps the training range onto [-pi, pi] (one rotation period, so
    angle encoding never aliases distinct training values) and clamps test
    values into that interval. zscore centers and scales by the training
    moments. A constant feature maps to 0 and emits a warning.
    """
    if mode not in NORMALIZATION_MODES:
        raise ConfigError(f"normalization must be one of {NORMALIZATION_MODES}, got {mode!r}")
    X = train.features
    if mode == "minmax":
        lo, hi = X.min(axis=0), X.max(axis=0)
        spread = hi - lo
        constant = spread == 0.0
        if np.any(constant):
            warnings.warn(
                f"constant features mapped to 0: {[train.feature_names[i] for i in np.nonzero(constant)[0]]}"
            )
        safe = np.where(constant, 1.0, spread)

        def apply(M):
            scaled = (2.0 * (M - lo) / safe - 1.0) * ANGLE_RANGE
            scaled[:, constant] = 0.0
            return np.clip(scaled, -ANGLE_RANGE, ANGLE_RANGE)

        stats = {"mode": "minmax", "min": lo.tolist(), "max": hi.tolist()}
    else:
        mean, std = X.mean(axis=0), X.std(axis=0)
        constant = std == 0.0
        if np.any(constant):
            warnings.warn(
                f"constant features mapped to 0: {[train.feature_names[i] for i in np.nonzero(constant)[0]]}"
            )
        safe = np.where(constant, 1.0, std)

        def apply(M):
            scaled = (M - mean) / safe
            scaled[:, constant] = 0.0
            return scaled

        stats = {"mode": "zscore", "mean": mean.tolist(), "std": std.tolist()}
    train_out = Dataset(apply(X.copy()), train.labels, train.feature_names, normalization=stats)
    test_out = Dataset(apply(test.features.copy()), test.labels, test.feature_names, normalization=stats)
    return train_out, test_out, stats


def apply_normalization(dataset: Dataset, stats: dict) -> Dataset:
    """Apply previously fitted scaling (used when evaluating a checkpoint)."""
    X = dataset.features.copy()
    if stats["mode"] == "minmax":
        lo = np.asarray(stats["min"])
        hi = np.asarray(stats["max"])
        spread = hi - lo
        constant = spread == 0.0
        safe = np.where(constant, 1.0, spread)
        X = (2.0 * (X - lo) / safe - 1.0) * ANGLE_RANGE
        X[:, constant] = 0.0
        X = np.clip(X, -ANGLE_RANGE, ANGLE_RANGE)
    else:
        mean = np.asarray(stats["mean"])
        std = np.asarray(stats["std"])
        constant = std == 0.0
        safe = np.where(constant, 1.0, std)
        X = (X - mean) / safe
        X[:, constant] = 0.0
    return Dataset(X, dataset.labels, dataset.feature_names, normalization=stats)


def make_sequences(dataset: Dataset, window: int = 1) -> list[tuple[np.ndarray, float]]:
    """Arrange events into (sequence, label) pairs.

    window=1 yields one single-step sequence per event with its own label;
    window=T yields sliding windows of T consecutive events (in the dataset's
    current, post-shuffle order) labeled by the final event.
    """
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    n = len(dataset)
    if window > n:
        raise ConfigError(f"window {window} exceeds dataset size {n}")
    X, y = dataset.features, dataset.labels
    if window == 1:
        return [(X[i : i + 1], float(y[i])) for i in range(n)]
    return [(X[i : i + window], float(y[i + window - 1])) for i in range(n - window + 1)]


def sequences_to_arrays(pairs: list[tuple[np.ndarray, float]]) -> tuple[np.ndarray, np.ndarray]:
    X = np.stack([seq for seq, _ in pairs])
    y = np.asarray([label for _, label in pairs], dtype=np.float64)
    return X, y

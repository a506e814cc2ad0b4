"""Versioned binary model checkpoints.

Layout: 4-byte magic, little-endian uint32 header length, UTF-8 JSON header,
then the flat float64 little-endian parameter payload. The header carries the
model kind, the resolved run config, the fitted normalization statistics, and
the parameter manifest (name + shape in declaration order), so a checkpoint
is self-describing and one format serves all three model kinds.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import CheckpointError

MAGIC = b"FQLC"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    model_kind: str
    config: dict
    normalization: dict | None
    feature_names: tuple
    params: dict
    header: dict


def save_checkpoint(
    path: str,
    *,
    model_kind: str,
    config: dict,
    params: dict,
    normalization: dict | None = None,
    feature_names: tuple = (),
    extra: dict | None = None,
) -> None:
    manifest = [{"name": name, "shape": list(np.asarray(v).shape)} for name, v in params.items()]
    header = {
        "format_version": FORMAT_VERSION,
        "model_kind": model_kind,
        "config": config,
        "normalization": normalization,
        "feature_names": list(feature_names),
        "params": manifest,
        "param_count": int(sum(np.asarray(v).size for v in params.values())),
    }
    if extra:
        header.update(extra)
    header_bytes = json.dumps(header, sort_keys=True).encode()
    flat = np.concatenate([np.asarray(v, dtype="<f8").reshape(-1) for v in params.values()])
    payload = MAGIC + struct.pack("<I", len(header_bytes)) + header_bytes + flat.tobytes()
    _atomic_write(path, payload)


def load_checkpoint(path: str) -> Checkpoint:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if blob[:4] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint (bad magic)")
    (header_len,) = struct.unpack("<I", blob[4:8])
    try:
        header = json.loads(blob[8 : 8 + header_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path} has a corrupt header: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {header.get('format_version')} (expected {FORMAT_VERSION})"
        )
    flat = np.frombuffer(blob[8 + header_len :], dtype="<f8")
    expected = sum(int(np.prod(p["shape"])) if p["shape"] else 1 for p in header["params"])
    if flat.size != expected:
        raise CheckpointError(f"{path} payload has {flat.size} values, header declares {expected}")
    params = {}
    offset = 0
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) if shape else 1
        params[entry["name"]] = flat[offset : offset + size].reshape(shape).astype(np.float64)
        offset += size
    return Checkpoint(
        model_kind=header["model_kind"],
        config=header["config"],
        normalization=header.get("normalization"),
        feature_names=tuple(header.get("feature_names", ())),
        params=params,
        header=header,
    )


def _atomic_write(path: str, payload: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

"""
Versioned binary checkpoint container.

Layout (all integers little-endian):

    bytes 0-3    magic b"PBFG"
    bytes 4-7    u32 format version (currently 1)
    bytes 8-11   u32 header length H
    bytes 12..   H bytes of UTF-8 JSON header:
                 {"shape": {...}, "arrays": [{"name": str, "length": int}, ...],
                  "meta": {...}}
    then         every array of the header table, in order, as '<f8' values

``theta`` is always the first array.
"""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from src.models.shape import ModelParams, ModelShape

__all__ = ["CheckpointError", "Checkpoint", "save_checkpoint", "load_checkpoint"]

MAGIC = b"PBFG"
VERSION = 1
_PREFIX = struct.Struct("<4sII")


class CheckpointError(ValueError):
    """Unreadable or inconsistent checkpoint file."""

    pass


@dataclass(frozen=True, eq=False)
class Checkpoint:
    shape: ModelShape
    arrays: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.shape, self.arrays["theta"])


def save_checkpoint(
    path: Path,
    params: ModelParams,
    extra_arrays: dict[str, np.ndarray] | None = None,
    meta: dict | None = None,
) -> Path:
    """
    Write parameters, optional extra vectors and JSON metadata to ``path``.

    Args:
        path: Destination file
        params: Model parameters; stored as the ``theta`` array
        extra_arrays: Further named 1-D vectors (e.g. prior_mean, eta_mean)
        meta: JSON-serialisable metadata (posterior kind, stds, λ, ...)

    Returns:
        The path written
    """
    arrays = {"theta": params.theta}
    for name, values in (extra_arrays or {}).items():
        if name == "theta":
            raise CheckpointError("'theta' is reserved for the model parameters")
        arrays[name] = np.asarray(values, dtype=np.float64).ravel()

    header = {
        "shape": params.shape.to_dict(),
        "arrays": [
            {"name": name, "length": int(values.shape[0])} for name, values in arrays.items()
        ],
        "meta": meta or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(_PREFIX.pack(MAGIC, VERSION, len(header_bytes)))
        handle.write(header_bytes)
        for values in arrays.values():
            handle.write(np.ascontiguousarray(values, dtype="<f8").tobytes())
    return path


def load_checkpoint(path: Path) -> Checkpoint:
    """
    Read a checkpoint written by ``save_checkpoint``.

    Raises:
        CheckpointError: On missing file, bad magic, unknown version or truncation
    """
    path = Path(path)
    try:
        blob = path.read_bytes()
    except FileNotFoundError:
        raise CheckpointError(f"Checkpoint not found: {path}")

    try:
        magic, version, header_len = _PREFIX.unpack_from(blob, 0)
    except struct.error:
        raise CheckpointError(f"Checkpoint too short: {path}")
    if magic != MAGIC:
        raise CheckpointError(f"Bad checkpoint magic {magic!r} in {path}")
    if version != VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {version} in {path}")

    offset = _PREFIX.size
    try:
        header = json.loads(blob[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"Corrupt checkpoint header in {path}: {e}")
    offset += header_len

    arrays: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        nbytes = 8 * int(entry["length"])
        if offset + nbytes > len(blob):
            raise CheckpointError(f"Checkpoint truncated while reading '{entry['name']}'")
        raw = np.frombuffer(blob, dtype="<f8", count=entry["length"], offset=offset)
        arrays[entry["name"]] = raw.astype(np.float64)
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError(f"Trailing bytes after checkpoint payload in {path}")

    shape = ModelShape.from_dict(header["shape"])
    checkpoint = Checkpoint(shape, arrays, header.get("meta", {}))
    ModelParams(shape, arrays["theta"])  # validates the parameter count
    return checkpoint

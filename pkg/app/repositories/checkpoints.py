"""
Checkpoint Container 💾

Binary layout (all integers little-endian):

    magic           8 bytes   b"FOGCKPT\\n"
    header_length   8 bytes   unsigned
    header          JSON, UTF-8, sorted keys, no whitespace
    data            raw little-endian floats, tensors back to back in canonical order

The header holds `version`, `config` (ModelConfig fields), `seed`, `kind`,
`dtype` ("float64" or "float32") and `tensors`: a list of
{name, shape, offset, count} with `offset` in bytes from the start of the data
section. No timestamps are written, so identical parameters give identical files.
"""

import json
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

from app.core.network import ModelParams
from app.exceptions import CheckpointFormatError, ConfigError, ConfigMismatchError, DataIOError
from app.models import DatasetKind
from app.schemas import ModelConfig

MAGIC = b"FOGCKPT\n"
VERSION = 1
_DTYPES = {"float64": "<f8", "float32": "<f4"}


class Checkpoint(NamedTuple):
    params: ModelParams
    seed: int
    kind: DatasetKind


def encode_checkpoint(params: ModelParams, seed: int, kind: DatasetKind) -> bytes:
    dtype_name = str(params.dtype)
    if dtype_name not in _DTYPES:
        raise CheckpointFormatError(f"unsupported parameter dtype {dtype_name}")
    wire = np.dtype(_DTYPES[dtype_name])

    table: list[dict[str, Any]] = []
    chunks: list[bytes] = []
    offset = 0
    for name, tensor in params.tensors.items():
        raw = np.ascontiguousarray(tensor, dtype=wire).tobytes()
        table.append({"name": name, "shape": list(tensor.shape), "offset": offset, "count": int(tensor.size)})
        chunks.append(raw)
        offset += len(raw)

    header = {
        "version": VERSION,
        "config": params.config.model_dump(mode="json"),
        "seed": int(seed),
        "kind": kind.value,
        "dtype": dtype_name,
        "tensors": table,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + len(header_bytes).to_bytes(8, "little") + header_bytes + b"".join(chunks)


def decode_checkpoint(blob: bytes) -> Checkpoint:
    """
    Raises:
        CheckpointFormatError: On a bad magic, unsupported version or truncated data.
        ConfigMismatchError: If the tensor table disagrees with the stored configuration.
    """
    if not blob.startswith(MAGIC):
        raise CheckpointFormatError("not a checkpoint file (bad magic)")
    start = len(MAGIC) + 8
    if len(blob) < start:
        raise CheckpointFormatError("truncated checkpoint header")
    header_length = int.from_bytes(blob[len(MAGIC) : start], "little")
    try:
        header = json.loads(blob[start : start + header_length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointFormatError(f"unreadable checkpoint header: {e}") from e

    version = header.get("version")
    if version != VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version} (expected {VERSION})")
    try:
        dtype_name = header["dtype"]
        wire = np.dtype(_DTYPES[dtype_name])
        config = ModelConfig.build(**header["config"])
        kind = DatasetKind(header["kind"])
        seed = int(header["seed"])
        table = header["tensors"]
    except (KeyError, ValueError, TypeError, ConfigError) as e:
        raise CheckpointFormatError(f"malformed checkpoint header: {e}") from e

    data = memoryview(blob)[start + header_length :]
    tensors: dict[str, np.ndarray[Any, Any]] = {}
    for entry in table:
        count = int(entry["count"])
        offset = int(entry["offset"])
        shape = tuple(int(s) for s in entry["shape"])
        if int(np.prod(shape)) != count:
            raise ConfigMismatchError(entry["name"], f"{count} values", f"shape {shape}")
        end = offset + count * wire.itemsize
        if end > len(data):
            raise CheckpointFormatError(f"truncated data for tensor '{entry['name']}'")
        values = np.frombuffer(data[offset:end], dtype=wire).reshape(shape)
        tensors[entry["name"]] = values.astype(np.dtype(dtype_name))
    return Checkpoint(ModelParams(config, tensors), seed, kind)


def save_checkpoint(path: Path, params: ModelParams, seed: int, kind: DatasetKind) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_checkpoint(params, seed, kind))
    except OSError as e:
        raise DataIOError(f"cannot write checkpoint: {e.strerror or e}", path=str(path)) from e


def load_checkpoint(path: Path) -> Checkpoint:
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise DataIOError(f"cannot read checkpoint: {e.strerror or e}", path=str(path)) from e
    return decode_checkpoint(blob)

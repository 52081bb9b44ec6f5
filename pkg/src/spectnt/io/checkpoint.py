"""Checkpoint file: "STNC", u32 version, u32 config length + JSON, u32 count, then
(u16 name length, UTF-8 name, embedded tensor file) per parameter."""

import json
import logging
import struct
from pathlib import Path
from typing import Any

import numpy as np

from spectnt.errors import ConfigError, FileFormatError
from spectnt.io.tensorfile import atomic_write, decode_tensor, encode_tensor
from spectnt.model.config import ModelConfig
from spectnt.model.spectnt import SpecTNT
from spectnt.nn.module import Module

logger = logging.getLogger(__name__)

MAGIC = b"STNC"
VERSION = 1


def encode_checkpoint(model: SpecTNT, meta: dict[str, Any] | None = None) -> bytes:
    blob = json.dumps(
        {"model": model.config.to_dict(), "meta": meta or {}}, sort_keys=True
    ).encode("utf-8")
    state = model.state_dict()
    parts = [MAGIC, struct.pack("<II", VERSION, len(blob)), blob, struct.pack("<I", len(state))]
    for name in sorted(state):
        raw = name.encode("utf-8")
        parts += [struct.pack("<H", len(raw)), raw, encode_tensor(state[name])]
    return b"".join(parts)


def save_checkpoint(path: str | Path, model: SpecTNT, meta: dict[str, Any] | None = None) -> None:
    atomic_write(path, encode_checkpoint(model, meta))
    logger.debug("saved %d tensors to %s", len(model.parameters()), path)


def decode_checkpoint(buf: bytes) -> tuple[ModelConfig, dict[str, np.ndarray], dict[str, Any]]:
    if buf[:4] != MAGIC:
        raise FileFormatError(f"bad checkpoint magic {buf[:4]!r}", 0)
    if len(buf) < 12:
        raise FileFormatError("truncated checkpoint header", len(buf))
    version, blob_len = struct.unpack_from("<II", buf, 4)
    if version != VERSION:
        raise FileFormatError(f"unsupported checkpoint version {version}", 4)
    pos = 12
    if len(buf) < pos + blob_len + 4:
        raise FileFormatError(
            f"truncated config blob: need {blob_len} bytes, have {len(buf) - pos}", pos
        )
    try:
        doc = json.loads(buf[pos : pos + blob_len].decode("utf-8"))
        config = ModelConfig.from_dict(doc["model"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ConfigError) as exc:
        raise FileFormatError(f"config blob does not parse: {exc}", pos) from exc
    pos += blob_len
    (count,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    state: dict[str, np.ndarray] = {}
    for _ in range(count):
        if len(buf) < pos + 2:
            raise FileFormatError("truncated tensor table", pos)
        (name_len,) = struct.unpack_from("<H", buf, pos)
        if len(buf) < pos + 2 + name_len:
            raise FileFormatError("truncated tensor name", pos + 2)
        try:
            name = buf[pos + 2 : pos + 2 + name_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FileFormatError(f"tensor name is not valid UTF-8: {exc.reason}", pos + 2) from exc
        if name in state:
            raise FileFormatError(f"duplicate tensor name {name!r}", pos)
        state[name], pos = decode_tensor(buf, pos + 2 + name_len)
    if pos != len(buf):
        raise FileFormatError(f"{len(buf) - pos} trailing bytes after tensor table", pos)
    return config, state, doc.get("meta", {})


def load_checkpoint(path: str | Path) -> tuple[ModelConfig, dict[str, np.ndarray], dict[str, Any]]:
    return decode_checkpoint(Path(path).read_bytes())


def load_into(model: Module, path: str | Path) -> dict[str, Any]:
    """Load a checkpoint's tensors into ``model``; raises CheckpointError listing mismatches."""
    _, state, meta = load_checkpoint(path)
    model.load_state_dict(state)
    return meta


def restore_model(path: str | Path) -> tuple[SpecTNT, dict[str, Any]]:
    """Rebuild the model described by the checkpoint's config and load its tensors."""
    config, state, meta = load_checkpoint(path)
    model = SpecTNT(config)
    model.load_state_dict(state)
    return model, meta

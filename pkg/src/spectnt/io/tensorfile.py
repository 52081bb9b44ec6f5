"""Little-endian tensor file: "STNT", u32 version, u8 dtype, u8 ndim, ndim × u64 dims, payload."""

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from spectnt.autograd.tensor import Tensor
from spectnt.errors import FileFormatError

MAGIC = b"STNT"
VERSION = 1
DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_HEAD = struct.Struct("<4sIBB")
_MAX_PAYLOAD = 1 << 62


def atomic_write(path: str | Path, data: bytes) -> None:
    """Write to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def encode_tensor(value: Tensor | np.ndarray) -> bytes:
    array = value.data if isinstance(value, Tensor) else np.asarray(value)
    code = DTYPE_CODES.get(array.dtype)
    if code is None:
        raise FileFormatError(f"cannot store dtype {array.dtype}; only float32 and float64")
    if array.ndim > 255:
        raise FileFormatError(f"rank {array.ndim} does not fit the u8 ndim field")
    head = _HEAD.pack(MAGIC, VERSION, code, array.ndim)
    dims = struct.pack(f"<{array.ndim}Q", *array.shape)
    return head + dims + np.ascontiguousarray(array, dtype=DTYPES[code]).tobytes()


def decode_tensor(buf: bytes, offset: int = 0) -> tuple[np.ndarray, int]:
    """Parse one tensor starting at ``offset``; returns the array and the offset just past it."""
    if len(buf) - offset < _HEAD.size:
        raise FileFormatError(
            f"truncated tensor header: need {_HEAD.size} bytes, have {len(buf) - offset}", offset
        )
    magic, version, code, ndim = _HEAD.unpack_from(buf, offset)
    if magic != MAGIC:
        raise FileFormatError(f"bad tensor magic {magic!r}", offset)
    if version != VERSION:
        raise FileFormatError(f"unsupported tensor version {version}", offset + 4)
    if code not in DTYPES:
        raise FileFormatError(f"unknown dtype code {code}", offset + 8)
    pos = offset + _HEAD.size
    if len(buf) - pos < 8 * ndim:
        raise FileFormatError(f"truncated dims: need {8 * ndim} bytes, have {len(buf) - pos}", pos)
    dims = struct.unpack_from(f"<{ndim}Q", buf, pos)
    pos += 8 * ndim
    dtype = DTYPES[code]
    count = 1
    for d in dims:
        count *= d
        if count * dtype.itemsize > _MAX_PAYLOAD:
            raise FileFormatError(f"dims {dims} overflow the payload size", pos - 8 * ndim)
    expected = count * dtype.itemsize
    if len(buf) - pos < expected:
        raise FileFormatError(
            f"truncated payload: expected {expected} bytes, got {len(buf) - pos}", pos
        )
    array = np.frombuffer(buf, dtype=dtype, count=count, offset=pos).reshape(dims)
    return array.astype(dtype.newbyteorder("="), copy=True), pos + expected


def write_tensor(path: str | Path, value: Tensor | np.ndarray) -> None:
    atomic_write(path, encode_tensor(value))


def read_tensor(path: str | Path) -> np.ndarray:
    buf = Path(path).read_bytes()
    array, end = decode_tensor(buf)
    if end != len(buf):
        raise FileFormatError(f"{len(buf) - end} trailing bytes after tensor payload", end)
    return array

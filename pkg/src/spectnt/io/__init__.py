from spectnt.io.checkpoint import (
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    load_into,
    restore_model,
    save_checkpoint,
)
from spectnt.io.tensorfile import atomic_write, decode_tensor, encode_tensor, read_tensor, write_tensor

__all__ = [
    "atomic_write",
    "decode_checkpoint",
    "decode_tensor",
    "encode_checkpoint",
    "encode_tensor",
    "load_checkpoint",
    "load_into",
    "read_tensor",
    "restore_model",
    "save_checkpoint",
    "write_tensor",
]

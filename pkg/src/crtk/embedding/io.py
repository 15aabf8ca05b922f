"""Binary model files.

Layout, all little-endian::

    b"CREM"                    4 bytes
    format version             u32
    vocabulary size |V|        u64
    dimension d                u32
    config block               CONFIG_FORMAT (64 bytes), fields in TrainConfig order
    |V| x {u16 token length, UTF-8 token, u64 frequency}
    input vectors              |V| * d f32, row-major
    output vectors             |V| * d f32, row-major
    CRC32 of all prior bytes   u32
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import CorruptModelError, InputFileError
from .model import EmbeddingModel, TrainConfig
from .vocab import Vocabulary

MAGIC = b"CREM"
VERSION = 1
HEADER = struct.Struct("<4sIQI")
# vector_size window min_count epochs negatives initial_lr final_lr subsample_t seed workers memory_budget
CONFIG_FORMAT = struct.Struct("<IIIIIdddQIQ")
_CONFIG_FIELDS = (
    "vector_size", "window", "min_count", "epochs", "negatives",
    "initial_lr", "final_lr", "subsample_t", "seed", "workers", "memory_budget",
)


def encode_model(model: EmbeddingModel) -> bytes:
    n, d = model.input_vectors.shape
    cfg = model.config
    parts = [
        HEADER.pack(MAGIC, VERSION, n, d),
        CONFIG_FORMAT.pack(*(getattr(cfg, f) for f in _CONFIG_FIELDS)),
    ]
    for tok, count in zip(model.vocab.tokens, model.vocab.counts):
        b = tok.encode("utf-8")
        parts.append(struct.pack("<H", len(b)) + b + struct.pack("<Q", count))
    parts.append(np.ascontiguousarray(model.input_vectors, dtype="<f4").tobytes())
    parts.append(np.ascontiguousarray(model.output_vectors, dtype="<f4").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def decode_model(data: bytes) -> EmbeddingModel:
    if len(data) < HEADER.size + CONFIG_FORMAT.size + 4:
        raise CorruptModelError("model file truncated in header", len(data))
    magic, version, n, d = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CorruptModelError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise CorruptModelError(f"unsupported model format version {version}", 4)
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise CorruptModelError("checksum mismatch (file truncated or damaged)", len(data) - 4)
    off = HEADER.size
    cfg_vals = CONFIG_FORMAT.unpack_from(data, off)
    off += CONFIG_FORMAT.size
    tokens, counts = [], []
    for _ in range(n):
        if off + 2 > len(body):
            raise CorruptModelError("vocabulary truncated", off)
        (length,) = struct.unpack_from("<H", body, off)
        off += 2
        if off + length + 8 > len(body):
            raise CorruptModelError("vocabulary truncated", off)
        tokens.append(body[off : off + length].decode("utf-8"))
        off += length
        counts.append(struct.unpack_from("<Q", body, off)[0])
        off += 8
    size = n * d * 4
    if off + 2 * size != len(body):
        raise CorruptModelError(
            f"vector payload is {len(body) - off} bytes, expected {2 * size}", off
        )
    w_in = np.frombuffer(body, dtype="<f4", count=n * d, offset=off).reshape(n, d).astype(np.float32)
    w_out = np.frombuffer(body, dtype="<f4", count=n * d, offset=off + size).reshape(n, d).astype(np.float32)
    config = TrainConfig(**dict(zip(_CONFIG_FIELDS, cfg_vals)))
    return EmbeddingModel(Vocabulary(tuple(tokens), tuple(counts)), w_in, w_out, config)


def save_model(model: EmbeddingModel, path) -> None:
    try:
        Path(path).write_bytes(encode_model(model))
    except OSError as exc:
        raise InputFileError(f"cannot write model file {path}: {exc}") from exc


def load_model(path) -> EmbeddingModel:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise InputFileError(f"cannot read model file {path}: {exc}") from exc
    return decode_model(data)

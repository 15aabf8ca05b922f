"""Binary cache of preprocessed token streams.

Layout (little-endian)::

    magic      4 bytes  b"CRTK"
    version    u32
    corpus     32 bytes sha256 of the corpus
    config     32 bytes sha256 of the preprocessing configuration
    n_streams  u64
    per stream:
        provenance   u16 length + UTF-8 bytes
        n_sentences  u32
        per sentence: u32 token count, then per token u16 length + UTF-8 bytes
"""

from __future__ import annotations

import struct
from pathlib import Path

from ..errors import CorruptFileError, InputFileError
from .text import TokenStream

MAGIC = b"CRTK"
VERSION = 1
_HEAD = struct.Struct("<4sI32s32sQ")


class StaleCacheError(Exception):
    """The cache exists but was built from a different corpus or configuration."""


def write_cache(streams, path, corpus_digest: str, config_digest: str) -> None:
    parts = [
        _HEAD.pack(
            MAGIC, VERSION, bytes.fromhex(corpus_digest), bytes.fromhex(config_digest), len(streams)
        )
    ]
    for s in streams:
        prov = s.provenance.encode("utf-8")
        parts.append(struct.pack("<H", len(prov)) + prov)
        parts.append(struct.pack("<I", len(s.sentences)))
        for sent in s.sentences:
            parts.append(struct.pack("<I", len(sent)))
            for tok in sent:
                b = tok.encode("utf-8")
                if len(b) > 0xFFFF:
                    raise ValueError(f"token too long for cache: {tok[:40]!r}...")
                parts.append(struct.pack("<H", len(b)) + b)
    try:
        Path(path).write_bytes(b"".join(parts))
    except OSError as exc:
        raise InputFileError(f"cannot write token cache {path}: {exc}") from exc


def read_cache(path, corpus_digest: str | None = None, config_digest: str | None = None):
    """Load streams; raise StaleCacheError when the stored digests differ from the given ones."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise InputFileError(f"cannot read token cache {path}: {exc}") from exc
    if len(data) < _HEAD.size:
        raise CorruptFileError("token cache truncated in header", 0)
    magic, version, cdig, pdig, n = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise CorruptFileError(f"bad token cache magic {magic!r}", 0)
    if version != VERSION:
        raise CorruptFileError(f"unsupported token cache version {version}", 4)
    if corpus_digest is not None and cdig.hex() != corpus_digest:
        raise StaleCacheError("corpus changed since the token cache was written")
    if config_digest is not None and pdig.hex() != config_digest:
        raise StaleCacheError("preprocessing configuration changed since the token cache was written")

    off = _HEAD.size

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(data):
            raise CorruptFileError("token cache truncated", off)
        vals = struct.unpack_from(fmt, data, off)
        off += size
        return vals[0]

    def take_str():
        nonlocal off
        length = take("<H")
        if off + length > len(data):
            raise CorruptFileError("token cache truncated", off)
        s = data[off : off + length].decode("utf-8")
        off += length
        return s

    streams = []
    for _ in range(n):
        prov = take_str()
        sentences = []
        for _ in range(take("<I")):
            sentences.append(tuple(take_str() for _ in range(take("<I"))))
        streams.append(TokenStream(tuple(sentences), prov))
    if off != len(data):
        raise CorruptFileError("trailing bytes after token cache payload", off)
    return streams

"""Whole-file encryption along a session key, and the PCTC container.

Container layout (little endian)::

    "PCTC" | version u8 = 1 | original_len u64 | payload

The payload is the concatenation of the encrypted key blocks, so its length
equals the key's total block size.  Files are processed in batches of whole
blocks no larger than ``BATCH_BYTES`` so memory stays bounded.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterator

import numpy as np

from .cipher_core import transform_blocks
from .errors import CorruptContainer, KeyFileMismatch, UnknownFormat
from .keygen import SessionKey

CONTAINER_MAGIC = b"PCTC"
CONTAINER_VERSION = 1
_HEADER = struct.Struct("<4sBQ")
HEADER_SIZE = _HEADER.size
BATCH_BYTES = 1 << 20


@dataclass(frozen=True)
class CipherContainer:
    original_len: int
    payload: bytes

    def __post_init__(self):
        if self.original_len > len(self.payload):
            raise CorruptContainer(
                f"original length {self.original_len} exceeds payload of {len(self.payload)} bytes",
                offset=5)

    def to_bytes(self) -> bytes:
        return pack_header(self.original_len) + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> CipherContainer:
        length = parse_header(data[:HEADER_SIZE])
        return cls(length, bytes(data[HEADER_SIZE:]))


def pack_header(original_len: int) -> bytes:
    return _HEADER.pack(CONTAINER_MAGIC, CONTAINER_VERSION, original_len)


def parse_header(head: bytes) -> int:
    """Validate a container header and return the original length."""
    if len(head) < 4 or head[:4] != CONTAINER_MAGIC:
        raise UnknownFormat("not a PCTC container", offset=0)
    if len(head) < 5:
        raise CorruptContainer("truncated container header", offset=len(head))
    if head[4] != CONTAINER_VERSION:
        raise UnknownFormat(f"unsupported container version {head[4]}", offset=4)
    if len(head) < HEADER_SIZE:
        raise CorruptContainer("truncated container header", offset=len(head))
    return _HEADER.unpack_from(head)[2]


def iter_batches(key: SessionKey, batch_bytes: int = BATCH_BYTES) -> Iterator[tuple[int, int, int]]:
    """Yield ``(first_block, end_block, nbytes)`` runs of whole key blocks."""
    ends = np.cumsum(key.block_sizes)
    n = ends.size
    i, base = 0, 0
    while i < n:
        j = int(np.searchsorted(ends, base + batch_bytes, side="right"))
        j = max(j, i + 1)
        top = int(ends[j - 1])
        yield i, j, top - base
        i, base = j, top


def _read_exact(src: BinaryIO, n: int) -> bytes:
    chunks, got = [], 0
    while got < n:
        chunk = src.read(n - got)
        if not chunk:
            break
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def _stream_size(src: BinaryIO) -> int:
    try:
        pos = src.tell()
        end = src.seek(0, os.SEEK_END)
        src.seek(pos)
        return end - pos
    except (AttributeError, OSError, io.UnsupportedOperation) as exc:
        raise ValueError("source is not seekable; pass length explicitly") from exc


def check_lengths(plain_len: int, key: SessionKey, pad: bool) -> None:
    total = key.original_len
    if plain_len > total:
        raise KeyFileMismatch(f"plaintext is {plain_len} bytes, key covers only {total}")
    if plain_len < total and not pad:
        raise KeyFileMismatch(
            f"plaintext is {plain_len} bytes but key covers {total}; use padding to reuse a key")


def encrypt_stream(
    src: BinaryIO,
    dst: BinaryIO,
    key: SessionKey,
    pad: bool = False,
    length: int | None = None,
) -> int:
    """Encrypt ``src`` into a PCTC container written to ``dst``.

    Returns the number of plaintext bytes consumed.
    """
    if length is None:
        length = _stream_size(src)
    check_lengths(length, key, pad)
    dst.write(pack_header(length))
    exps = key.array
    digest = key.digest
    remaining = length
    for i, j, nbytes in iter_batches(key):
        take = min(nbytes, remaining)
        chunk = _read_exact(src, take)
        if len(chunk) != take:
            raise KeyFileMismatch(f"source ended {take - len(chunk)} bytes early")
        remaining -= take
        buf = np.zeros(nbytes, dtype=np.uint8)
        buf[:take] = np.frombuffer(chunk, dtype=np.uint8)
        transform_blocks(buf, exps[i:j], i, digest)
        dst.write(buf.tobytes())
    return length


def decrypt_stream(src: BinaryIO, dst: BinaryIO, key: SessionKey) -> int:
    """Decrypt a PCTC container from ``src`` into ``dst``; returns bytes written."""
    head = _read_exact(src, HEADER_SIZE)
    original_len = parse_header(head)
    total = key.original_len
    if original_len > total:
        raise CorruptContainer(
            f"container holds {original_len} bytes but key covers {total}", offset=5)
    exps = key.array
    digest = key.digest
    remaining = original_len
    offset = HEADER_SIZE
    for i, j, nbytes in iter_batches(key):
        chunk = _read_exact(src, nbytes)
        if len(chunk) != nbytes:
            raise CorruptContainer(
                f"payload shorter than key partition ({total} bytes)", offset=offset + len(chunk))
        buf = np.frombuffer(chunk, dtype=np.uint8).copy()
        transform_blocks(buf, exps[i:j], i, digest, decrypt=True)
        keep = min(nbytes, remaining)
        dst.write(buf[:keep].tobytes())
        remaining -= keep
        offset += nbytes
    if src.read(1):
        raise CorruptContainer(f"payload longer than key partition ({total} bytes)", offset=offset)
    return original_len


def encrypt_bytes(plaintext: bytes, key: SessionKey, pad: bool = False) -> bytes:
    """In-memory form of ``encrypt_stream``; returns the serialized container."""
    out = io.BytesIO()
    encrypt_stream(io.BytesIO(plaintext), out, key, pad=pad, length=len(plaintext))
    return out.getvalue()


def decrypt_bytes(container: bytes, key: SessionKey) -> bytes:
    out = io.BytesIO()
    decrypt_stream(io.BytesIO(container), out, key)
    return out.getvalue()


def encrypt_payload(plaintext: bytes, key: SessionKey, pad: bool = False) -> bytes:
    """Ciphertext blocks only, without the container header."""
    check_lengths(len(plaintext), key, pad)
    buf = np.zeros(key.original_len, dtype=np.uint8)
    buf[:len(plaintext)] = np.frombuffer(plaintext, dtype=np.uint8)
    exps = key.array
    start = 0
    for i, j, nbytes in iter_batches(key):
        transform_blocks(buf[start:start + nbytes], exps[i:j], i, key.digest)
        start += nbytes
    return buf.tobytes()


def decrypt_payload(payload: bytes, key: SessionKey, original_len: int | None = None) -> bytes:
    if len(payload) != key.original_len:
        raise CorruptContainer(
            f"payload is {len(payload)} bytes, key partition is {key.original_len}")
    buf = np.frombuffer(payload, dtype=np.uint8).copy()
    exps = key.array
    start = 0
    for i, j, nbytes in iter_batches(key):
        transform_blocks(buf[start:start + nbytes], exps[i:j], i, key.digest, decrypt=True)
        start += nbytes
    if original_len is None:
        original_len = len(payload)
    return buf[:original_len].tobytes()

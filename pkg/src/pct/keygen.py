"""Session key generation.

A session key is a shuffled sequence of block-size exponents.  Exponent
``i`` stands for a block of ``2**(i-1)`` bytes and the blocks tile the
plaintext exactly.  Keys are produced by writing the plaintext length in
binary, repeatedly moving mass from a high cell to a lower one, expanding
the cells into a list of exponents and shuffling that list.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadIndices, CorruptKey, EmptyInput, InsufficientMass, UnknownFormat
from .rng import RandomSource

CAP = 21  # largest exponent: 2**20 byte (1 MiB) blocks
# Block budget for randomization: at most length // 3 blocks, never more than
# MAX_BLOCKS.  Neither bound can be met by a uniform power-of-two tiling, so a
# key whose budget is exhausted still mixes block sizes.
MAX_BLOCKS = 0xFFFF
BUDGET_DIVISOR = 3
KEY_MAGIC = b"PCTK"
KEY_VERSION = 1
_KEY_HEADER = struct.Struct("<4sBQI")


@dataclass(frozen=True)
class LengthArray:
    """Counts ``a[i]`` of blocks of ``2**(i-1)`` bytes, indexed from 1.

    ``counts[0]`` holds ``a[1]``.  Indices past the end of ``counts`` are 0.
    """

    counts: tuple[int, ...]
    total_len: int

    def __getitem__(self, i: int) -> int:
        if i < 1:
            raise IndexError("cells are indexed from 1")
        return self.counts[i - 1] if i <= len(self.counts) else 0

    @property
    def top(self) -> int:
        """Highest index holding a nonzero count (0 when empty)."""
        for i in range(len(self.counts), 0, -1):
            if self.counts[i - 1]:
                return i
        return 0

    @property
    def mass(self) -> int:
        return sum(c << (i - 1) for i, c in enumerate(self.counts, start=1))

    @property
    def block_count(self) -> int:
        return sum(self.counts)

    def as_dict(self) -> dict[int, int]:
        return {i: c for i, c in enumerate(self.counts, start=1) if c}


def decompose_length(length: int) -> LengthArray:
    """Binary digits of ``length``, least significant bit in cell 1."""
    if length < 1:
        raise EmptyInput("cannot build a key for an empty input")
    bits = tuple((length >> k) & 1 for k in range(length.bit_length()))
    return LengthArray(bits, length)


def redistribute(arr: LengthArray, m_high: int, m_low: int, x: int) -> LengthArray:
    """Move ``x`` blocks from cell ``m_high`` into ``x * 2**(m_high-m_low)`` blocks of cell ``m_low``."""
    if not m_high > m_low >= 1:
        raise BadIndices(f"need m_high > m_low >= 1, got m_high={m_high}, m_low={m_low}")
    if x < 1:
        raise InsufficientMass(f"x must be at least 1, got {x}")
    if x > arr[m_high]:
        raise InsufficientMass(f"cell {m_high} holds {arr[m_high]}, cannot take {x}")
    counts = list(arr.counts)
    counts[m_high - 1] -= x
    counts[m_low - 1] += x << (m_high - m_low)
    return LengthArray(tuple(counts), arr.total_len)


def normalize_cap(arr: LengthArray, cap: int = CAP) -> LengthArray:
    """Break every block above ``cap`` into blocks of exactly ``cap``."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    for i in range(len(arr.counts), cap, -1):
        if arr[i]:
            arr = redistribute(arr, i, cap, arr[i])
    counts = arr.counts[:cap]
    return LengthArray(counts, arr.total_len)


def block_budget(length: int) -> int:
    """Most blocks the randomization may create for a ``length``-byte input."""
    return max(1, min(MAX_BLOCKS, length // BUDGET_DIVISOR))


def randomize_partition(
    arr: LengthArray, rng: RandomSource, max_blocks: int | None = None
) -> LengthArray:
    """Apply a random number of random redistributions.

    The round count is uniform in ``[b, 4b]`` with ``b`` the bit length of
    the plaintext length.  Each round draws the source cell among occupied
    cells >= 2, the target cell below it and the amount moved.  The amount is
    clipped so the block count never exceeds ``max_blocks`` (inputs already
    holding more blocks than that are left alone); rounds with nothing to
    move are skipped.  ``max_blocks`` defaults to ``block_budget``.
    """
    if max_blocks is None:
        max_blocks = block_budget(arr.total_len)
    b = arr.total_len.bit_length()
    rounds = rng.randint(b, 4 * b)
    counts = list(arr.counts)
    n_blocks = sum(counts)
    for _ in range(rounds):
        candidates = [i for i in range(2, len(counts) + 1) if counts[i - 1]]
        if not candidates:
            continue
        m_high = candidates[rng.randbelow(len(candidates))]
        m_low = rng.randint(1, m_high - 1)
        x = rng.randint(1, counts[m_high - 1])
        growth = (1 << (m_high - m_low)) - 1
        x = min(x, max(0, max_blocks - n_blocks) // growth)
        if x == 0:
            continue
        counts[m_high - 1] -= x
        counts[m_low - 1] += x << (m_high - m_low)
        n_blocks += x * growth
    return LengthArray(tuple(counts), arr.total_len)


def expand_to_sequence(arr: LengthArray) -> np.ndarray:
    """Each index ``i`` repeated ``a[i]`` times, ascending."""
    idx = np.arange(1, len(arr.counts) + 1, dtype=np.uint8)
    return np.repeat(idx, np.asarray(arr.counts, dtype=np.int64))


def shuffle(seq: np.ndarray, rng: RandomSource) -> np.ndarray:
    return rng.shuffle(seq)


def sequence_mass(exponents) -> int:
    """Exact ``sum(2**(e-1))`` over an exponent sequence."""
    arr = np.frombuffer(exponents, dtype=np.uint8) if isinstance(exponents, (bytes, bytearray)) \
        else np.asarray(exponents, dtype=np.int64)
    if arr.size == 0:
        return 0
    counts = np.bincount(arr)
    return sum(int(c) << (i - 1) for i, c in enumerate(counts) if c and i >= 1)


@dataclass(frozen=True)
class SessionKey:
    """Ordered block exponents plus the plaintext length they tile.

    ``digest`` is SHA-512 over the serialized key file, recomputed on
    construction.
    """

    exponents: bytes
    original_len: int
    digest: bytes = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ex = bytes(self.exponents)
        object.__setattr__(self, "exponents", ex)
        if not ex:
            raise EmptyInput("a session key needs at least one block")
        arr = np.frombuffer(ex, dtype=np.uint8)
        bad = np.flatnonzero((arr < 1) | (arr > CAP))
        if bad.size:
            raise CorruptKey(f"exponent {arr[bad[0]]} outside 1..{CAP}",
                             offset=_KEY_HEADER.size + int(bad[0]))
        if sequence_mass(ex) != self.original_len:
            raise CorruptKey(
                f"blocks sum to {sequence_mass(ex)} bytes, header says {self.original_len}")
        object.__setattr__(self, "digest", hashlib.sha512(self.to_bytes()).digest())

    def __len__(self) -> int:
        return len(self.exponents)

    @property
    def array(self) -> np.ndarray:
        return np.frombuffer(self.exponents, dtype=np.uint8)

    @property
    def block_sizes(self) -> np.ndarray:
        return np.left_shift(np.int64(1), self.array.astype(np.int64) - 1)

    def histogram(self) -> dict[int, int]:
        counts = np.bincount(self.array, minlength=CAP + 1)
        return {i: int(c) for i, c in enumerate(counts) if c}

    def to_bytes(self) -> bytes:
        return _KEY_HEADER.pack(KEY_MAGIC, KEY_VERSION, self.original_len,
                                len(self.exponents)) + self.exponents

    @classmethod
    def from_bytes(cls, data: bytes) -> SessionKey:
        if len(data) < 4 or data[:4] != KEY_MAGIC:
            raise UnknownFormat("not a PCTK key file", offset=0)
        if len(data) < 5:
            raise CorruptKey("truncated key header", offset=len(data))
        if data[4] != KEY_VERSION:
            raise UnknownFormat(f"unsupported key version {data[4]}", offset=4)
        if len(data) < _KEY_HEADER.size:
            raise CorruptKey("truncated key header", offset=len(data))
        _, _, length, n = _KEY_HEADER.unpack_from(data)
        end = _KEY_HEADER.size + n
        if len(data) < end:
            raise CorruptKey(f"key declares {n} blocks but is truncated", offset=len(data))
        if len(data) > end:
            raise CorruptKey("trailing bytes after key body", offset=end)
        return cls(data[_KEY_HEADER.size:end], length)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> SessionKey:
        return cls.from_bytes(Path(path).read_bytes())


def generate_session_key(
    length: int,
    rng: RandomSource | None = None,
    *,
    cap: int = CAP,
    max_blocks: int | None = None,
) -> SessionKey:
    """Fresh session key for a plaintext of ``length`` bytes.

    ``rng`` defaults to an OS-seeded source; pass a seeded one only for
    reproducible tests.
    """
    if length < 1:
        raise EmptyInput("cannot build a key for an empty input")
    if rng is None:
        rng = RandomSource()
    arr = normalize_cap(decompose_length(length), cap)
    arr = randomize_partition(arr, rng, max_blocks=max_blocks)
    seq = shuffle(expand_to_sequence(arr), rng)
    return SessionKey(seq.tobytes(), length)

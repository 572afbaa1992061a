"""Random source used by key generation and the metrics harness.

Every draw comes from a ChaCha20 keystream.  Unseeded sources key the
stream from ``os.urandom`` which makes them a conventional CSPRNG; seeded
sources key it with the caller's 32-byte seed so a whole key generation
run can be replayed bit for bit in tests.
"""

from __future__ import annotations

import os

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms

SEED_SIZE = 32
_CHUNK = 1 << 16
_NONCE = bytes(16)


def seed_from_hex(text: str) -> bytes:
    """Parse a hex seed of up to 32 bytes, left-padding with zeros."""
    text = text.strip().lower()
    if text.startswith("0x"):
        text = text[2:]
    if not text or len(text) > 2 * SEED_SIZE:
        raise ValueError(f"seed must be 1..{2 * SEED_SIZE} hex digits")
    if len(text) % 2:
        text = "0" + text
    return bytes.fromhex(text).rjust(SEED_SIZE, b"\0")


class RandomSource:
    """ChaCha20-backed generator.

    Not thread safe; confine each instance to a single thread.
    """

    def __init__(self, seed: bytes | int | None = None):
        if seed is None:
            key = os.urandom(SEED_SIZE)
            self.seeded = False
        else:
            if isinstance(seed, int):
                if seed < 0 or seed.bit_length() > 8 * SEED_SIZE:
                    raise ValueError("integer seed out of range")
                seed = seed.to_bytes(SEED_SIZE, "big")
            if len(seed) != SEED_SIZE:
                raise ValueError(f"seed must be exactly {SEED_SIZE} bytes")
            key = bytes(seed)
            self.seeded = True
        self.seed = key if self.seeded else None
        self._stream = Cipher(algorithms.ChaCha20(key, _NONCE), mode=None).encryptor()
        self._buf = b""
        self._pos = 0

    def __repr__(self) -> str:
        kind = "seeded" if self.seeded else "os-entropy"
        return f"RandomSource({kind})"

    def bytes(self, n: int) -> bytes:
        if n < 0:
            raise ValueError("n must be non-negative")
        avail = len(self._buf) - self._pos
        if n <= avail:
            out = self._buf[self._pos:self._pos + n]
            self._pos += n
            return out
        head = self._buf[self._pos:]
        need = n - avail
        if need >= _CHUNK:
            self._buf, self._pos = b"", 0
            return head + self._stream.update(bytes(need))
        self._buf = self._stream.update(bytes(_CHUNK))
        self._pos = need
        return head + self._buf[:need]

    def spawn(self) -> RandomSource:
        """Independent child source keyed from this stream."""
        return RandomSource(self.bytes(SEED_SIZE))

    def _words(self, count: int) -> np.ndarray:
        return np.frombuffer(self.bytes(8 * count), dtype="<u8").astype(np.uint64)

    def randbelow(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` without modulo bias."""
        if n <= 0:
            raise ValueError("n must be positive")
        if n == 1:
            return 0
        nbytes = (n.bit_length() + 7) // 8 + 8
        limit = (1 << (8 * nbytes)) - ((1 << (8 * nbytes)) % n)
        while True:
            v = int.from_bytes(self.bytes(nbytes), "little")
            if v < limit:
                return v % n

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in the closed interval ``[lo, hi]``."""
        if hi < lo:
            raise ValueError("empty range")
        return lo + self.randbelow(hi - lo + 1)

    def below_many(self, bounds) -> np.ndarray:
        """Vector of independent uniform draws, ``out[i]`` in ``[0, bounds[i])``.

        Bounds must be positive and below 2**63.
        """
        bounds = np.asarray(bounds, dtype=np.uint64)
        if bounds.size and int(bounds.min()) == 0:
            raise ValueError("bounds must be positive")
        out = np.empty(bounds.shape, dtype=np.uint64)
        # reject words below (2**64 mod b) so that r % b is exactly uniform
        thresh = (np.uint64(0) - bounds) % bounds
        todo = np.arange(bounds.size)
        while todo.size:
            w = self._words(todo.size)
            ok = w >= thresh[todo]
            out[todo[ok]] = w[ok] % bounds[todo[ok]]
            todo = todo[~ok]
        return out

    def shuffle(self, seq: np.ndarray) -> np.ndarray:
        """Return a Fisher-Yates shuffled copy of a one-dimensional array."""
        items = np.asarray(seq)
        n = items.size
        if n < 2:
            return items.copy()
        # js[k] is the swap partner for position i = n - 1 - k
        js = self.below_many(np.arange(n, 1, -1, dtype=np.uint64)).tolist()
        work = items.tolist()
        i = n - 1
        for j in js:
            work[i], work[j] = work[j], work[i]
            i -= 1
        return np.array(work, dtype=items.dtype)

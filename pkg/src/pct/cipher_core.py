"""Block transformation: odd-bit flip, even-bit stride permutation, digest XOR.

Bits in a block are numbered from 1, most significant bit of the first
byte first.  Odd positions are therefore the bits under mask ``0xAA`` of
every byte and even positions the bits under ``0x55``.

The even bits form a vector ``v[0..E-1]`` with ``v[k]`` the bit at
position ``2(k+1)``.  One stride step sends ``v[k]`` to slot
``k * nbsk mod E``; since ``nbsk`` is odd and ``E`` a power of two this is
a bijection whose cycle length is the multiplicative order of ``nbsk``.
Decryption runs the same forward step ``d_iter`` more times so that the
total ``e_iter + d_iter`` completes a full cycle.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gcd

import numpy as np

from .errors import BadBlockLength, BadExponent
from .keygen import CAP

ODD_MASK = 0xAA
DIGEST_SIZE = 64


@dataclass(frozen=True)
class PermutationSpec:
    n: int
    bits: int
    even_slots: int
    nbsk: int
    max_iter: int
    e_iter: int
    d_iter: int

    @property
    def block_bytes(self) -> int:
        return 1 << (self.n - 1)


def multiplicative_order(a: int, m: int) -> int:
    """Smallest ``k >= 1`` with ``a**k == 1 (mod m)``."""
    if m < 1 or gcd(a, m) != 1:
        raise ValueError(f"{a} is not a unit modulo {m}")
    if m == 1:
        return 1
    a %= m
    if m & (m - 1) == 0:
        # unit group of Z/2^k has 2-power order, so square until we hit 1
        k, cur = 1, a
        while cur != 1:
            cur = cur * cur % m
            k *= 2
        return k
    k, cur = 1, a
    while cur != 1:
        cur = cur * a % m
        k += 1
    return k


def stride_for(n: int) -> int:
    return 2 * n + 3


@lru_cache(maxsize=None)
def _order_for(n: int) -> int:
    return multiplicative_order(stride_for(n), 1 << (n + 1))


def derive_spec(n: int, block_index: int) -> PermutationSpec:
    """Permutation constants for a block of exponent ``n`` at ordinal ``block_index`` (0-based)."""
    if not 1 <= n <= CAP:
        raise BadExponent(f"exponent {n} outside 1..{CAP}")
    max_iter = _order_for(n)
    if max_iter == 1:
        e_iter = d_iter = 0
    else:
        e_iter = 1 + (block_index + n) % (max_iter - 1)
        d_iter = max_iter - e_iter
    return PermutationSpec(n, 1 << (n + 2), 1 << (n + 1), stride_for(n),
                           max_iter, e_iter, d_iter)


def _as_array(block) -> np.ndarray:
    return np.frombuffer(bytes(block), dtype=np.uint8).copy()


def bit_at(block: bytes, position: int) -> int:
    """Bit at 1-based ``position``, MSB first within each byte."""
    byte, off = divmod(position - 1, 8)
    return (block[byte] >> (7 - off)) & 1


def flip_odd_bits(block: bytes) -> bytes:
    return (_as_array(block) ^ np.uint8(ODD_MASK)).tobytes()


def stride_permute(block: bytes, spec: PermutationSpec, iterations: int) -> bytes:
    """Apply the even-slot stride map ``iterations`` times."""
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    arr = _as_array(block)
    if arr.size == 0 or iterations == 0:
        return arr.tobytes()
    slots = arr.size * 4
    mult = pow(spec.nbsk, iterations, slots)
    bits = np.unpackbits(arr)
    v = bits[1::2]
    out = np.empty_like(v)
    out[(np.arange(slots, dtype=np.int64) * mult) % slots] = v
    bits[1::2] = out
    return np.packbits(bits).tobytes()


def xor_digest(block: bytes, digest: bytes) -> bytes:
    if len(digest) != DIGEST_SIZE:
        raise ValueError(f"digest must be {DIGEST_SIZE} bytes")
    arr = _as_array(block)
    pad = np.resize(np.frombuffer(digest, dtype=np.uint8), arr.size)
    return (arr ^ pad).tobytes()


def _check_len(block: bytes, spec: PermutationSpec) -> None:
    if len(block) != spec.block_bytes:
        raise BadBlockLength(
            f"block of {len(block)} bytes, exponent {spec.n} needs {spec.block_bytes}")


def encrypt_block(block: bytes, spec: PermutationSpec, digest: bytes) -> bytes:
    _check_len(block, spec)
    return xor_digest(stride_permute(flip_odd_bits(block), spec, spec.e_iter), digest)


def decrypt_block(block: bytes, spec: PermutationSpec, digest: bytes) -> bytes:
    _check_len(block, spec)
    return flip_odd_bits(stride_permute(xor_digest(block, digest), spec, spec.d_iter))


# Batched engine: same transform as encrypt_block/decrypt_block, applied to
# many consecutive blocks of one buffer with numpy.

@lru_cache(maxsize=None)
def _slot_range(slots: int) -> np.ndarray:
    return np.arange(slots, dtype=np.uint32)


def _iterations(n: int, block_idx: np.ndarray, decrypt: bool) -> np.ndarray:
    m = _order_for(n)
    e = 1 + (block_idx + n) % (m - 1)
    return m - e if decrypt else e


def _permute_group(buf: np.ndarray, starts: np.ndarray, n: int, iters: np.ndarray) -> None:
    size = 1 << (n - 1)
    slots = size * 4
    mask = np.uint32(slots - 1)
    # gather with the inverse multiplier: out[t] = v[t * m^-1 mod E]
    uniq, inv = np.unique(iters, return_inverse=True)
    nbsk = stride_for(n)
    inv_mult = np.array([pow(pow(nbsk, int(t), slots), -1, slots) for t in uniq],
                        dtype=np.uint32)[inv]
    pos = starts[:, None] + np.arange(size, dtype=np.int64)[None, :]
    bits = np.unpackbits(buf[pos], axis=1)
    v = bits[:, 1::2]
    src = (_slot_range(slots)[None, :] * inv_mult[:, None]) & mask
    bits[:, 1::2] = np.take_along_axis(v, src.astype(np.intp), axis=1)
    buf[pos] = np.packbits(bits, axis=1)


def transform_blocks(
    buf: np.ndarray,
    exponents: np.ndarray,
    first_index: int,
    digest: bytes,
    decrypt: bool = False,
) -> None:
    """Encrypt (or decrypt) consecutive blocks of ``buf`` in place.

    ``exponents`` covers ``buf`` exactly and ``first_index`` is the key
    ordinal of its first block.
    """
    exps = np.asarray(exponents, dtype=np.int64)
    sizes = np.left_shift(np.int64(1), exps - 1)
    starts = np.zeros(exps.size, dtype=np.int64)
    np.cumsum(sizes[:-1], out=starts[1:])
    if exps.size and int(starts[-1] + sizes[-1]) != buf.size:
        raise BadBlockLength(f"blocks cover {int(starts[-1] + sizes[-1])} bytes, buffer has {buf.size}")

    digest_arr = np.frombuffer(digest, dtype=np.uint8)
    if digest_arr.size != DIGEST_SIZE:
        raise ValueError(f"digest must be {DIGEST_SIZE} bytes")
    offsets = np.arange(buf.size, dtype=np.int64) - np.repeat(starts, sizes)
    pad = digest_arr[offsets & (DIGEST_SIZE - 1)]

    if decrypt:
        buf ^= pad
    else:
        buf ^= np.uint8(ODD_MASK)

    for n in np.unique(exps).tolist():
        if _order_for(n) == 1:
            continue
        sel = np.flatnonzero(exps == n)
        iters = _iterations(n, sel + first_index, decrypt)
        _permute_group(buf, starts[sel], n, iters)

    if decrypt:
        buf ^= np.uint8(ODD_MASK)
    else:
        buf ^= pad

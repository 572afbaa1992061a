"""Cipher adapters consumed by the metrics harness.

An adapter bundles key generation with encrypt/decrypt over whole
messages.  ``session_keys`` tells the harness whether the cipher is meant to
be used with a fresh key for every encryption; PCT is.
"""

from __future__ import annotations

import hashlib
from typing import Any, Callable

import numpy as np

from .keygen import SessionKey, generate_session_key
from .rng import RandomSource
from .stream_codec import decrypt_bytes, decrypt_payload, encrypt_bytes, encrypt_payload


class CipherAdapter:
    name = "abstract"
    session_keys = False

    def keygen(self, length: int, rng: RandomSource) -> Any:
        raise NotImplementedError

    def encrypt(self, plaintext: bytes, key: Any) -> bytes:
        raise NotImplementedError

    def decrypt(self, ciphertext: bytes, key: Any) -> bytes:
        raise NotImplementedError

    # Timed by the benchmark; adapters with an on-disk format override these.
    def encrypt_file(self, plaintext: bytes, key: Any) -> bytes:
        return self.encrypt(plaintext, key)

    def decrypt_file(self, ciphertext: bytes, key: Any) -> bytes:
        return self.decrypt(ciphertext, key)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name!r}>"


class PCTAdapter(CipherAdapter):
    name = "pct"
    session_keys = True

    def keygen(self, length: int, rng: RandomSource) -> SessionKey:
        return generate_session_key(length, rng)

    def encrypt(self, plaintext: bytes, key: SessionKey) -> bytes:
        return encrypt_payload(plaintext, key)

    def decrypt(self, ciphertext: bytes, key: SessionKey) -> bytes:
        return decrypt_payload(ciphertext, key)

    def encrypt_file(self, plaintext: bytes, key: SessionKey) -> bytes:
        return encrypt_bytes(plaintext, key)

    def decrypt_file(self, ciphertext: bytes, key: SessionKey) -> bytes:
        return decrypt_bytes(ciphertext, key)


def _xor(a: bytes, b: bytes) -> bytes:
    return (np.frombuffer(a, dtype=np.uint8) ^ np.frombuffer(b, dtype=np.uint8)).tobytes()


class IdealAdapter(CipherAdapter):
    """Random-oracle stand-in: a 4-round Feistel network keyed through SHAKE-256.

    Any change to the input re-randomises every output bit, which is what an
    ideal cipher scores against the avalanche estimators.
    """

    name = "ideal"
    rounds = 4

    def keygen(self, length: int, rng: RandomSource) -> bytes:
        return rng.bytes(32)

    def _f(self, key: bytes, rnd: int, half: bytes, size: int) -> bytes:
        return hashlib.shake_256(key + bytes([rnd]) + half).digest(size)

    def encrypt(self, plaintext: bytes, key: bytes) -> bytes:
        cut = len(plaintext) // 2
        left, right = plaintext[:cut], plaintext[cut:]
        for r in range(self.rounds):
            if r % 2 == 0:
                right = _xor(right, self._f(key, r, left, len(right)))
            else:
                left = _xor(left, self._f(key, r, right, len(left)))
        return left + right

    def decrypt(self, ciphertext: bytes, key: bytes) -> bytes:
        cut = len(ciphertext) // 2
        left, right = ciphertext[:cut], ciphertext[cut:]
        for r in reversed(range(self.rounds)):
            if r % 2 == 0:
                right = _xor(right, self._f(key, r, left, len(right)))
            else:
                left = _xor(left, self._f(key, r, right, len(left)))
        return left + right


class IdentityAdapter(CipherAdapter):
    name = "identity"

    def keygen(self, length, rng):
        return None

    def encrypt(self, plaintext, key):
        return bytes(plaintext)

    decrypt = encrypt


class ConstantAdapter(CipherAdapter):
    """Output never depends on the input."""

    name = "constant"

    def keygen(self, length, rng):
        return None

    def encrypt(self, plaintext, key):
        return bytes(len(plaintext))

    def decrypt(self, ciphertext, key):
        raise NotImplementedError("constant stub is not invertible")


class CorrelatedAdapter(CipherAdapter):
    """Every output bit equals the input bit parity, so all of them flip together."""

    name = "correlated"

    def keygen(self, length, rng):
        return None

    def encrypt(self, plaintext, key):
        ones = int(np.unpackbits(np.frombuffer(plaintext, dtype=np.uint8)).sum())
        return (b"\xff" if ones & 1 else b"\x00") * len(plaintext)

    def decrypt(self, ciphertext, key):
        raise NotImplementedError("correlated stub is not invertible")


class _BlockModeAdapter(CipherAdapter):
    """CBC with PKCS7 padding over a platform block cipher.

    The key handle is a (key, iv) pair.  CBC expects a fresh IV per message,
    so the harness treats it like a session-keyed cipher.
    """

    session_keys = True
    key_size = 16
    block_size = 16

    def _algorithm(self, key: bytes):
        raise NotImplementedError

    def keygen(self, length, rng):
        return rng.bytes(self.key_size), rng.bytes(self.block_size)

    def _cipher(self, key):
        from cryptography.hazmat.primitives.ciphers import Cipher, modes
        k, iv = key
        return Cipher(self._algorithm(k), modes.CBC(iv))

    def encrypt(self, plaintext, key):
        from cryptography.hazmat.primitives import padding
        padder = padding.PKCS7(8 * self.block_size).padder()
        data = padder.update(plaintext) + padder.finalize()
        enc = self._cipher(key).encryptor()
        return enc.update(data) + enc.finalize()

    def decrypt(self, ciphertext, key):
        from cryptography.hazmat.primitives import padding
        dec = self._cipher(key).decryptor()
        data = dec.update(ciphertext) + dec.finalize()
        unpadder = padding.PKCS7(8 * self.block_size).unpadder()
        return unpadder.update(data) + unpadder.finalize()


class AESAdapter(_BlockModeAdapter):
    name = "aes"

    def _algorithm(self, key):
        from cryptography.hazmat.primitives.ciphers import algorithms
        return algorithms.AES(key)


class TDESAdapter(_BlockModeAdapter):
    name = "tdes"
    key_size = 24
    block_size = 8

    def _algorithm(self, key):
        return _tdes_algorithm()(key)


def _tdes_algorithm():
    try:
        from cryptography.hazmat.decrepit.ciphers.algorithms import TripleDES
    except ImportError:
        from cryptography.hazmat.primitives.ciphers.algorithms import TripleDES
    return TripleDES


def _available(factory: Callable[[], CipherAdapter]) -> bool:
    try:
        adapter = factory()
        key = adapter.keygen(16, RandomSource(0))
        adapter.encrypt(bytes(16), key)
    except Exception:
        return False
    return True


ADAPTERS: dict[str, Callable[[], CipherAdapter]] = {
    "pct": PCTAdapter,
    "ideal": IdealAdapter,
    "identity": IdentityAdapter,
    "constant": ConstantAdapter,
    "correlated": CorrelatedAdapter,
}
for _factory in (AESAdapter, TDESAdapter):
    if _available(_factory):
        ADAPTERS[_factory.name] = _factory


def get_adapter(name: str) -> CipherAdapter:
    try:
        return ADAPTERS[name]()
    except KeyError:
        raise KeyError(f"unknown adapter {name!r}; registered: {', '.join(sorted(ADAPTERS))}") from None

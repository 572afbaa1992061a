"""Permutated Cipher Technique: session-keyed bit-level block cipher and analysis harness."""

__version__ = "0.1.0"

from .cipher_core import (PermutationSpec, decrypt_block, derive_spec, encrypt_block,
                          flip_odd_bits, stride_permute, xor_digest)
from .errors import (BadBlockLength, BadExponent, BadIndices, CorruptContainer, CorruptKey,
                     EmptyInput, InsufficientMass, KeyFileMismatch, PCTError, UnknownFormat)
from .keygen import CAP, LengthArray, SessionKey, generate_session_key
from .rng import RandomSource
from .stream_codec import (CipherContainer, decrypt_bytes, decrypt_stream, encrypt_bytes,
                           encrypt_stream)

__all__ = [
    "CAP", "BadBlockLength", "BadExponent", "BadIndices", "CipherContainer", "CorruptContainer",
    "CorruptKey", "EmptyInput", "InsufficientMass", "KeyFileMismatch", "LengthArray", "PCTError",
    "PermutationSpec", "RandomSource", "SessionKey", "UnknownFormat", "decrypt_block",
    "decrypt_bytes", "decrypt_stream", "derive_spec", "encrypt_block", "encrypt_bytes",
    "encrypt_stream", "flip_odd_bits", "generate_session_key", "stride_permute", "xor_digest",
]

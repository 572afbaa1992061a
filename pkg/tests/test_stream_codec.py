import io

import pytest

from pct.cipher_core import derive_spec, encrypt_block
from pct.errors import CorruptContainer, KeyFileMismatch, UnknownFormat
from pct.keygen import SessionKey, generate_session_key
from pct.rng import RandomSource
from pct.stream_codec import (BATCH_BYTES, HEADER_SIZE, CipherContainer, decrypt_bytes,
                              decrypt_payload, decrypt_stream, encrypt_bytes, encrypt_payload,
                              encrypt_stream, iter_batches, pack_header, parse_header)


class CountingReader(io.BytesIO):
    def __init__(self, data):
        super().__init__(data)
        self.largest = 0

    def read(self, n=-1):
        out = super().read(n)
        self.largest = max(self.largest, len(out))
        return out


def reference_payload(plain: bytes, key: SessionKey) -> bytes:
    out, off = b"", 0
    for k, e in enumerate(key.exponents):
        size = 1 << (e - 1)
        block = plain[off:off + size].ljust(size, b"\0")
        out += encrypt_block(block, derive_spec(e, k), key.digest)
        off += size
    return out


@pytest.mark.parametrize("size", [1, 7, 330, 4096, (1 << 20) + 17, 4 << 20])
def test_round_trip_sizes(size):
    r = RandomSource(size)
    plain = r.bytes(size)
    key = generate_session_key(size, r)
    ct = encrypt_bytes(plain, key)
    assert len(ct) == HEADER_SIZE + size
    assert parse_header(ct[:HEADER_SIZE]) == size
    assert decrypt_bytes(ct, key) == plain


def test_table_row_payload_exact():
    r = RandomSource(330)
    key = generate_session_key(330, r)
    plain = r.bytes(330)
    c = CipherContainer.from_bytes(encrypt_bytes(plain, key))
    assert len(c.payload) == 330 and c.original_len == 330


@pytest.mark.parametrize("size", [1, 100, 5000])
def test_stream_matches_per_block_reference(size):
    r = RandomSource(7 + size)
    plain = r.bytes(size)
    key = generate_session_key(size, r)
    assert encrypt_bytes(plain, key)[HEADER_SIZE:] == reference_payload(plain, key)


def test_pad_fills_final_block_with_zero():
    key = SessionKey(b"\x02", 2)
    ct = encrypt_bytes(b"A", key, pad=True)
    assert parse_header(ct[:HEADER_SIZE]) == 1
    assert ct[HEADER_SIZE:] == encrypt_block(b"A\x00", derive_spec(2, 0), key.digest)
    assert decrypt_bytes(ct, key) == b"A"


def test_pad_reuses_key_for_shorter_file():
    r = RandomSource(5)
    key = generate_session_key(10000, r)
    plain = r.bytes(6543)
    ct = encrypt_bytes(plain, key, pad=True)
    assert len(ct) == HEADER_SIZE + 10000
    assert decrypt_bytes(ct, key) == plain


def test_length_mismatch_without_pad():
    key = generate_session_key(100, RandomSource(0))
    with pytest.raises(KeyFileMismatch):
        encrypt_bytes(bytes(99), key)
    with pytest.raises(KeyFileMismatch):
        encrypt_bytes(bytes(101), key, pad=True)


def test_stream_source_shorter_than_declared():
    key = generate_session_key(100, RandomSource(0))
    with pytest.raises(KeyFileMismatch):
        encrypt_stream(io.BytesIO(bytes(50)), io.BytesIO(), key, length=100)


def test_wrong_key_same_length():
    r = RandomSource(9)
    plain = r.bytes(4096)
    k1 = generate_session_key(4096, RandomSource(1))
    k2 = generate_session_key(4096, RandomSource(2))
    ct = encrypt_bytes(plain, k1)
    assert encrypt_bytes(plain, k2) != ct
    assert decrypt_bytes(ct, k2) != plain


def test_encrypt_deterministic():
    key = generate_session_key(777, RandomSource(3))
    plain = bytes(range(256)) * 3 + bytes(9)
    assert encrypt_bytes(plain, key) == encrypt_bytes(plain, key)


def test_decrypt_rejects_short_and_long_payload():
    r = RandomSource(4)
    key = generate_session_key(300, r)
    ct = encrypt_bytes(r.bytes(300), key)
    with pytest.raises(CorruptContainer) as exc:
        decrypt_bytes(ct[:-1], key)
    assert exc.value.offset is not None
    with pytest.raises(CorruptContainer):
        decrypt_bytes(ct + b"\0", key)


def test_decrypt_rejects_length_beyond_key():
    key = generate_session_key(10, RandomSource(0))
    bad = pack_header(11) + bytes(10)
    with pytest.raises(CorruptContainer):
        decrypt_bytes(bad, key)


def test_header_errors():
    with pytest.raises(UnknownFormat) as exc:
        parse_header(b"PCTK\x01" + bytes(8))
    assert exc.value.offset == 0
    with pytest.raises(UnknownFormat) as exc:
        parse_header(b"PCTC\x02" + bytes(8))
    assert exc.value.offset == 4
    with pytest.raises(CorruptContainer) as exc:
        parse_header(b"PCTC\x01\x00")
    assert exc.value.offset == 6


def test_container_serialize_identity():
    r = RandomSource(12)
    key = generate_session_key(5000, r)
    blob = encrypt_bytes(r.bytes(4000), key, pad=True)
    c = CipherContainer.from_bytes(blob)
    assert c.to_bytes() == blob
    assert CipherContainer.from_bytes(c.to_bytes()) == c


def test_container_invariant():
    with pytest.raises(CorruptContainer):
        CipherContainer(5, b"abc")


def test_header_layout():
    assert pack_header(0x0102) == b"PCTC\x01\x02\x01" + bytes(6)


def test_batches_cover_key_in_order():
    key = generate_session_key(3 * BATCH_BYTES + 1234, RandomSource(8))
    spans = list(iter_batches(key))
    assert spans[0][0] == 0 and spans[-1][1] == len(key)
    assert all(a[1] == b[0] for a, b in zip(spans, spans[1:]))
    assert sum(n for _, _, n in spans) == key.original_len
    assert all(n <= BATCH_BYTES for _, _, n in spans)


def test_streaming_reads_are_bounded():
    size = 5 * BATCH_BYTES + 99
    r = RandomSource(21)
    plain = r.bytes(size)
    key = generate_session_key(size, r)
    src = CountingReader(plain)
    out = io.BytesIO()
    encrypt_stream(src, out, key)
    assert 0 < src.largest <= BATCH_BYTES
    back_src = CountingReader(out.getvalue())
    back = io.BytesIO()
    decrypt_stream(back_src, back, key)
    assert back_src.largest <= BATCH_BYTES
    assert back.getvalue() == plain


def test_payload_helpers_round_trip():
    r = RandomSource(13)
    key = generate_session_key(2000, r)
    plain = r.bytes(1500)
    payload = encrypt_payload(plain, key, pad=True)
    assert len(payload) == 2000
    assert decrypt_payload(payload, key, 1500) == plain
    with pytest.raises(CorruptContainer):
        decrypt_payload(payload[:-1], key)

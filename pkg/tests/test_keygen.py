import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pct.errors import BadIndices, CorruptKey, EmptyInput, InsufficientMass, UnknownFormat
from pct.keygen import (CAP, LengthArray, SessionKey, block_budget, decompose_length,
                        expand_to_sequence, generate_session_key, normalize_cap,
                        randomize_partition, redistribute, sequence_mass, shuffle)
from pct.rng import RandomSource


def brute_mass(arr: LengthArray) -> int:
    return sum(arr[i] * 2 ** (i - 1) for i in range(1, len(arr.counts) + 1))


def brute_mass_seq(seq) -> int:
    return sum(2 ** (int(e) - 1) for e in seq)


# decompose_length

def test_decompose_worked_example():
    arr = decompose_length(221)
    assert [arr[i] for i in range(1, 9)] == [1, 0, 1, 1, 1, 0, 1, 1]
    assert arr.top == 8


def test_decompose_one():
    arr = decompose_length(1)
    assert arr.counts == (1,)


def test_decompose_power_of_two():
    arr = decompose_length(2 ** 20)
    assert arr[21] == 1
    assert sum(arr.counts) == 1
    assert brute_mass(arr) == 2 ** 20


def test_decompose_empty():
    with pytest.raises(EmptyInput):
        decompose_length(0)


# redistribute

def test_redistribute_worked_example():
    arr = redistribute(decompose_length(221), 5, 1, 1)
    assert arr[5] == 0
    assert arr[1] == 17
    assert [arr[i] for i in (2, 3, 4, 6, 7, 8)] == [0, 1, 1, 0, 1, 1]
    assert arr.mass == 221


def test_redistribute_full_drain():
    arr = LengthArray((0, 0, 3), 12)
    out = redistribute(arr, 3, 2, 3)
    assert out[3] == 0 and out[2] == 6


def test_redistribute_errors():
    arr = decompose_length(221)
    with pytest.raises(InsufficientMass):
        redistribute(arr, 5, 1, 2)
    with pytest.raises(BadIndices):
        redistribute(arr, 1, 5, 1)
    with pytest.raises(BadIndices):
        redistribute(arr, 3, 3, 1)


@given(length=st.integers(1, 2 ** 40), data=st.data())
def test_redistribute_conserves_mass(length, data):
    arr = decompose_length(length)
    occupied = [i for i in range(2, len(arr.counts) + 1) if arr[i]]
    if not occupied:
        return
    m_high = data.draw(st.sampled_from(occupied))
    m_low = data.draw(st.integers(1, m_high - 1))
    x = data.draw(st.integers(1, arr[m_high]))
    out = redistribute(arr, m_high, m_low, x)
    assert brute_mass(out) == length == out.mass


# normalize_cap

def test_normalize_cap_single_high_cell():
    arr = LengthArray((0,) * 24 + (1,), 2 ** 24)
    out = normalize_cap(arr, 21)
    assert out[25] == 0
    assert out[21] == 16
    assert brute_mass(out) == brute_mass(arr)


def test_normalize_cap_noop():
    arr = decompose_length(221)
    assert normalize_cap(arr, 21) == arr


def test_normalize_cap_gigabyte():
    out = normalize_cap(decompose_length(2 ** 30), 21)
    assert out.as_dict() == {21: 1024}


@given(st.integers(1, 2 ** 60))
def test_normalize_cap_conserves_mass(length):
    out = normalize_cap(decompose_length(length), CAP)
    assert out.top <= CAP
    assert out.mass == length


# randomize_partition

def test_randomize_reproducible():
    arr = decompose_length(221)
    a = randomize_partition(arr, RandomSource(9))
    b = randomize_partition(arr, RandomSource(9))
    assert a == b
    assert a.mass == 221


def test_randomize_length_one_unchanged():
    arr = decompose_length(1)
    assert randomize_partition(arr, RandomSource(0)) == arr


@settings(max_examples=200)
@given(length=st.integers(1, 2 ** 34), seed=st.integers(0, 2 ** 32))
def test_randomize_conserves_mass_and_cap(length, seed):
    arr = normalize_cap(decompose_length(length))
    out = randomize_partition(arr, RandomSource(seed))
    assert out.mass == length
    assert out.top <= CAP
    assert out.block_count <= max(arr.block_count, block_budget(length))


def test_randomize_actually_moves_mass():
    arr = normalize_cap(decompose_length(2 ** 16))
    outs = {randomize_partition(arr, RandomSource(s)) for s in range(20)}
    assert len(outs) > 10
    assert arr not in outs


# expand_to_sequence

def test_expand_simple():
    arr = LengthArray((2, 0, 1), 6)
    assert expand_to_sequence(arr).tolist() == [1, 1, 3]


def test_expand_worked_example_row():
    # cells 8..1 read "3 5 4 17 8 9 11 12" in the worked example
    counts = (12, 11, 9, 8, 17, 4, 5, 3)
    arr = LengthArray(counts, sum(c << i for i, c in enumerate(counts)))
    seq = expand_to_sequence(arr)
    got = np.bincount(seq, minlength=9)
    assert got[8] == 3 and got[7] == 5 and got[6] == 4 and got[5] == 17
    assert got[4] == 8 and got[3] == 9 and got[2] == 11 and got[1] == 12
    assert seq.tolist() == sorted(seq.tolist())
    assert brute_mass_seq(seq) == arr.total_len


# shuffle

def test_shuffle_reproducible_and_multiset():
    seq = expand_to_sequence(LengthArray((5, 4, 3, 2), 5 + 8 + 12 + 16))
    a = shuffle(seq, RandomSource(1))
    b = shuffle(seq, RandomSource(1))
    assert a.tolist() == b.tolist()
    assert sorted(a.tolist()) == sorted(seq.tolist())


def test_shuffle_single():
    assert shuffle(np.array([4], dtype=np.uint8), RandomSource(0)).tolist() == [4]


@given(st.lists(st.integers(1, CAP), min_size=1, max_size=300), st.integers(0, 1000))
def test_shuffle_preserves_multiset(values, seed):
    out = shuffle(np.array(values, dtype=np.uint8), RandomSource(seed))
    assert sorted(out.tolist()) == sorted(values)


# generate_session_key

def test_generate_table_row_length():
    key = generate_session_key(330, RandomSource(0))
    assert brute_mass_seq(key.exponents) == 330
    assert key.original_len == 330


def test_generate_length_one():
    key = generate_session_key(1, RandomSource(0))
    assert key.exponents == b"\x01"


def test_generate_empty():
    with pytest.raises(EmptyInput):
        generate_session_key(0, RandomSource(0))


def test_generate_reproducible():
    a = generate_session_key(123457, RandomSource(77))
    b = generate_session_key(123457, RandomSource(77))
    assert a.to_bytes() == b.to_bytes()
    assert a.digest == b.digest


def test_generate_many_lengths(rng):
    for _ in range(1000):
        length = rng.randint(1, 1 << rng.randint(1, 30))
        key = generate_session_key(length, rng)
        assert sequence_mass(key.exponents) == length
        assert max(key.exponents) <= CAP


@pytest.mark.parametrize("length", [2 ** 36, 2 ** 40 - 1, 2 ** 40])
def test_cap_holds_for_huge_lengths(length):
    key = generate_session_key(length, RandomSource(length))
    assert max(key.exponents) <= CAP
    assert sequence_mass(key.exponents) == length


@pytest.mark.parametrize("length", [2 ** 8, 2 ** 16])
def test_key_space_witness(length):
    keys = {generate_session_key(length, RandomSource(s)).exponents for s in range(128)}
    assert len(keys) >= 100


def test_sequence_mass_matches_brute_force(rng):
    for _ in range(50):
        seq = rng.below_many(np.full(rng.randint(1, 500), CAP, dtype=np.uint64)) + 1
        assert sequence_mass(seq) == brute_mass_seq(seq)


# SessionKey

def test_digest_is_sha512_of_serialized_key():
    import hashlib
    key = generate_session_key(1000, RandomSource(3))
    assert key.digest == hashlib.sha512(key.to_bytes()).digest()
    assert len(key.digest) == 64


def test_key_rejects_bad_mass():
    with pytest.raises(CorruptKey):
        SessionKey(b"\x01\x02", 4)


def test_key_rejects_bad_exponent():
    with pytest.raises(CorruptKey) as exc:
        SessionKey(b"\x01\x16", 1 + 2 ** 21)
    assert exc.value.offset == 18


def test_key_roundtrip_bytes():
    key = generate_session_key(96317, RandomSource(1))
    assert SessionKey.from_bytes(key.to_bytes()) == key


def test_key_parse_errors():
    key = SessionKey(b"\x01\x02", 3).to_bytes()
    with pytest.raises(UnknownFormat):
        SessionKey.from_bytes(b"XXXX" + key[4:])
    with pytest.raises(UnknownFormat):
        SessionKey.from_bytes(key[:4] + b"\x02" + key[5:])
    with pytest.raises(CorruptKey) as exc:
        SessionKey.from_bytes(key[:-1])
    assert exc.value.offset == len(key) - 1
    with pytest.raises(CorruptKey) as exc:
        SessionKey.from_bytes(key[:10])
    assert exc.value.offset == 10
    with pytest.raises(CorruptKey):
        SessionKey.from_bytes(key + b"\x00")

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpquant.bitcodec import (
    BitMessage,
    MultisetType,
    binomial,
    bits_for_count,
    multiset_rank,
    multiset_unrank,
    pack_uints,
    read_field,
    unpack_uints,
    write_field,
)
from lpquant.exceptions import ContractError


def pascal(n_max):
    rows = [[1]]
    for n in range(1, n_max + 1):
        prev = rows[-1]
        rows.append([1] + [prev[i - 1] + prev[i] for i in range(1, n)] + [1])
    return rows


def test_binomial_matches_pascal_triangle():
    rows = pascal(40)
    for n, row in enumerate(rows):
        for r, value in enumerate(row):
            assert binomial(n, r) == value
        assert binomial(n, n + 1) == 0


def test_bits_for_count_is_smallest_sufficient_width():
    for n in range(1, 5000):
        w = bits_for_count(n)
        assert 2**w >= n
        assert w == 0 or 2 ** (w - 1) < n


def test_fields_are_big_endian():
    msg = write_field(BitMessage.zeros(8), 2, 4, 5)
    assert str(msg) == "00010100"
    assert read_field(msg, 2, 4) == 5


def test_field_overflow_and_range_errors():
    with pytest.raises(ContractError):
        write_field(BitMessage.zeros(4), 0, 3, 8)
    with pytest.raises(ContractError):
        read_field(BitMessage.zeros(4), 2, 3)
    with pytest.raises(ContractError):
        BitMessage(np.array([0, 2]))


def test_messages_are_immutable():
    msg = BitMessage.zeros(5)
    with pytest.raises(ValueError):
        msg.bits[0] = 1


def test_wide_field_roundtrip():
    value = 3**100
    width = value.bit_length() + 3
    msg = write_field(BitMessage.zeros(width + 7), 7, width, value)
    assert read_field(msg, 7, width) == value


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 1), max_size=70))
def test_bytes_roundtrip(bits):
    msg = BitMessage(np.array(bits, dtype=np.uint8))
    data = msg.to_bytes()
    assert len(data) == math.ceil(len(bits) / 8)
    assert BitMessage.from_bytes(data, len(bits)) == msg


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 20), st.data())
def test_pack_unpack_uints(width, data):
    values = data.draw(st.lists(st.integers(0, 2**width - 1), max_size=30))
    msg = pack_uints(values, width)
    assert msg.width == width * len(values)
    assert unpack_uints(msg, 0, width, len(values)).tolist() == values


def test_concat_and_slice():
    a = write_field(BitMessage.zeros(3), 0, 3, 6)
    b = write_field(BitMessage.zeros(5), 0, 5, 9)
    ab = BitMessage.concat(a, b)
    assert ab.slice(0, 3) == a and ab.slice(3, 5) == b


def test_rank_is_bijection_small():
    for d in range(0, 6):
        for k in range(0, 6):
            total = binomial(d + k, k)
            seen = set()
            for seq in itertools.combinations_with_replacement(range(d + 1), k):
                t = MultisetType.from_symbols(seq, d)
                r = multiset_rank(t)
                assert 0 <= r < total
                assert multiset_unrank(r, d, k) == t
                seen.add(r)
            assert len(seen) == total


def test_rank_is_colex():
    # increasing rank orders the sorted symbol sequences colexicographically
    d, k = 4, 3
    seqs = [tuple(multiset_unrank(r, d, k).symbols()) for r in range(binomial(d + k, k))]
    assert seqs == sorted(seqs, key=lambda s: s[::-1])
    assert multiset_rank(MultisetType((k,) + (0,) * d)) == 0


def test_rank_large_uses_exact_arithmetic(rng):
    d, k = 2000, 500
    counts = rng.multinomial(k, np.full(d + 1, 1 / (d + 1)))
    t = MultisetType(tuple(counts))
    r = multiset_rank(t)
    assert r < binomial(d + k, k)
    assert multiset_unrank(r, d, k) == t


def test_unrank_rejects_out_of_range():
    with pytest.raises(ContractError):
        multiset_unrank(binomial(7, 3), 4, 3)

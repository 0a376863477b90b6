"""Fixed-width bit strings and enumerative coding of multiset types.

Bits are packed big-endian: bit 0 of a message is the most significant
bit of its first field. A :class:`BitMessage` never changes width after
construction; writes return a new message.

Multiset types (count vectors over the alphabet ``0..d`` summing to
``k``) are ranked in colexicographic order of their stars-and-bars
subset: with the drawn indices sorted as ``a_0 <= ... <= a_{k-1}``, the
subset is ``b_j = a_j + j`` and the rank is ``sum_j C(b_j, j + 1)``.
The all-zero-index type has rank 0.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .exceptions import ContractError, CorruptMessageError

__all__ = [
    "BitMessage",
    "MultisetType",
    "write_field",
    "read_field",
    "pack_uints",
    "unpack_uints",
    "binomial",
    "bits_for_count",
    "multiset_rank",
    "multiset_unrank",
]


def _readonly(bits: np.ndarray) -> np.ndarray:
    bits.setflags(write=False)
    return bits


@dataclass(frozen=True, eq=False)
class BitMessage:
    """An immutable string of ``width`` bits stored one bit per byte."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1:
            raise ContractError("bits must be one-dimensional")
        if bits.size and bits.max() > 1:
            raise ContractError("bits must be 0 or 1")
        object.__setattr__(self, "bits", _readonly(bits))

    @classmethod
    def zeros(cls, width: int) -> "BitMessage":
        if width < 0:
            raise ContractError("width must be nonnegative")
        return cls(np.zeros(width, dtype=np.uint8))

    @classmethod
    def concat(cls, *parts: "BitMessage") -> "BitMessage":
        if not parts:
            return cls.zeros(0)
        return cls(np.concatenate([p.bits for p in parts]))

    @classmethod
    def from_bytes(cls, data: bytes, width: int) -> "BitMessage":
        """Inverse of :meth:`to_bytes`; ``width`` travels out of band."""
        if len(data) * 8 < width:
            raise CorruptMessageError(f"{len(data)} bytes cannot hold {width} bits")
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:width]
        return cls(bits.copy())

    @property
    def width(self) -> int:
        return int(self.bits.size)

    def to_bytes(self) -> bytes:
        """Pack into bytes, padding the tail with zero bits."""
        return np.packbits(self.bits).tobytes()

    def slice(self, offset: int, width: int) -> "BitMessage":
        _check_range(self, offset, width)
        return BitMessage(self.bits[offset:offset + width].copy())

    def __eq__(self, other):
        if not isinstance(other, BitMessage):
            return NotImplemented
        return self.width == other.width and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash((self.width, self.to_bytes()))

    def __len__(self):
        return self.width

    def __str__(self):
        return "".join("1" if b else "0" for b in self.bits)

    def __repr__(self):
        return f"BitMessage('{self}')"


def _check_range(msg: BitMessage, offset: int, width: int) -> None:
    if offset < 0 or width < 0 or offset + width > msg.width:
        raise ContractError(
            f"field [{offset}, {offset + width}) outside message of width {msg.width}"
        )


def _int_to_bits(value: int, width: int) -> np.ndarray:
    value = int(value)
    if value < 0:
        raise ContractError("field values must be nonnegative")
    if value.bit_length() > width:
        raise ContractError(f"value {value} does not fit in {width} bits")
    if width == 0:
        return np.zeros(0, dtype=np.uint8)
    nbytes = (width + 7) // 8
    raw = np.frombuffer(value.to_bytes(nbytes, "big"), dtype=np.uint8)
    return np.unpackbits(raw)[nbytes * 8 - width:]


def _bits_to_int(bits: np.ndarray) -> int:
    if bits.size == 0:
        return 0
    pad = (-bits.size) % 8
    if pad:
        bits = np.concatenate([np.zeros(pad, dtype=np.uint8), bits])
    return int.from_bytes(np.packbits(bits).tobytes(), "big")


def write_field(msg: BitMessage, offset: int, width: int, value: int) -> BitMessage:
    """Return a copy of ``msg`` whose bits ``[offset, offset+width)`` hold ``value``."""
    _check_range(msg, offset, width)
    field = _int_to_bits(value, width)
    if width == 0:
        return msg
    bits = msg.bits.copy()
    bits[offset:offset + width] = field
    return BitMessage(bits)


def read_field(msg: BitMessage, offset: int, width: int) -> int:
    """Big-endian integer stored in bits ``[offset, offset+width)``."""
    _check_range(msg, offset, width)
    return _bits_to_int(msg.bits[offset:offset + width])


def pack_uints(values, width: int) -> BitMessage:
    """Pack an array of small nonnegative integers into equal-width fields."""
    values = np.asarray(values, dtype=np.int64).ravel()
    if width > 62:
        raise ContractError("pack_uints handles fields of at most 62 bits")
    if values.size and (values.min() < 0 or values.max() >= (1 << width)):
        raise ContractError(f"values do not fit in {width}-bit fields")
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    bits = ((values[:, None] >> shifts) & 1).astype(np.uint8)
    return BitMessage(bits.ravel())


def unpack_uints(msg: BitMessage, offset: int, width: int, count: int) -> np.ndarray:
    """Read ``count`` consecutive ``width``-bit fields starting at ``offset``."""
    _check_range(msg, offset, width * count)
    if width == 0:
        return np.zeros(count, dtype=np.int64)
    block = msg.bits[offset:offset + width * count].reshape(count, width)
    weights = np.int64(1) << np.arange(width - 1, -1, -1, dtype=np.int64)
    return block.astype(np.int64) @ weights


def binomial(n: int, r: int) -> int:
    """Exact binomial coefficient, 0 when ``r > n``."""
    if n < 0 or r < 0:
        raise ContractError("binomial arguments must be nonnegative")
    return math.comb(n, r)


def bits_for_count(count: int) -> int:
    """Smallest width able to index ``count`` distinct values (ceil log2)."""
    if count < 1:
        raise ContractError("count must be positive")
    return (count - 1).bit_length()


@dataclass(frozen=True)
class MultisetType:
    """Frequency of each symbol ``0..d`` in a sequence of length ``k``."""

    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if not counts:
            raise ContractError("a type needs at least one symbol")
        if min(counts) < 0:
            raise ContractError("type counts must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_symbols(cls, symbols: Sequence[int], d: int) -> "MultisetType":
        symbols = np.asarray(symbols, dtype=np.int64)
        if symbols.size and (symbols.min() < 0 or symbols.max() > d):
            raise ContractError(f"symbols must lie in 0..{d}")
        return cls(tuple(np.bincount(symbols, minlength=d + 1)))

    @property
    def d(self) -> int:
        return len(self.counts) - 1

    @property
    def k(self) -> int:
        return sum(self.counts)

    def symbols(self) -> np.ndarray:
        """Sorted sequence of symbols with this type."""
        return np.repeat(np.arange(self.d + 1), self.counts)


# Binomial tables speed up ranking inside optimization loops. Above this
# many entries we fall back to math.comb per lookup.
_TABLE_LIMIT = 400_000


@lru_cache(maxsize=16)
def _binomial_table(n_max: int, k: int):
    """``table[j][n] == C(n, j)`` for ``0 <= j <= k``, ``0 <= n <= n_max``."""
    if (k + 1) * (n_max + 1) > _TABLE_LIMIT:
        return None
    table = []
    for j in range(k + 1):
        row = [0] * (n_max + 1)
        if j == 0:
            row = [1] * (n_max + 1)
        else:
            prev = table[j - 1]
            # C(n, j) = C(n-1, j) + C(n-1, j-1)
            for n in range(j, n_max + 1):
                row[n] = row[n - 1] + prev[n - 1]
        table.append(row)
    return table


def multiset_rank(t: MultisetType) -> int:
    """Colex rank of ``t`` among all types with the same ``(d, k)``."""
    d, k = t.d, t.k
    if k == 0:
        return 0
    subset = t.symbols() + np.arange(k)
    table = _binomial_table(d + k - 1, k)
    if table is None:
        return sum(math.comb(int(b), j + 1) for j, b in enumerate(subset))
    return sum(table[j + 1][b] for j, b in enumerate(subset.tolist()))


def multiset_unrank(rank: int, d: int, k: int) -> MultisetType:
    """Inverse of :func:`multiset_rank`."""
    if d < 0 or k < 0:
        raise ContractError("d and k must be nonnegative")
    rank = int(rank)
    total = math.comb(d + k, k)
    if not 0 <= rank < total:
        raise ContractError(f"rank {rank} outside [0, {total})")
    if k == 0:
        return MultisetType((0,) * (d + 1))
    table = _binomial_table(d + k - 1, k)
    subset = [0] * k
    n = d + k - 1
    for j in range(k, 0, -1):
        if table is None:
            while math.comb(n, j) > rank:
                n -= 1
            c = math.comb(n, j)
        else:
            # rows are nondecreasing in n: largest n with C(n, j) <= rank
            n = bisect_right(table[j], rank, 0, n + 1) - 1
            c = table[j][n]
        rank -= c
        subset[j - 1] = n
        n -= 1
    symbols = np.asarray(subset, dtype=np.int64) - np.arange(k)
    return MultisetType(tuple(np.bincount(symbols, minlength=d + 1)))

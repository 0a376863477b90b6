"""Fixed-length unbiased gradient quantizers.

Each quantizer is an immutable parameter bundle with a four-stage pipeline::

    sample(Y, rng)        -> outcome    random encoder choice
    pack(outcome)         -> BitMessage exactly ``width`` bits
    unpack(BitMessage)    -> outcome
    reconstruct(outcome)  -> vector     decoder output

``encode``/``decode`` compose these, and ``quantize`` is the round trip.
Families:

* :class:`SimQ` -- one signed basis vector from l_1 sampling.
* :class:`SimQPlus` -- average of ``k`` SimQ draws, sent as a type + signs.
* :class:`CUQ` -- coordinate-wise uniform grid with stochastic rounding.
* :class:`RATQ` -- Hadamard rotation, per-group adaptive range, then CUQ.
* :class:`SplitQuantizer` -- CUQ for small coordinates, RATQ for the few
  large ones; used for ``p in [1, 2)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from . import bitcodec
from .bitcodec import BitMessage, MultisetType, bits_for_count, pack_uints, unpack_uints
from .bounds import DegenerateDimensionWarning, delta1, delta2, lnstar
from .exceptions import ContractError, CorruptMessageError, InputContractError
from .norms import NORM_RTOL, ceil_tol, check_norm, conjugate, inv
from .rotation import padded_dim, rotate, unrotate

__all__ = [
    "QuantizedMessage",
    "Quantizer",
    "SimQ",
    "SimQPlus",
    "SimQPlusOutcome",
    "CUQ",
    "RATQ",
    "RatqOutcome",
    "SplitQuantizer",
    "SplitOutcome",
    "derive_simqplus_spec",
    "derive_split_spec",
    "bit_budget",
    "make_quantizer",
]


@dataclass(frozen=True, eq=False)
class QuantizedMessage:
    """Encoder output: the payload plus what travels out of band."""

    payload: BitMessage
    family: str
    spec: "Quantizer"
    seed: Optional[int] = None

    def __post_init__(self):
        if self.payload.width != self.spec.width:
            raise AssertionError(
                f"{self.family} emitted {self.payload.width} bits, budget is {self.spec.width}"
            )


class Quantizer:
    """Shared encode/decode plumbing. Subclasses define the four stages."""

    family = "abstract"
    uses_seed = False

    d: int
    B: float

    @property
    def width(self) -> int:
        raise NotImplementedError

    def sample(self, Y, rng, seed=None):
        raise NotImplementedError

    def pack(self, outcome) -> BitMessage:
        raise NotImplementedError

    def unpack(self, msg: BitMessage):
        raise NotImplementedError

    def reconstruct(self, outcome, seed=None) -> np.ndarray:
        raise NotImplementedError

    def encode(self, Y, rng, seed=None) -> QuantizedMessage:
        if self.uses_seed and seed is None:
            seed = int(rng.integers(0, 2**63))
        outcome = self.sample(Y, rng, seed)
        return QuantizedMessage(self.pack(outcome), self.family, self, seed)

    def decode(self, msg: QuantizedMessage) -> np.ndarray:
        if msg.spec is not self and msg.spec != self:
            raise ContractError("message was produced by a different quantizer spec")
        if msg.payload.width != self.width:
            raise CorruptMessageError(
                f"payload has {msg.payload.width} bits, expected {self.width}"
            )
        return self.reconstruct(self.unpack(msg.payload), msg.seed)

    def quantize(self, Y, rng) -> np.ndarray:
        """Encode then decode ``Y``; an unbiased random estimate of ``Y``."""
        return self.decode(self.encode(Y, rng))


def _as_vector(Y, d: int) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64).ravel()
    if Y.size != d:
        raise InputContractError(f"expected a vector of length {d}, got {Y.size}")
    if not np.all(np.isfinite(Y)):
        raise InputContractError("input has non-finite entries")
    return Y


# -- SimQ -------------------------------------------------------------------


@dataclass(frozen=True)
class SimQ(Quantizer):
    """Simplex quantizer for inputs with ``||Y||_1 <= B``.

    The message is one integer ``v`` in ``[0, 2d]``: 0 is the zero outcome,
    ``v in [1, d]`` decodes to ``+B e_v`` and ``v in [d+1, 2d]`` to
    ``-B e_{v-d}`` (basis vectors 1-indexed).
    """

    d: int
    B: float
    family = "simq"

    def __post_init__(self):
        if self.d < 1 or not self.B > 0:
            raise ContractError("SimQ needs d >= 1 and B > 0")

    @property
    def width(self) -> int:
        return bits_for_count(2 * self.d + 1)

    @property
    def alpha0(self) -> float:
        return float(self.B)

    def probabilities(self, Y) -> np.ndarray:
        """Probability of each index ``0..d`` (0 = the zero outcome)."""
        Y = _as_vector(Y, self.d)
        check_norm(Y, 1, self.B, "SimQ input", InputContractError)
        return _simplex_probs(Y, self.B)

    def sample(self, Y, rng, seed=None) -> int:
        Y = _as_vector(Y, self.d)
        cdf = np.cumsum(self.probabilities(Y))
        i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        if i == 0:
            return 0
        return i if Y[i - 1] > 0 else self.d + i

    def pack(self, v: int) -> BitMessage:
        return bitcodec.write_field(BitMessage.zeros(self.width), 0, self.width, v)

    def unpack(self, msg: BitMessage) -> int:
        return bitcodec.read_field(msg, 0, self.width)

    def reconstruct(self, v: int, seed=None) -> np.ndarray:
        v = int(v)
        if not 0 <= v <= 2 * self.d:
            raise CorruptMessageError(f"SimQ codeword {v} > 2d = {2 * self.d}")
        out = np.zeros(self.d)
        if 1 <= v <= self.d:
            out[v - 1] = self.B
        elif v > self.d:
            out[v - self.d - 1] = -self.B
        return out


def _simplex_probs(Y: np.ndarray, bound: float) -> np.ndarray:
    """``[P(zero), |Y_1|/bound, ..., |Y_d|/bound]``, renormalized within tolerance."""
    mags = np.abs(Y) / bound
    total = mags.sum()
    if total > 1.0:
        # only reachable within the norm tolerance
        mags = mags / total
        total = 1.0
    return np.concatenate(([max(0.0, 1.0 - total)], mags))


# -- SimQ+ ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SimQPlusOutcome:
    counts: np.ndarray  # length d+1, counts[0] = zero outcomes
    sign_bits: np.ndarray  # length k, 1 = positive

    def __eq__(self, other):
        return (np.array_equal(self.counts, other.counts)
                and np.array_equal(self.sign_bits, other.sign_bits))


@dataclass(frozen=True)
class SimQPlus(Quantizer):
    """Average of ``k`` independent SimQ draws at bound ``B d^(1/p)``.

    Inputs satisfy ``||Y||_q <= B`` with ``q`` conjugate to ``p in [2, inf]``.
    Wire format: ``[type rank][k sign bits]`` where the rank indexes the
    count vector of drawn indices and sign bit ``j`` belongs to the
    ``j``-th smallest nonzero index that was drawn.
    """

    d: int
    p: float
    B: float
    k: int
    family = "simqplus"

    def __post_init__(self):
        if self.d < 1 or not self.B > 0 or self.k < 1:
            raise ContractError("SimQ+ needs d >= 1, B > 0, k >= 1")
        if not self.p >= 2:
            raise ContractError(f"SimQ+ is defined for p >= 2, got p={self.p}")

    @property
    def q(self) -> float:
        return conjugate(self.p)

    @property
    def scaled_bound(self) -> float:
        """``B d^(1/p)``, an l_1 bound on admissible inputs."""
        return self.B * self.d ** inv(self.p)

    @cached_property
    def n_types(self) -> int:
        return bitcodec.binomial(self.d + self.k, self.k)

    @cached_property
    def type_width(self) -> int:
        return bits_for_count(self.n_types)

    @property
    def width(self) -> int:
        return self.type_width + self.k

    @property
    def alpha0(self) -> float:
        return math.sqrt(self.B**2 * self.d ** (2 * inv(self.p)) / self.k + self.B**2)

    def probabilities(self, Y) -> np.ndarray:
        Y = _as_vector(Y, self.d)
        check_norm(Y, self.q, self.B, "SimQ+ input", InputContractError)
        return _simplex_probs(Y, self.scaled_bound)

    def sample(self, Y, rng, seed=None) -> SimQPlusOutcome:
        probs = self.probabilities(Y)
        counts = rng.multinomial(self.k, probs)
        present = np.flatnonzero(counts[1:])
        signs = np.zeros(self.k, dtype=np.uint8)
        signs[:present.size] = np.asarray(Y)[present] > 0
        return SimQPlusOutcome(counts.astype(np.int64), signs)

    def pack(self, outcome: SimQPlusOutcome) -> BitMessage:
        rank = bitcodec.multiset_rank(MultisetType(tuple(outcome.counts)))
        head = bitcodec.write_field(BitMessage.zeros(self.type_width), 0, self.type_width, rank)
        return BitMessage.concat(head, BitMessage(outcome.sign_bits))

    def unpack(self, msg: BitMessage) -> SimQPlusOutcome:
        rank = bitcodec.read_field(msg, 0, self.type_width)
        total = self.n_types
        if rank >= total:
            raise CorruptMessageError(f"type rank {rank} >= number of types {total}")
        counts = np.asarray(bitcodec.multiset_unrank(rank, self.d, self.k).counts, dtype=np.int64)
        signs = msg.bits[self.type_width:].copy()
        used = np.count_nonzero(counts[1:])
        if signs[used:].any():
            raise CorruptMessageError("unused sign bits must be zero")
        return SimQPlusOutcome(counts, signs)

    def reconstruct(self, outcome: SimQPlusOutcome, seed=None) -> np.ndarray:
        counts = np.asarray(outcome.counts)
        present = np.flatnonzero(counts[1:])
        sigma = np.where(np.asarray(outcome.sign_bits[:present.size]) == 1, 1.0, -1.0)
        out = np.zeros(self.d)
        out[present] = counts[1:][present] * sigma
        return out * (self.scaled_bound / self.k)


def derive_simqplus_spec(d: int, p: float, B: float, k: Optional[int] = None) -> SimQPlus:
    """SimQ+ with the default repetition count ``ceil(d^(2/p))``."""
    if d < 1:
        raise ContractError("d must be >= 1")
    if k is None:
        k = max(1, ceil_tol(d ** (2 * inv(p))))
    return SimQPlus(d=d, p=float(p), B=float(B), k=int(k))


# -- CUQ --------------------------------------------------------------------


def _stochastic_round(y: np.ndarray, M, k: int, rng) -> np.ndarray:
    """Level indices in ``0..k`` on the grid ``-M + 2Mj/k``, unbiased."""
    t = (y + M) * (k / (2.0 * M))
    t = np.clip(t, 0.0, float(k))
    low = np.minimum(np.floor(t), k - 1)
    up = rng.random(y.shape) < (t - low)
    return (low + up).astype(np.int64)


@dataclass(frozen=True)
class CUQ(Quantizer):
    """Coordinate-wise uniform quantizer on ``[-M, M]`` with ``k+1`` grid points."""

    d: int
    M: float
    k: int
    family = "cuq"

    def __post_init__(self):
        if self.d < 0 or not self.M > 0 or self.k < 1:
            raise ContractError("CUQ needs d >= 0, M > 0, k >= 1")

    @property
    def B(self) -> float:
        return float(self.M)

    @property
    def field_width(self) -> int:
        return bits_for_count(self.k + 1)

    @property
    def width(self) -> int:
        return self.d * self.field_width

    def grid(self) -> np.ndarray:
        return -self.M + 2.0 * self.M * np.arange(self.k + 1) / self.k

    def sample(self, Y, rng, seed=None) -> np.ndarray:
        Y = _as_vector(Y, self.d)
        check_norm(Y, math.inf, self.M, "CUQ input", InputContractError)
        return _stochastic_round(Y, self.M, self.k, rng)

    def pack(self, levels) -> BitMessage:
        return pack_uints(levels, self.field_width)

    def unpack(self, msg: BitMessage) -> np.ndarray:
        return unpack_uints(msg, 0, self.field_width, self.d)

    def reconstruct(self, levels, seed=None) -> np.ndarray:
        levels = np.asarray(levels, dtype=np.int64)
        if levels.size and (levels.max() > self.k or levels.min() < 0):
            raise CorruptMessageError(f"CUQ level index exceeds k = {self.k}")
        return -self.M + 2.0 * self.M * levels / self.k


# -- RATQ -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RatqOutcome:
    ladder: np.ndarray  # one range index per group
    levels: np.ndarray  # one CUQ level per rotated coordinate

    def __eq__(self, other):
        return (np.array_equal(self.ladder, other.ladder)
                and np.array_equal(self.levels, other.levels))


def _tetration_ladder(h: int) -> list:
    """``e*_0 = 1``, ``e*_{j+1} = exp(e*_j)``; overflow becomes ``inf``."""
    out = [1.0]
    for _ in range(h - 1):
        try:
            out.append(math.exp(out[-1]))
        except OverflowError:
            out.append(math.inf)
    return out


@dataclass(frozen=True)
class RATQ(Quantizer):
    """Rotated adaptive tetra-iterated quantizer for ``||Y||_2 <= B_prime``.

    Inputs of length up to ``d_prime`` are zero-padded to ``d_prime``, then
    to the next power of two and rotated. Rotated coordinates are split
    into consecutive groups of ``s``; each group sends the smallest ladder
    index whose range covers it, then CUQ levels with that range.
    """

    d_prime: int
    B_prime: float
    k: int
    family = "ratq"
    uses_seed = True

    def __post_init__(self):
        if self.d_prime < 0 or not self.B_prime > 0 or self.k < 2:
            raise ContractError("RATQ needs d_prime >= 0, B_prime > 0, k >= 2")

    @property
    def d(self) -> int:
        return self.d_prime

    @property
    def B(self) -> float:
        return float(self.B_prime)

    @cached_property
    def log_h(self) -> int:
        if self.d_prime == 0:
            return 0
        return lnstar(self.d_prime / 3).bit_length()

    @property
    def h(self) -> int:
        return 1 << self.log_h

    @property
    def s(self) -> int:
        return max(1, self.log_h)

    @property
    def m(self) -> float:
        return 3 * self.B_prime**2 / max(self.d_prime, 1)

    @property
    def m0(self) -> float:
        return 2 * self.B_prime**2 / max(self.d_prime, 1) * math.log(self.s)

    @cached_property
    def ladder(self) -> np.ndarray:
        """Dynamic ranges ``M_0 <= ... <= M_{h-1}``, capped at ``B_prime``.

        No rotated coordinate can exceed ``B_prime``, so levels above it are
        lowered to it and the top level is ``B_prime`` itself; this keeps every
        admissible input inside some range.
        """
        levels = []
        for e in _tetration_ladder(self.h):
            sq = self.m if self.m0 == 0 else self.m + self.m0 * e
            levels.append(min(math.sqrt(sq), self.B_prime))
        levels[-1] = self.B_prime
        out = np.asarray(levels)
        out.setflags(write=False)
        return out

    @property
    def padded_dim(self) -> int:
        return 0 if self.d_prime == 0 else padded_dim(self.d_prime)

    @property
    def n_groups(self) -> int:
        return -(-self.padded_dim // self.s)

    @property
    def index_width(self) -> int:
        return self.log_h

    @property
    def level_width(self) -> int:
        return bits_for_count(self.k + 1)

    @property
    def width(self) -> int:
        return self.n_groups * self.index_width + self.padded_dim * self.level_width

    @property
    def degenerate(self) -> bool:
        return self.s == 1 or self.m0 == 0

    def mse_bound(self) -> float:
        """``B'^2 (9 + 3 ln s) / (k - 1)^2``."""
        return self.B_prime**2 * (9 + 3 * math.log(self.s)) / (self.k - 1) ** 2

    def _groups(self):
        return np.arange(self.padded_dim) // self.s

    def sample(self, Y, rng, seed=None) -> RatqOutcome:
        if seed is None:
            raise ContractError("RATQ needs a shared rotation seed")
        Y = np.asarray(Y, dtype=np.float64).ravel()
        if Y.size > self.d_prime:
            raise InputContractError(f"RATQ input longer than d_prime = {self.d_prime}")
        check_norm(Y, 2, self.B_prime, "RATQ input", InputContractError)
        if self.d_prime == 0:
            return RatqOutcome(np.zeros(0, np.int64), np.zeros(0, np.int64))
        x = np.zeros(self.d_prime)
        x[:Y.size] = Y
        w = rotate(x, seed)
        groups = self._groups()
        gmax = np.zeros(self.n_groups)
        np.maximum.at(gmax, groups, np.abs(w))
        ladder = self.ladder
        idx = np.searchsorted(ladder, gmax, side="left")
        over = idx >= self.h
        if over.any():
            if np.all(gmax[over] <= ladder[-1] * (1 + NORM_RTOL)):
                idx[over] = self.h - 1
            else:
                raise RuntimeError("rotated coordinate exceeds the top ladder level")
        levels = _stochastic_round(w, ladder[idx][groups], self.k, rng)
        return RatqOutcome(idx.astype(np.int64), levels)

    def pack(self, outcome: RatqOutcome) -> BitMessage:
        return BitMessage.concat(pack_uints(outcome.ladder, self.index_width),
                                 pack_uints(outcome.levels, self.level_width))

    def unpack(self, msg: BitMessage) -> RatqOutcome:
        head = self.n_groups * self.index_width
        ladder = unpack_uints(msg, 0, self.index_width, self.n_groups)
        levels = unpack_uints(msg, head, self.level_width, self.padded_dim)
        return RatqOutcome(ladder, levels)

    def reconstruct(self, outcome: RatqOutcome, seed=None) -> np.ndarray:
        if self.d_prime == 0:
            return np.zeros(0)
        if seed is None:
            raise ContractError("RATQ needs the shared rotation seed to decode")
        ladder_idx = np.asarray(outcome.ladder)
        levels = np.asarray(outcome.levels)
        if ladder_idx.size and ladder_idx.max() >= self.h:
            raise CorruptMessageError(f"ladder index >= h = {self.h}")
        if levels.size and levels.max() > self.k:
            raise CorruptMessageError(f"level index > k = {self.k}")
        M = self.ladder[ladder_idx][self._groups()]
        w = -M + 2.0 * M * levels / self.k
        return unrotate(w, seed, self.d_prime)


# -- split quantizer --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SplitOutcome:
    support: np.ndarray  # bool, length d: coordinates routed to RATQ
    cuq: np.ndarray
    ratq: RatqOutcome

    def __eq__(self, other):
        return (np.array_equal(self.support, other.support)
                and np.array_equal(self.cuq, other.cuq) and self.ratq == other.ratq)


@dataclass(frozen=True)
class SplitQuantizer(Quantizer):
    """Quantizer for ``||Y||_q <= B`` with ``p in [1, 2)``.

    Coordinates with ``|Y(i)| <= c`` go through CUQ with range ``c``; the at
    most ``capacity`` larger ones are listed in a bitmap and sent through
    RATQ. Wire format: ``[d-bit bitmap][CUQ block][RATQ block]``.
    Build with :func:`derive_split_spec`.
    """

    d: int
    p: float
    B: float
    delta1: int
    delta2: int
    c: float
    cuq: CUQ
    ratq: RATQ
    family = "split"
    uses_seed = True

    @property
    def q(self) -> float:
        return conjugate(self.p)

    @property
    def capacity(self) -> int:
        return self.ratq.d_prime

    @property
    def width(self) -> int:
        return self.d + self.cuq.width + self.ratq.width

    @property
    def alpha0(self) -> float:
        return math.sqrt(12) * self.B

    @property
    def degenerate(self) -> bool:
        return self.delta2 == 0 or self.ratq.degenerate

    def nominal_width(self) -> int:
        """``d (ceil(log2(2 sqrt2 delta1^(1/q) + 2)) + 3) + delta2``."""
        return self.d * (self.cuq.field_width + 3) + self.delta2

    def sample(self, Y, rng, seed=None) -> SplitOutcome:
        Y = _as_vector(Y, self.d)
        check_norm(Y, self.q, self.B, "split input", InputContractError)
        support = np.abs(Y) > self.c
        n_large = int(support.sum())
        if n_large > self.capacity:
            raise InputContractError(
                f"{n_large} coordinates exceed c, capacity is {self.capacity}"
            )
        small = np.where(support, 0.0, Y)
        cuq_levels = self.cuq.sample(small, rng)
        ratq = self.ratq.sample(Y[support], rng, seed)
        return SplitOutcome(support, cuq_levels, ratq)

    def pack(self, outcome: SplitOutcome) -> BitMessage:
        return BitMessage.concat(BitMessage(outcome.support.astype(np.uint8)),
                                 self.cuq.pack(outcome.cuq),
                                 self.ratq.pack(outcome.ratq))

    def unpack(self, msg: BitMessage) -> SplitOutcome:
        support = msg.bits[:self.d].astype(bool)
        if support.sum() > self.capacity:
            raise CorruptMessageError("bitmap marks more coordinates than capacity")
        cuq_end = self.d + self.cuq.width
        cuq = self.cuq.unpack(msg.slice(self.d, self.cuq.width))
        ratq = self.ratq.unpack(msg.slice(cuq_end, self.ratq.width))
        return SplitOutcome(support, cuq, ratq)

    def reconstruct(self, outcome: SplitOutcome, seed=None) -> np.ndarray:
        out = self.cuq.reconstruct(outcome.cuq)
        large = np.flatnonzero(outcome.support)
        if large.size:
            out[large] += self.ratq.reconstruct(outcome.ratq, seed)[:large.size]
        return out


def derive_split_spec(d: int, p: float, B: float) -> SplitQuantizer:
    """Split quantizer with all parameters derived from ``(d, p, B)``."""
    if d < 1:
        raise ContractError("d must be >= 1")
    if not 1 <= p < 2:
        raise ContractError(f"split quantizer needs p in [1, 2), got {p}")
    q = conjugate(p)
    iq = inv(q)
    d2 = delta2(d)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateDimensionWarning)
        d1 = delta1(d, q)
    c = B * d1**iq / d**iq
    cuq_bits = ceil_tol(math.log2(2 * math.sqrt(2) * d1**iq + 2))
    cuq = CUQ(d=d, M=c, k=2**cuq_bits - 1)
    ratq = RATQ(d_prime=d // d1, B_prime=B * d ** (0.5 - iq), k=2**d1 - 1)
    spec = SplitQuantizer(d=d, p=float(p), B=float(B), delta1=d1, delta2=d2,
                          c=c, cuq=cuq, ratq=ratq)
    if spec.degenerate:
        warnings.warn(f"split quantizer at d={d} has degenerate RATQ parameters",
                      DegenerateDimensionWarning, stacklevel=2)
    return spec


def bit_budget(spec: Quantizer) -> int:
    """Exact message width of ``spec`` in bits."""
    return spec.width


def make_quantizer(family: str, d: int, p: float, B: float, **params) -> Optional[Quantizer]:
    """Build a quantizer from a descriptor; ``"none"`` gives ``None``."""
    family = family.lower()
    if family == "none":
        return None
    if family == "simq":
        if not math.isinf(p):
            raise ContractError("SimQ is the p = inf quantizer")
        return SimQ(d=d, B=float(B))
    if family == "simqplus":
        return derive_simqplus_spec(d, p, B, params.get("k"))
    if family == "split":
        return derive_split_spec(d, p, B)
    raise ContractError(f"unknown quantizer family {family!r}")

import math
import warnings

import numpy as np
import pytest

from _reference import (
    cuq_distribution,
    expectation,
    random_l1_ball,
    random_lq_ball,
    simq_distribution,
    simqplus_distribution,
)
from lpquant.bitcodec import BitMessage
from lpquant.bounds import DegenerateDimensionWarning
from lpquant.exceptions import ContractError, CorruptMessageError, InputContractError
from lpquant.quantizers import (
    CUQ,
    RATQ,
    QuantizedMessage,
    SimQ,
    SimQPlus,
    bit_budget,
    derive_simqplus_spec,
    derive_split_spec,
    make_quantizer,
)


def mc_mean(q, Y, n, rng):
    return np.mean([q.quantize(Y, rng) for _ in range(n)], axis=0)


# -- SimQ -------------------------------------------------------------------


def test_simq_width():
    assert [SimQ(d, 1.0).width for d in (1, 2, 3, 4, 1024)] == [2, 3, 3, 4, 12]


def test_simq_exactly_unbiased(rng):
    for d in range(1, 9):
        Y = random_l1_ball(d, 2.0, rng)
        dist = simq_distribution(Y, 2.0)
        assert abs(sum(p for p, _ in dist) - 1) < 1e-12
        np.testing.assert_allclose(expectation(dist), Y, atol=1e-12)
        # the quantizer's own probability table agrees with the reference
        probs = SimQ(d, 2.0).probabilities(Y)
        np.testing.assert_allclose(probs[1:], np.abs(Y) / 2.0, atol=1e-15)


def test_simq_sampler_frequencies(rng):
    q = SimQ(3, 1.0)
    Y = np.array([0.5, -0.2, 0.0])
    counts = np.bincount([q.sample(Y, rng) for _ in range(20000)], minlength=7)
    freq = counts / counts.sum()
    expected = np.array([0.3, 0.5, 0, 0, 0, 0.2, 0])
    assert np.all(np.abs(freq - expected) < 4 * np.sqrt(expected * (1 - expected) / 20000) + 1e-12)


def test_simq_codewords():
    q = SimQ(3, 2.0)
    assert np.array_equal(q.reconstruct(0), np.zeros(3))
    assert np.array_equal(q.reconstruct(2), [0, 2.0, 0])
    assert np.array_equal(q.reconstruct(6), [0, 0, -2.0])
    with pytest.raises(CorruptMessageError):
        q.reconstruct(7)


def test_simq_rejects_outside_ball():
    with pytest.raises(InputContractError):
        SimQ(2, 1.0).encode(np.array([0.7, 0.7]), np.random.default_rng(0))
    # within the relative tolerance is accepted
    SimQ(2, 1.0).encode(np.array([0.5, 0.5 + 1e-12]), np.random.default_rng(0))


# -- SimQ+ ------------------------------------------------------------------


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_simqplus_error_identity_by_enumeration(k, rng):
    B, p = 1.0, 2.0
    q = SimQPlus(2, p, B, k)
    for _ in range(5):
        Y = random_lq_ball(2, 2.0, B, rng)
        dist = simqplus_distribution(Y, q.scaled_bound, k)
        np.testing.assert_allclose(expectation(dist), Y, atol=1e-12)
        mse = expectation(dist, lambda v: float(np.sum((v - Y) ** 2)))
        closed = (q.scaled_bound * np.abs(Y).sum() - np.sum(Y**2)) / k
        assert abs(mse - closed) < 1e-12


def test_simqplus_default_k_and_width():
    q = derive_simqplus_spec(16, 2, 1.0)
    assert q.k == 16 and q.width == 46 and bit_budget(q) == 46
    assert derive_simqplus_spec(1024, math.inf, 1.0).k == 1


def test_simqplus_monte_carlo_unbiased(rng):
    q = derive_simqplus_spec(8, 3, 1.0)
    Y = random_lq_ball(8, q.q, 1.0, rng)
    n = 20000
    draws = np.array([q.quantize(Y, rng) for _ in range(n)])
    se = draws.std(axis=0, ddof=1) / np.sqrt(n)
    assert np.all(np.abs(draws.mean(axis=0) - Y) <= 4 * se + 1e-12)


def test_simqplus_roundtrip_outcomes(rng):
    q = derive_simqplus_spec(16, 4, 1.0)
    for _ in range(200):
        Y = random_lq_ball(16, q.q, 1.0, rng)
        out = q.sample(Y, rng)
        assert q.unpack(q.pack(out)) == out


def test_simqplus_rejects_bad_rank():
    q = SimQPlus(2, 2.0, 1.0, 2)  # C(4,2) = 6 types in 3 bits
    bits = np.zeros(q.width, dtype=np.uint8)
    bits[:3] = [1, 1, 1]
    with pytest.raises(CorruptMessageError):
        q.unpack(BitMessage(bits))


def test_simqplus_needs_p_at_least_two():
    with pytest.raises(ContractError):
        SimQPlus(4, 1.5, 1.0, 2)


# -- CUQ --------------------------------------------------------------------


def test_cuq_exactly_unbiased(rng):
    for d in range(1, 5):
        for k in (1, 2, 3, 7):
            M = 1.5
            Y = rng.uniform(-M, M, size=d)
            dist = cuq_distribution(Y, M, k)
            np.testing.assert_allclose(expectation(dist), Y, atol=1e-12)


def test_cuq_grid_points_are_fixed(rng):
    q = CUQ(4, 1.0, 4)
    grid = q.grid()
    Y = grid[[0, 1, 3, 4]]
    for _ in range(20):
        np.testing.assert_allclose(q.quantize(Y, rng), Y, atol=1e-15)


def test_cuq_error_bound(rng):
    q = CUQ(200, 2.0, 7)
    Y = rng.uniform(-2, 2, 200)
    err = np.abs(q.quantize(Y, rng) - Y)
    assert err.max() <= 2 * 2.0 / 7 + 1e-12


def test_cuq_rejects_out_of_range():
    with pytest.raises(InputContractError):
        CUQ(2, 1.0, 3).encode(np.array([1.1, 0.0]), np.random.default_rng(0))


# -- RATQ -------------------------------------------------------------------


def test_ratq_parameters():
    q = RATQ(64, 1.0, 7)
    assert (q.h, q.s, q.width) == (4, 2, 256)
    np.testing.assert_allclose(q.ladder, [0.2618, 0.3252, 0.6125, 1.0], atol=1e-4)
    assert np.all(np.diff(q.ladder) >= 0)


def test_ratq_unbiased_and_mse(rng):
    q = RATQ(64, 1.0, 15)
    Y = random_lq_ball(64, 2.0, 1.0, rng)
    n = 4000
    draws = np.array([q.quantize(Y, rng) for _ in range(n)])
    se = draws.std(axis=0, ddof=1) / np.sqrt(n)
    assert np.all(np.abs(draws.mean(axis=0) - Y) <= 4.5 * se + 1e-12)
    mse = np.sum((draws - Y) ** 2, axis=1)
    assert mse.mean() <= q.mse_bound() + 3 * mse.std(ddof=1) / np.sqrt(n)


def test_ratq_basis_vector_is_covered(rng):
    # worst case for the rotation: all mass on one coordinate
    q = RATQ(5, 2.0, 3)
    e = np.zeros(5)
    e[0] = 2.0
    out = q.sample(e, rng, seed=11)
    assert q.unpack(q.pack(out)) == out


def test_ratq_needs_seed(rng):
    with pytest.raises(ContractError):
        RATQ(8, 1.0, 3).sample(np.zeros(8), rng)


def test_ratq_empty_block(rng):
    q = RATQ(0, 1.0, 3)
    assert q.width == 0
    assert q.reconstruct(q.sample(np.zeros(0), rng, seed=1), seed=1).size == 0


# -- split ------------------------------------------------------------------


def test_split_parameters():
    s = derive_split_spec(64, 1, 1.0)
    assert (s.delta1, s.delta2, s.capacity, s.cuq.k, s.width, s.nominal_width()) == (
        6, 2, 10, 7, 368, 386)
    with pytest.warns(DegenerateDimensionWarning):
        small = derive_split_spec(4, 4 / 3, 1.0)
    assert (small.delta1, small.delta2, small.capacity, small.width) == (3, 1, 1, 19)
    assert small.c == pytest.approx(3 ** 0.25 / 4 ** 0.25)


def test_split_unbiased_and_second_moment(rng):
    s = derive_split_spec(64, 1, 1.0)
    Y = np.zeros(64)
    Y[:3] = [0.5, -0.3, 0.2]  # l_inf = 0.5, three large coordinates
    n = 4000
    draws = np.array([s.quantize(Y, rng) for _ in range(n)])
    se = draws.std(axis=0, ddof=1) / np.sqrt(n)
    assert np.all(np.abs(draws.mean(axis=0) - Y) <= 4.5 * se + 1e-12)
    sq = np.max(np.abs(draws), axis=1) ** 2
    assert sq.mean() <= 12 * s.B**2


def test_split_roundtrip(rng):
    s = derive_split_spec(64, 1.5, 1.0)
    for _ in range(200):
        Y = random_lq_ball(64, s.q, 1.0, rng)
        seed = int(rng.integers(2**62))
        out = s.sample(Y, rng, seed)
        msg = s.pack(out)
        assert msg.width == s.width
        assert s.unpack(msg) == out


def test_split_rejects_bad_bitmap():
    s = derive_split_spec(64, 1, 1.0)
    bits = np.zeros(s.width, dtype=np.uint8)
    bits[: s.capacity + 1] = 1
    with pytest.raises(CorruptMessageError):
        s.unpack(BitMessage(bits))


def test_fuzzed_payloads_decode_or_raise(rng):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateDimensionWarning)
        specs = [SimQ(5, 1.0), SimQPlus(4, 2.0, 1.0, 3), CUQ(3, 1.0, 5),
                 RATQ(12, 1.0, 3), derive_split_spec(16, 1.0, 1.0)]
    for q in specs:
        for _ in range(300):
            bits = rng.integers(0, 2, q.width).astype(np.uint8)
            msg = QuantizedMessage(BitMessage(bits), q.family, q, seed=5)
            try:
                out = q.decode(msg)
            except CorruptMessageError:
                continue
            assert np.all(np.isfinite(out))


def test_decode_checks_width():
    q = SimQ(4, 1.0)
    msg = QuantizedMessage(BitMessage.zeros(q.width), q.family, q)
    with pytest.raises(AssertionError):
        QuantizedMessage(BitMessage.zeros(q.width + 1), q.family, q)
    assert np.array_equal(q.decode(msg), np.zeros(4))


def test_make_quantizer_families():
    assert make_quantizer("none", 4, 2, 1.0) is None
    assert make_quantizer("simq", 4, math.inf, 1.0).width == 4
    assert make_quantizer("simqplus", 16, 2, 1.0, k=None).width == 46
    assert make_quantizer("split", 64, 1, 1.0).width == 368
    with pytest.raises(ContractError):
        make_quantizer("simq", 4, 2, 1.0)

import math

import numpy as np
import pytest

from lpquant.exceptions import ContractError
from lpquant.optimizers import Domain
from lpquant.oracles import (
    HardInstanceParams,
    bernoulli_product_oracle,
    finite_sum_abs_oracle,
    linear_oracle,
    make_oracle,
    paninski_oracle,
)


def test_paninski_extreme_delta(rng):
    o = paninski_oracle(HardInstanceParams((1, 1), 0.5, 1.0, 1.0, 2.0))
    draws = np.array([o.sample(None, rng) for _ in range(2000)])
    assert np.all(draws >= 0)
    assert np.all(np.abs(draws).sum(axis=1) == 1.0)


def test_paninski_mean_monte_carlo(rng):
    alpha = (1, -1, 1, 1)
    o = paninski_oracle(HardInstanceParams(alpha, 0.3, 1.0, 2.0, 2.0))
    n = 200_000
    draws = np.array([o.sample(None, rng) for _ in range(n)])
    se = draws.std(axis=0, ddof=1) / np.sqrt(n)
    expected = 2 * 2.0 * 0.3 / 4 * np.array(alpha)
    np.testing.assert_allclose(o.mean, expected)
    assert np.all(np.abs(draws.mean(axis=0) - expected) <= 4 * se)


def test_bernoulli_enumerated_mean():
    # d = 2, q = 2: four outcomes with probabilities {3/4, 1/4} x {1/4, 3/4}
    o = bernoulli_product_oracle(HardInstanceParams((1, -1), 0.25, 1.0, 1.0, 2.0))
    v = 1 / math.sqrt(2)
    mean = np.zeros(2)
    for s1, p1 in ((v, 0.75), (-v, 0.25)):
        for s2, p2 in ((v, 0.25), (-v, 0.75)):
            mean += p1 * p2 * np.array([s1, s2])
    np.testing.assert_allclose(o.mean, mean, atol=1e-15)
    np.testing.assert_allclose(mean, [0.3536, -0.3536], atol=1e-4)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 4.0, math.inf])
def test_bernoulli_norm_and_optimum(p, rng):
    d, B, D, delta = 16, 1.3, 0.7, 0.2
    o = make_oracle("bernoulli", d, p, B, D, delta, alpha_seed=3)
    q = o.q
    for _ in range(50):
        assert np.linalg.norm(o.sample(None, rng), ord=q) == pytest.approx(B, rel=1e-12)
    assert o.f_star() == pytest.approx(-B * D * delta, rel=1e-12)
    alpha = np.array(o.params.alpha)
    np.testing.assert_allclose(o.x_star(), -o.params.half_width * alpha)
    assert o.D == pytest.approx(D)


def test_delta_range():
    with pytest.raises(ContractError):
        HardInstanceParams((1, -1), 0.6, 1.0, 1.0, 2.0)
    with pytest.raises(ContractError):
        HardInstanceParams((1, 0), 0.1, 1.0, 1.0, 2.0)


def test_linear_oracle_noise_free(rng):
    o = linear_oracle([1.0, -2.0], 2.0, Domain.l2_ball(2, 1.0))
    assert np.array_equal(o.sample(np.zeros(2), rng), [1.0, -2.0])
    assert o.f_star() == pytest.approx(-math.sqrt(5))


def test_finite_sum_optimum_against_grid(rng):
    A = rng.standard_normal((6, 2))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    b = rng.standard_normal(6) * 0.3
    dom = Domain.l2_ball(2, 1.0)
    o = finite_sum_abs_oracle(A, b, 2.0, dom)
    t = np.linspace(-1, 1, 801)
    X, Y = np.meshgrid(t, t)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    pts = pts[np.linalg.norm(pts, axis=1) <= 1]
    grid_min = np.mean(np.abs(pts @ A.T - b), axis=1).min()
    assert o.f_star() <= grid_min + 1e-7
    assert o.f_star() >= grid_min - 5e-3


def test_finite_sum_subgradient_unbiased(rng):
    A = rng.standard_normal((5, 3))
    o = finite_sum_abs_oracle(A, rng.standard_normal(5), 2.0, Domain.l2_ball(3, 1.0))
    x = rng.standard_normal(3) * 0.3
    n = 50_000
    draws = np.array([o.sample(x, rng) for _ in range(n)])
    se = draws.std(axis=0, ddof=1) / np.sqrt(n)
    assert np.all(np.abs(draws.mean(axis=0) - o.mean_subgradient(x)) <= 4 * se + 1e-12)


def test_finite_sum_rejects_large_rows():
    with pytest.raises(ContractError):
        finite_sum_abs_oracle(np.array([[3.0, 4.0]]), [0.0], 2.0, Domain.l2_ball(2, 1.0), B=1.0)

import math
import warnings

import numpy as np
import pytest

from lpquant.bounds import (
    DegenerateDimensionWarning,
    admissible_inputs,
    alpha0_estimate,
    baseline_rate,
    benchmark_u,
    delta1,
    delta2,
    error_lower,
    lnstar,
    precision_bounds,
    r_star_lower,
    r_star_upper,
)
from lpquant.exceptions import ContractError
from lpquant.quantizers import SimQ, derive_simqplus_spec, derive_split_spec


def test_lnstar():
    assert [lnstar(a) for a in (0.5, 1.0, 2.0, math.e, 15.0, 3814279.1)] == [0, 0, 1, 1, 2, 3]
    with pytest.raises(ContractError):
        lnstar(0)


def test_delta2_values():
    assert delta2(768) == 2
    assert delta2(3) == 0
    assert delta2(64) == 2
    # ceil(log2(1 + lnstar(d/3))) straight from the definition
    for d in (4, 10, 100, 10_000, 10**7):
        assert delta2(d) == math.ceil(math.log2(1 + lnstar(d / 3)))


def test_delta1_values():
    assert delta1(64, math.inf) == 6
    with pytest.warns(DegenerateDimensionWarning):
        assert delta1(2, 4) == math.ceil(math.log2(2 + math.sqrt(18) * 2**0.25))
    # exact power of two inside the logarithm: ceil must not round up
    assert delta1(4, 4) == 3


def test_r_star_upper_worked_values():
    assert r_star_upper(16, math.inf) == pytest.approx(math.log2(2 * math.e * 17), abs=1e-12)
    assert r_star_upper(16, math.inf) == pytest.approx(6.53, abs=5e-3)
    assert r_star_upper(16, 2) == pytest.approx(55.08, abs=5e-3)
    assert r_star_upper(1024, math.inf) == pytest.approx(12.44, abs=5e-3)


def test_r_star_upper_split_matches_quantizer_budget():
    for d in (16, 64, 256, 1024):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateDimensionWarning)
            s = derive_split_spec(d, 1, 1.0)
        assert r_star_upper(d, 1) == s.nominal_width()


def test_r_star_lower():
    assert r_star_lower(1024, 2, rho=4) == pytest.approx(max(1024, 2 * math.log2(32)))
    assert r_star_lower(256, 1, rho=4) == pytest.approx(256 / 8)
    pb = precision_bounds(64, 2)
    assert pb.upper_bits >= pb.lower_bits


def test_rates():
    T, d = 10_000, 64
    assert benchmark_u(T, 2, d, 1, 1) == pytest.approx(4 / 100)
    assert benchmark_u(T, math.inf, d, 1, 1) == pytest.approx(4 * 8 / 100)
    lo, hi = baseline_rate(T, 1, d, 2, 1)
    assert lo == pytest.approx(0.02) and hi == pytest.approx(0.02 * math.sqrt(6))


def test_error_lower_shape():
    T, d = 10_000, 256
    base = baseline_rate(T, 2, d, 1, 1)[0]
    # one bit per step costs a factor sqrt(d) at p = 2
    assert error_lower(T, 1, 2, d, 1, 1) == pytest.approx(base * math.sqrt(d))
    # enough bits recover the unquantized rate
    assert error_lower(T, d, 2, d, 1, 1) == pytest.approx(base)
    values = [error_lower(T, r, 2, d, 1, 1) for r in range(1, 2 * d)]
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert error_lower(T, 4, 1, d, 1, 1) == pytest.approx(math.sqrt(d / 4) / 100)


def test_admissible_inputs_on_sphere(rng):
    for p in (1, 1.5, 2, 4, math.inf):
        q = 1 / (1 - 1 / p) if 1 < p < math.inf else (math.inf if p == 1 else 1)
        for y in admissible_inputs(32, p, 2.0, rng):
            assert np.linalg.norm(y, ord=q) == pytest.approx(2.0)


def test_alpha0_estimate_below_analytic(rng):
    for q, p in ((SimQ(16, 1.0), math.inf), (derive_simqplus_spec(16, 2, 1.0), 2)):
        est = alpha0_estimate(q, p, 400, rng)
        assert est.value <= q.alpha0 + 4 * est.stderr
    # SimQ output always has norm B or 0, so a basis input is exact
    est = alpha0_estimate(SimQ(8, 1.0), math.inf, 50, rng, inputs=[np.eye(8)[0]])
    assert est.value == pytest.approx(1.0) and est.stderr == 0


def test_alpha0_estimate_split(rng):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateDimensionWarning)
        s = derive_split_spec(64, 1.5, 1.0)
    est = alpha0_estimate(s, 1.5, 200, rng)
    assert est.value <= s.alpha0

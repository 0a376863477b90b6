"""Closed-form precision and error bounds, plus a Monte Carlo alpha_0 estimator.

All logarithms are base 2 except ``ln`` and ``lnstar`` (base e). The
absolute constants ``c0`` and ``c1`` of the unquantized rates are unknown;
functions take them (or their ratio ``rho = c0/c1``) as parameters with
default 1, so results describe the shape of each bound, not its scale.
"""

from __future__ import annotations

import math
import warnings
from typing import NamedTuple

import numpy as np

from .exceptions import ContractError
from .norms import ceil_tol, conjugate, inv, lp_norm

__all__ = [
    "DegenerateDimensionWarning",
    "PrecisionBounds",
    "lnstar",
    "delta1",
    "delta2",
    "r_star_upper",
    "r_star_lower",
    "precision_bounds",
    "benchmark_u",
    "baseline_rate",
    "error_lower",
    "Alpha0Estimate",
    "alpha0_estimate",
    "admissible_inputs",
]


class DegenerateDimensionWarning(UserWarning):
    """Raised for small dimensions where iterated-log parameters collapse."""


def lnstar(a: float) -> int:
    """Number of times ``ln`` must be applied to ``a`` to reach a value <= 1."""
    if not a > 0:
        raise ContractError(f"lnstar needs a positive argument, got {a}")
    n = 0
    while a > 1:
        a = math.log(a)
        n += 1
    return n


def delta2(d: int) -> int:
    """``ceil(log2(1 + lnstar(d/3)))``."""
    if d < 1:
        raise ContractError("d must be >= 1")
    # ceil(log2(n)) for an integer n >= 1 is (n - 1).bit_length()
    return lnstar(d / 3).bit_length()


def delta1(d: int, q: float) -> int:
    """``ceil(log2(2 + sqrt(18 + 6 ln delta2) * d^(1/2 - 1/q)))``.

    When ``delta2(d) == 0`` (``d <= 3``) the ``ln`` term is taken as 0 and a
    :class:`DegenerateDimensionWarning` is emitted.
    """
    if d < 1:
        raise ContractError("d must be >= 1")
    if not (q > 2 or math.isinf(q)):
        raise ContractError(f"delta1 needs q > 2 or q = inf, got {q}")
    d2 = delta2(d)
    if d2 == 0:
        warnings.warn(f"delta2({d}) = 0; treating ln(delta2) as 0",
                      DegenerateDimensionWarning, stacklevel=2)
    log_term = math.log(d2) if d2 > 0 else 0.0
    inner = 2 + math.sqrt(18 + 6 * log_term) * d ** (0.5 - inv(q))
    return ceil_tol(math.log2(inner))


def r_star_upper(d: int, p: float) -> float:
    """Bits sufficient to keep the unquantized rate (achievability side)."""
    if d < 2:
        raise ContractError("d must be >= 2")
    if p >= 2:
        e = math.e
        return d ** (2 * inv(p)) * math.log2(2 * e * d ** (1 - 2 * inv(p)) + 2 * e)
    q = conjugate(p)
    d1 = delta1(d, q)
    cuq_bits = ceil_tol(math.log2(2 * math.sqrt(2) * d1 ** inv(q) + 2))
    return d * (cuq_bits + 3) + delta2(d)


def r_star_lower(d: int, p: float, rho: float = 1.0) -> float:
    """Bits necessary to keep the unquantized rate, with ``rho = c0/c1``."""
    if d < 2:
        raise ContractError("d must be >= 2")
    if p >= 2:
        a = (rho / 4 * d ** inv(p)) ** 2
        b = 2 * math.log2(rho / 4 * math.sqrt(d))
        return max(a, b)
    return (rho / (4 * math.sqrt(math.log2(d)))) ** 2 * d


class PrecisionBounds(NamedTuple):
    upper_bits: float
    lower_bits: float
    p: float
    d: int
    rho: float


def precision_bounds(d: int, p: float, rho: float = 1.0) -> PrecisionBounds:
    upper = r_star_upper(d, p)
    return PrecisionBounds(max(upper, 0.0), r_star_lower(d, p, rho), p, d, rho)


def _d_factor(d: int, p: float) -> float:
    """Dimension factor of the unquantized rate: d^(1/2-1/p) or sqrt(log2 d)."""
    if p >= 2:
        return d ** (0.5 - inv(p))
    return math.sqrt(math.log2(d))


def benchmark_u(T: int, p: float, d: int, D: float, B: float, c1: float = 1.0) -> float:
    """Target accuracy ``U(T, p)`` the quantized method must match."""
    if T < 1:
        raise ContractError("T must be >= 1")
    return 4 * c1 * _d_factor(d, p) * D * B / math.sqrt(T)


def baseline_rate(T: int, p: float, d: int, D: float, B: float,
                  c0: float = 1.0, c1: float = 1.0) -> tuple:
    """(lower, upper) bracket on the unquantized minimax error."""
    if T < 1:
        raise ContractError("T must be >= 1")
    scale = D * B / math.sqrt(T)
    if p >= 2:
        f = d ** (0.5 - inv(p))
        return c0 * f * scale, c1 * f * scale
    return c0 * scale, c1 * math.sqrt(math.log2(d)) * scale


def error_lower(T: int, r: int, p: float, d: int, D: float, B: float,
                c0: float = 1.0) -> float:
    """Lower bound on the minimax error with ``r``-bit gradients."""
    if r < 1:
        raise ContractError("r must be >= 1")
    if T < 1:
        raise ContractError("T must be >= 1")
    scale = c0 * D * B / math.sqrt(T)
    second = scale * math.sqrt(d / min(d, r))
    if p < 2:
        return second
    two_r = d if r >= d.bit_length() else min(d, 2 ** r)
    first = scale * d ** (0.5 - inv(p)) * math.sqrt(d / two_r)
    return max(first, second)


class Alpha0Estimate(NamedTuple):
    value: float
    stderr: float
    worst_input: np.ndarray


def admissible_inputs(d: int, p: float, B: float, rng, n_random: int = 4,
                      sparsities=None):
    """Candidate worst-case inputs on the l_q sphere of radius ``B``.

    Scaled basis vectors, flat sign vectors, sparse random vectors and dense
    random directions, all with ``||Y||_q == B``.
    """
    q = conjugate(p)
    out = []
    for i in range(min(d, 3)):
        e = np.zeros(d)
        e[i] = B
        out.append(e)
    flat = rng.choice([-1.0, 1.0], size=d)
    out.append(B * flat / lp_norm(flat, q))
    if sparsities is None:
        sparsities = sorted({2, max(2, int(math.sqrt(d))), max(2, d // 4)} & set(range(2, d + 1)))
    for m in sparsities:
        y = np.zeros(d)
        idx = rng.choice(d, size=m, replace=False)
        y[idx] = rng.standard_normal(m)
        out.append(B * y / lp_norm(y, q))
    for _ in range(n_random):
        y = rng.standard_normal(d)
        out.append(B * y / lp_norm(y, q))
    return out


def alpha0_estimate(quantizer, p: float, trials: int, rng,
                    inputs=None) -> Alpha0Estimate:
    """Monte Carlo lower estimate of ``alpha_0(Q; p)``.

    For each candidate input the root second moment of ``Q(Y)`` is
    estimated from ``trials`` draws (l_2 norm for ``p >= 2``, l_q norm for
    ``p < 2``); the largest value is returned with its standard error.
    """
    if trials < 1:
        raise ContractError("trials must be >= 1")
    norm_ord = 2.0 if p >= 2 else conjugate(p)
    if inputs is None:
        inputs = admissible_inputs(quantizer.d, p, quantizer.B, rng)
    best = None
    for y in inputs:
        sq = np.array([lp_norm(quantizer.quantize(y, rng), norm_ord) ** 2
                       for _ in range(trials)])
        mean = float(sq.mean())
        se_mean = float(sq.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        value = math.sqrt(mean)
        se = se_mean / (2 * value) if value > 0 else 0.0
        if best is None or value > best.value:
            best = Alpha0Estimate(value, se, np.asarray(y))
    return best

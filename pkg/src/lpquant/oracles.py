"""Stochastic first-order oracles with known optima.

Every oracle returns unbiased subgradient estimates whose l_q norm is at
most ``B`` on every draw. The two linear families are the hard instances
used in minimax lower bounds; the finite-sum family is a generic
admissible test problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import ContractError
from .norms import NORM_RTOL, conjugate, inv, lp_norm
from .optimizers import Domain

__all__ = [
    "HardInstanceParams",
    "OracleInstance",
    "LinearOracle",
    "FiniteSumAbsOracle",
    "paninski_oracle",
    "bernoulli_product_oracle",
    "linear_oracle",
    "finite_sum_abs_oracle",
    "random_alpha",
    "make_oracle",
]


@dataclass(frozen=True)
class HardInstanceParams:
    """Sign pattern ``alpha``, bias ``delta``, diameter ``D``, bound ``B`` and geometry ``p``."""

    alpha: tuple
    delta: float
    D: float
    B: float
    p: float

    def __post_init__(self):
        alpha = tuple(int(a) for a in np.asarray(self.alpha).ravel())
        if not alpha or any(a not in (-1, 1) for a in alpha):
            raise ContractError("alpha must be a nonempty vector of +-1")
        if not 0 < self.delta <= 0.5:
            raise ContractError(f"delta={self.delta} must lie in (0, 1/2]")
        if not self.D > 0 or not self.B > 0 or not self.p >= 1:
            raise ContractError("need D > 0, B > 0, p >= 1")
        object.__setattr__(self, "alpha", alpha)

    @property
    def d(self) -> int:
        return len(self.alpha)

    @property
    def half_width(self) -> float:
        return self.D / (2 * self.d ** inv(self.p))

    def box(self) -> Domain:
        return Domain.box(self.d, self.half_width)


def random_alpha(d: int, rng) -> np.ndarray:
    return rng.choice(np.array([-1, 1]), size=d)


class OracleInstance:
    """A convex objective, its stochastic subgradient sampler and its optimum."""

    name = "oracle"

    def __init__(self, d: int, p: float, B: float, domain: Domain):
        self.d = d
        self.p = float(p)
        self.B = float(B)
        self.domain = domain
        self._f_star = {}

    @property
    def q(self) -> float:
        return conjugate(self.p)

    @property
    def D(self) -> float:
        """l_p diameter of the instance's own domain."""
        return self.domain.diameter(self.p)

    def f(self, x) -> float:
        raise NotImplementedError

    def sample(self, x, rng) -> np.ndarray:
        raise NotImplementedError

    def mean_subgradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def _solve(self, domain: Domain) -> float:
        raise NotImplementedError

    def f_star(self, domain: Optional[Domain] = None) -> float:
        """Minimum of ``f`` over ``domain`` (default: the instance's own)."""
        domain = self.domain if domain is None else domain
        if domain not in self._f_star:
            self._f_star[domain] = self._solve(domain)
        return self._f_star[domain]

    def descriptor(self) -> dict:
        return {"family": self.name, "d": self.d, "p": self.p, "B": self.B}


class LinearOracle(OracleInstance):
    """``f(x) = <mean, x>`` with a user-supplied unbiased sampler."""

    name = "linear"

    def __init__(self, mean, p, B, domain, sampler=None, params=None):
        mean = np.asarray(mean, dtype=np.float64)
        super().__init__(mean.size, p, B, domain)
        self.mean = mean
        self._sampler = sampler
        self.params = params

    def f(self, x) -> float:
        return float(self.mean @ np.asarray(x, dtype=np.float64))

    def mean_subgradient(self, x) -> np.ndarray:
        return self.mean.copy()

    def sample(self, x, rng) -> np.ndarray:
        if self._sampler is None:
            return self.mean.copy()
        return self._sampler(rng)

    def x_star(self, domain: Optional[Domain] = None) -> np.ndarray:
        return (self.domain if domain is None else domain).linear_min(self.mean)[1]

    def _solve(self, domain):
        return domain.linear_min(self.mean)[0]

    def with_domain(self, domain: Domain) -> "LinearOracle":
        out = LinearOracle(self.mean, self.p, self.B, domain, self._sampler, self.params)
        out.name = self.name
        return out

    def descriptor(self) -> dict:
        desc = super().descriptor()
        if self.params is not None:
            desc.update(delta=self.params.delta, D=self.params.D,
                        alpha=list(self.params.alpha))
        return desc


def paninski_oracle(params: HardInstanceParams) -> LinearOracle:
    """Outputs ``+-B e_i`` with probabilities ``(1 +- 2 delta alpha_i) / 2d``."""
    d, B, delta = params.d, params.B, params.delta
    alpha = np.asarray(params.alpha, dtype=np.float64)
    p_plus = (1 + 2 * delta * alpha) / 2

    def sampler(rng):
        i = rng.integers(d)
        g = np.zeros(d)
        g[i] = B if rng.random() < p_plus[i] else -B
        return g

    oracle = LinearOracle(2 * B * delta / d * alpha, params.p, B, params.box(), sampler, params)
    oracle.name = "paninski"
    return oracle


def bernoulli_product_oracle(params: HardInstanceParams) -> LinearOracle:
    """Independent coordinates ``+-B / d^(1/q)`` with ``P(+) = (1 + 2 delta alpha_i) / 2``."""
    d, B, delta = params.d, params.B, params.delta
    alpha = np.asarray(params.alpha, dtype=np.float64)
    scale = B / d ** inv(conjugate(params.p))
    p_plus = (1 + 2 * delta * alpha) / 2

    def sampler(rng):
        return np.where(rng.random(d) < p_plus, scale, -scale)

    oracle = LinearOracle(2 * delta * scale * alpha, params.p, B, params.box(), sampler, params)
    oracle.name = "bernoulli"
    return oracle


def linear_oracle(g, p: float, domain: Domain) -> LinearOracle:
    """Noise-free oracle returning the constant gradient ``g``."""
    g = np.asarray(g, dtype=np.float64)
    return LinearOracle(g, p, lp_norm(g, conjugate(p)) or 1.0, domain)


class FiniteSumAbsOracle(OracleInstance):
    """``f(x) = mean_i |<a_i, x> - b_i|`` sampled one row at a time.

    ``f*`` is computed by convex programming (cvxpy), intended for ``d <= 32``.
    """

    name = "finite_sum_abs"

    def __init__(self, A, b, p: float, domain: Domain, B: Optional[float] = None):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        b = np.asarray(b, dtype=np.float64).ravel()
        if A.shape[0] != b.size:
            raise ContractError("A and b disagree on the number of rows")
        q = conjugate(p)
        row_norms = np.array([lp_norm(a, q) for a in A])
        if B is None:
            B = float(row_norms.max())
        if np.any(row_norms > B * (1 + NORM_RTOL)):
            raise ContractError(f"a row has l_q norm {row_norms.max():.6g} > B = {B}")
        super().__init__(A.shape[1], p, B, domain)
        self.A = A
        self.b = b
        self.f_star()

    def f(self, x) -> float:
        return float(np.mean(np.abs(self.A @ np.asarray(x, dtype=np.float64) - self.b)))

    def sample(self, x, rng) -> np.ndarray:
        i = rng.integers(self.A.shape[0])
        return np.sign(self.A[i] @ x - self.b[i]) * self.A[i]

    def mean_subgradient(self, x) -> np.ndarray:
        return np.mean(np.sign(self.A @ x - self.b)[:, None] * self.A, axis=0)

    def _solve(self, domain: Domain) -> float:
        import cvxpy as cp

        x = cp.Variable(self.d)
        r = domain.exponent
        norm = cp.norm(x, "inf") if math.isinf(r) else cp.pnorm(x, r)
        prob = cp.Problem(cp.Minimize(cp.sum(cp.abs(self.A @ x - self.b)) / self.A.shape[0]),
                          [norm <= domain.radius])
        prob.solve()
        # evaluate at the solver point pulled into the domain so f* is attained
        x_opt = np.asarray(x.value).ravel()
        if not domain.contains(x_opt):
            x_opt = x_opt * (domain.radius / lp_norm(x_opt, r))
        return min(self.f(x_opt), float(prob.value))


def finite_sum_abs_oracle(A, b, p: float, domain: Domain, B=None) -> FiniteSumAbsOracle:
    return FiniteSumAbsOracle(A, b, p, domain, B)


def make_oracle(family: str, d: int, p: float, B: float, D: float, delta: float,
                alpha=None, alpha_seed: int = 0) -> LinearOracle:
    """Build a hard instance from a config descriptor."""
    if alpha is None:
        alpha = random_alpha(d, np.random.Generator(np.random.Philox(alpha_seed)))
    params = HardInstanceParams(tuple(alpha), delta, D, B, p)
    if params.d != d:
        raise ContractError(f"alpha has length {params.d}, expected d={d}")
    if family == "paninski":
        return paninski_oracle(params)
    if family == "bernoulli":
        return bernoulli_product_oracle(params)
    raise ContractError(f"unknown oracle family {family!r}")

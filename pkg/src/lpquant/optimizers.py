"""Quantized first-order methods.

``psgd_run`` is projected subgradient descent (used for ``p >= 2``) and
``smd_run`` stochastic mirror descent with the mirror map
``psi(x) = ||x||_{p'}^2 / (p' - 1)`` (used for ``p in [1, 2)``). Both
optionally pass every oracle sample through a quantizer's encode/decode
round trip and return the averaged iterate.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import ConfigurationError, ContractError
from .norms import conjugate, inv, lp_norm

__all__ = [
    "Domain",
    "MirrorMap",
    "RunResult",
    "project",
    "bregman_project",
    "grad_psi",
    "grad_psi_star",
    "default_mirror_exponent",
    "make_streams",
    "check_configuration",
    "psgd_run",
    "smd_run",
]


@dataclass(frozen=True)
class Domain:
    """Centered l_r ball of the given radius; ``r = inf`` is a box, ``r = 2`` a Euclidean ball."""

    d: int
    radius: float
    exponent: float = 2.0

    def __post_init__(self):
        if self.d < 1 or not self.radius > 0 or not self.exponent >= 1:
            raise ContractError("Domain needs d >= 1, radius > 0, exponent >= 1")

    @classmethod
    def l2_ball(cls, d, radius):
        return cls(d, float(radius), 2.0)

    @classmethod
    def box(cls, d, half_width):
        return cls(d, float(half_width), math.inf)

    @classmethod
    def lp_ball(cls, d, radius, exponent):
        return cls(d, float(radius), float(exponent))

    @classmethod
    def with_diameter(cls, d, D, p, exponent):
        """l_r ball whose l_p diameter equals ``D``."""
        return cls(d, D / (2 * d ** max(0.0, inv(p) - inv(exponent))), float(exponent))

    @property
    def kind(self) -> str:
        if math.isinf(self.exponent):
            return "box"
        if self.exponent == 2:
            return "l2ball"
        return "lpball"

    def diameter(self, p: float) -> float:
        """``sup ||x - y||_p`` over the domain."""
        return 2 * self.radius * self.d ** max(0.0, inv(p) - inv(self.exponent))

    def contains(self, x, rtol: float = 1e-12) -> bool:
        return lp_norm(x, self.exponent) <= self.radius * (1 + rtol)

    def linear_min(self, g):
        """``(min <g, x>, argmin)`` over the domain."""
        g = np.asarray(g, dtype=np.float64)
        r = self.exponent
        dual = conjugate(r)
        gn = lp_norm(g, dual)
        x = np.zeros(self.d)
        if gn == 0:
            return 0.0, x
        if math.isinf(r):
            x = -self.radius * np.sign(g)
        elif r == 1:
            i = int(np.argmax(np.abs(g)))
            x[i] = -self.radius * np.sign(g[i])
        else:
            x = -self.radius * np.sign(g) * (np.abs(g) / gn) ** (dual - 1)
        return -self.radius * gn, x


def project(domain: Domain, x) -> np.ndarray:
    """Euclidean projection for boxes and l_2 balls; radial scaling otherwise."""
    x = np.asarray(x, dtype=np.float64)
    if math.isinf(domain.exponent):
        return np.clip(x, -domain.radius, domain.radius)
    return _radial(x, domain.radius, domain.exponent)


def _radial(x, radius, exponent):
    n = lp_norm(x, exponent)
    if n <= radius:
        return x
    return x * (radius / n)


@dataclass(frozen=True)
class MirrorMap:
    """``psi(x) = ||x||_{p'}^2 / (p' - 1)`` for ``p' in (1, 2]``."""

    exponent: float

    def __post_init__(self):
        if not 1 < self.exponent <= 2:
            raise ContractError(f"mirror exponent must lie in (1, 2], got {self.exponent}")

    @property
    def dual_exponent(self) -> float:
        return conjugate(self.exponent)

    def psi(self, x) -> float:
        return lp_norm(x, self.exponent) ** 2 / (self.exponent - 1)

    def bregman(self, x, y) -> float:
        """``psi(x) - psi(y) - <grad psi(y), x - y>``."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return self.psi(x) - self.psi(y) - float(grad_psi(y, self) @ (x - y))


def _duality_map(x, r):
    """``sign(x) |x|^(r-1) ||x||_r^(2-r)``; the gradient of ``||x||_r^2 / 2``."""
    x = np.asarray(x, dtype=np.float64)
    n = lp_norm(x, r)
    if n == 0:
        return np.zeros_like(x)
    # normalize first to avoid under/overflow in the powers
    return n * np.sign(x) * (np.abs(x) / n) ** (r - 1)


def grad_psi(x, mirror: MirrorMap) -> np.ndarray:
    return 2.0 / (mirror.exponent - 1) * _duality_map(x, mirror.exponent)


def grad_psi_star(z, mirror: MirrorMap) -> np.ndarray:
    return (mirror.exponent - 1) / 2.0 * _duality_map(z, mirror.dual_exponent)


def bregman_project(domain: Domain, y) -> np.ndarray:
    """Bregman projection onto an l_{p'} ball for the matching mirror map.

    Since the mirror map is a function of the norm, the projection is radial.
    """
    return _radial(np.asarray(y, dtype=np.float64), domain.radius, domain.exponent)


def default_mirror_exponent(p: float, d: int) -> float:
    """``max(p, 1 + 1/ln d)`` capped at 2."""
    return min(2.0, max(float(p), 1 + 1 / math.log(max(d, 3))))


@dataclass
class RunResult:
    x_bar: np.ndarray
    suboptimality: float
    bits_per_step: int
    step_size: float
    T: int
    seed: int
    algo: str
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def total_bits(self) -> int:
        return self.bits_per_step * self.T


def make_streams(seed: int):
    """Independent oracle and quantizer generators (Philox) for one run."""
    oracle_ss, quant_ss = np.random.SeedSequence(int(seed)).spawn(2)
    return (np.random.Generator(np.random.Philox(oracle_ss)),
            np.random.Generator(np.random.Philox(quant_ss)))


def check_configuration(oracle, quantizer, algo: str, domain: Optional[Domain] = None) -> None:
    """Raise :class:`ConfigurationError` listing every inconsistency."""
    problems = []
    if algo == "psgd" and not oracle.p >= 2:
        problems.append(f"psgd needs p >= 2, oracle has p={oracle.p}")
    if algo == "smd" and not 1 <= oracle.p < 2:
        problems.append(f"smd needs p in [1, 2), oracle has p={oracle.p}")
    if algo not in ("psgd", "smd"):
        problems.append(f"unknown algorithm {algo!r}")
    if domain is not None:
        if domain.d != oracle.d:
            problems.append(f"domain dimension {domain.d} != oracle dimension {oracle.d}")
        if algo == "smd" and not 1 < domain.exponent <= 2:
            problems.append("smd needs an l_p' ball domain with p' in (1, 2]")
    if quantizer is not None:
        if quantizer.d != oracle.d:
            problems.append(f"quantizer dimension {quantizer.d} != oracle dimension {oracle.d}")
        qp = getattr(quantizer, "p", math.inf)
        if qp != oracle.p:
            problems.append(f"quantizer is built for p={qp}, oracle has p={oracle.p}")
        if quantizer.B < oracle.B * (1 - 1e-12):
            problems.append(f"quantizer bound B={quantizer.B} < oracle bound B={oracle.B}")
    if problems:
        raise ConfigurationError(problems)


def _alpha0(quantizer, oracle) -> float:
    return oracle.B if quantizer is None else quantizer.alpha0


def _run(oracle, quantizer, domain, T, step_c, seed, algo, step_fn, step_size):
    orng, qrng = make_streams(seed)
    x = np.zeros(oracle.d)
    total = np.zeros(oracle.d)
    start = time.perf_counter()
    for _ in range(T):
        total += x
        g = oracle.sample(x, orng)
        if quantizer is not None:
            g = quantizer.quantize(g, qrng)
        x = step_fn(x, g)
    x_bar = total / T
    sub = oracle.f(x_bar) - oracle.f_star(domain)
    return RunResult(
        x_bar=x_bar,
        suboptimality=float(sub),
        bits_per_step=0 if quantizer is None else quantizer.width,
        step_size=step_size,
        T=T,
        seed=seed,
        algo=algo,
        wall_time=time.perf_counter() - start,
    )


def psgd_run(oracle, quantizer=None, T: int = 1000, *, domain: Optional[Domain] = None,
             step_c: float = 1.0, seed: int = 0) -> RunResult:
    """Projected subgradient descent from the domain center.

    Step size ``step_c * D2 / (alpha0 * sqrt(T))`` where ``D2`` is the l_2
    diameter of the domain and ``alpha0`` the quantizer's analytic bound
    (``B`` when unquantized).
    """
    domain = oracle.domain if domain is None else domain
    check_configuration(oracle, quantizer, "psgd", domain)
    if T < 1:
        raise ContractError("T must be >= 1")
    eta = step_c * domain.diameter(2) / (_alpha0(quantizer, oracle) * math.sqrt(T))

    def step(x, g):
        return project(domain, x - eta * g)

    return _run(oracle, quantizer, domain, T, step_c, seed, "psgd", step, eta)


def smd_run(oracle, quantizer=None, T: int = 1000, *, domain: Optional[Domain] = None,
            step_c: float = 1.0, seed: int = 0) -> RunResult:
    """Stochastic mirror descent over an l_{p'} ball with the matching mirror map.

    Step size ``step_c * D / (alpha0 * sqrt(T))`` with ``D`` the l_{p'}
    diameter of the domain. Without an explicit domain the l_{p'} ball with
    ``p' = default_mirror_exponent(p, d)`` and the oracle's l_p diameter is used.
    """
    if domain is None:
        pp = default_mirror_exponent(oracle.p, oracle.d)
        domain = Domain.with_diameter(oracle.d, oracle.D, oracle.p, pp)
    check_configuration(oracle, quantizer, "smd", domain)
    if T < 1:
        raise ContractError("T must be >= 1")
    mirror = MirrorMap(domain.exponent)
    eta = step_c * domain.diameter(domain.exponent) / (_alpha0(quantizer, oracle) * math.sqrt(T))

    def step(x, g):
        z = grad_psi(x, mirror) - eta * g
        return bregman_project(domain, grad_psi_star(z, mirror))

    return _run(oracle, quantizer, domain, T, step_c, seed, "smd", step, eta)

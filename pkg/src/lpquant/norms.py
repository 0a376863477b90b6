"""Small helpers for l_p geometry."""

import math

import numpy as np

from .exceptions import ContractError

# Relative slack allowed on norm preconditions before an input is rejected.
NORM_RTOL = 1e-9


def conjugate(p: float) -> float:
    """Hoelder conjugate ``p / (p - 1)`` with ``1 <-> inf``."""
    p = float(p)
    if p < 1:
        raise ContractError(f"p={p} must be >= 1")
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def inv(p: float) -> float:
    """``1/p`` with ``1/inf == 0``."""
    return 0.0 if math.isinf(p) else 1.0 / p


def lp_norm(x, p: float) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=np.float64).ravel(), ord=p))


def check_norm(x, p: float, bound: float, what: str = "input", exc=ContractError) -> float:
    """Return ``||x||_p`` or raise ``exc`` when it exceeds ``bound`` beyond tolerance."""
    norm = lp_norm(x, p)
    if norm > bound * (1.0 + NORM_RTOL):
        raise exc(f"{what} has l_{p} norm {norm:.6g} > bound {bound:.6g}")
    return norm


def ceil_tol(x: float) -> int:
    """Ceiling that ignores floating-point excess below 1e-9 (relative)."""
    return math.ceil(x - 1e-9 * max(1.0, abs(x)))

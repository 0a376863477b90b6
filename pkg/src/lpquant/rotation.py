"""Randomized Hadamard rotation with zero padding.

The rotation is ``R = H diag(eps) / sqrt(n)`` where ``H`` is the Sylvester
Hadamard matrix and ``eps`` a Rademacher diagonal drawn from a shared
seed. Encoder and decoder rebuild the same diagonal from the seed alone.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .exceptions import ContractError

__all__ = ["padded_dim", "sign_diagonal", "fwht", "rotate", "unrotate"]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def padded_dim(n: int) -> int:
    """Smallest power of two ``>= n`` (1 for ``n <= 1``)."""
    if n < 0:
        raise ContractError("dimension must be nonnegative")
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


def sign_diagonal(seed: int, dim: int) -> np.ndarray:
    """Rademacher vector of length ``dim`` determined by ``seed`` (read-only)."""
    if not _is_power_of_two(dim):
        raise ContractError(f"dim={dim} is not a power of two")
    return _sign_diagonal(int(seed) & (2**64 - 1), dim)


# encode and decode of one message ask for the same diagonal back to back
@lru_cache(maxsize=8)
def _sign_diagonal(seed: int, dim: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seed))
    out = rng.integers(0, 2, size=dim).astype(np.float64) * 2.0 - 1.0
    out.setflags(write=False)
    return out


def fwht(v, normalized: bool = True) -> np.ndarray:
    """Fast Walsh-Hadamard transform in Sylvester order.

    With ``normalized=True`` the transform is scaled by ``1/sqrt(n)`` and
    is then an orthonormal involution.
    """
    x = np.array(v, dtype=np.float64)
    n = x.shape[-1]
    if not _is_power_of_two(n):
        raise ContractError(f"length {n} is not a power of two")
    lead = x.shape[:-1]
    h = 1
    while h < n:
        view = x.reshape(*lead, n // (2 * h), 2, h)
        a = view[..., 0, :].copy()
        view[..., 0, :] += view[..., 1, :]
        view[..., 1, :] = a - view[..., 1, :]
        h *= 2
    if normalized:
        x /= np.sqrt(n)
    return x


def rotate(v, seed: int) -> np.ndarray:
    """Zero-pad ``v`` to a power of two, flip signs by the seed, apply ``H/sqrt(n)``."""
    v = np.asarray(v, dtype=np.float64)
    dim = padded_dim(v.size)
    padded = np.zeros(dim)
    padded[:v.size] = v
    return fwht(padded * sign_diagonal(seed, dim))


def unrotate(w, seed: int, original_n: int) -> np.ndarray:
    """Invert :func:`rotate` and drop the padding."""
    w = np.asarray(w, dtype=np.float64)
    dim = padded_dim(original_n)
    if w.size != dim:
        raise ContractError(f"expected {dim} rotated coordinates, got {w.size}")
    return (fwht(w) * sign_diagonal(seed, dim))[:original_n]

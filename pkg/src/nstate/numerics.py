"""Numeric foundations: seeded random streams and the finite-difference oracle.

Arrays throughout the package are plain C-order ``numpy.ndarray`` objects.
Training runs in 32-bit floats; verification (gradient checking) runs in
64-bit. Random draws always come from explicitly keyed Philox streams, a
counter-based generator whose output is identical on every platform, so any
pipeline stage can be replayed bit-for-bit from its seed.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

TRAIN_DTYPE = np.float32
VERIFY_DTYPE = np.float64

_MASK64 = (1 << 64) - 1


class GradientOracleError(RuntimeError):
    """The probed function returned a non-finite value."""


def seeded_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Return a generator keyed by ``(seed, stream)``.

    The same pair always yields the same sequence; distinct stream ids give
    statistically independent sequences for the same seed, which is how
    weight init, shuffling, dropout masks and synthetic data stay decoupled.
    """
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def mix64(x: int) -> int:
    """SplitMix64 avalanche hash; used to derive per-fold seeds."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Deterministic child seed: ``seed XOR mix64(index)``."""
    return (seed ^ mix64(index)) & _MASK64


def finite_diff_grad(
    f: Callable[[np.ndarray], float], x: np.ndarray, eps: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient of a scalar function, element by element.

    ``f`` must be pure. ``x`` is evaluated in 64-bit precision; ``eps=1e-5``
    balances truncation against roundoff for unit-scale values.
    """
    x = np.array(x, dtype=VERIFY_DTYPE)
    if not np.isfinite(f(x)):
        raise GradientOracleError("function is non-finite at the base point")
    grad = np.zeros_like(x)
    flat_x = x.reshape(-1)
    flat_g = grad.reshape(-1)
    for i in range(flat_x.size):
        orig = flat_x[i]
        flat_x[i] = orig + eps
        f_plus = f(x)
        flat_x[i] = orig - eps
        f_minus = f(x)
        flat_x[i] = orig
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise GradientOracleError(f"non-finite probe at element {i}")
        flat_g[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad


def rel_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> float:
    """Worst elementwise relative error with denominator max(|a|, |b|, floor)."""
    a = np.asarray(a, dtype=VERIFY_DTYPE)
    b = np.asarray(b, dtype=VERIFY_DTYPE)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0

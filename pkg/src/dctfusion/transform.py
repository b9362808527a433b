"""Orthonormal 8x8 DCT-II as a pair of dense matrix products.

All functions accept a single ``(8, 8)`` block or any stack ``(..., 8, 8)``;
the transform is applied to the trailing two axes.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

BLOCK = 8


@dataclass(frozen=True)
class DctBasis:
    """Cosine basis ``c`` (rows are basis vectors) and its transpose."""

    c: np.ndarray
    c_t: np.ndarray


@lru_cache(maxsize=None)
def make_dct_basis() -> DctBasis:
    """Build the orthonormal DCT-II matrix.

    Entry ``(k, n)`` is ``alpha(k) * cos((2n + 1) k pi / 16)`` with
    ``alpha(0) = 1/sqrt(8)`` and ``alpha(k) = 1/2`` otherwise.  The result is
    cached and read-only, so it can be shared freely.
    """
    k = np.arange(BLOCK)[:, None]
    n = np.arange(BLOCK)[None, :]
    c = np.cos((2 * n + 1) * k * np.pi / (2 * BLOCK)) * np.sqrt(2.0 / BLOCK)
    c[0, :] = 1.0 / np.sqrt(BLOCK)
    c_t = np.ascontiguousarray(c.T)
    c.flags.writeable = False
    c_t.flags.writeable = False
    return DctBasis(c=c, c_t=c_t)


def dct_forward(b: np.ndarray, basis: DctBasis | None = None) -> np.ndarray:
    """``B = C b C^t``."""
    basis = basis or make_dct_basis()
    return basis.c @ np.asarray(b, dtype=np.float64) @ basis.c_t


def dct_inverse(coeffs: np.ndarray, basis: DctBasis | None = None) -> np.ndarray:
    """``b = C^t B C``."""
    basis = basis or make_dct_basis()
    return basis.c_t @ np.asarray(coeffs, dtype=np.float64) @ basis.c


def frobenius_trace(x: np.ndarray) -> np.ndarray | float:
    """Sum of squared entries, evaluated as ``trace(x x^t)``.

    Stacks return one value per matrix.
    """
    x = np.asarray(x, dtype=np.float64)
    gram = x @ np.swapaxes(x, -1, -2)
    out = np.trace(gram, axis1=-2, axis2=-1)
    return float(out) if np.ndim(out) == 0 else out

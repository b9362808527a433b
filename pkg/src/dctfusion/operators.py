"""Laplacian operator matrices for 8x8 blocks, in pixel and coefficient domains.

The 3x3 mask

    -1  -4  -1
    -4  +20 -4
    -1  -4  -1

applied over the 6x6 valid region of a block ``b`` is reproduced by the matrix
form ``m b n + d b e``: ``m``/``d`` pick the row window, ``n``/``e`` carry the
column weights.  Output lands in the top-left 6x6 of an 8x8 matrix.

Lifting each operator with ``o -> C o C^t`` gives coefficient-side matrices
for which ``M B N + D B E = C (m b n + d b e) C^t`` whenever ``B = C b C^t``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .transform import BLOCK, DctBasis, make_dct_basis

MASK = np.array([[-1.0, -4.0, -1.0],
                 [-4.0, 20.0, -4.0],
                 [-1.0, -4.0, -1.0]])
MASK.flags.writeable = False

VALID = BLOCK - 2


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class OperatorSet:
    m: np.ndarray
    n: np.ndarray
    d: np.ndarray
    e: np.ndarray
    m_dct: np.ndarray | None = field(default=None)
    n_dct: np.ndarray | None = field(default=None)
    d_dct: np.ndarray | None = field(default=None)
    e_dct: np.ndarray | None = field(default=None)

    @property
    def lifted(self) -> bool:
        return self.m_dct is not None


def build_spatial_operators() -> OperatorSet:
    m = np.zeros((BLOCK, BLOCK))
    n = np.zeros((BLOCK, BLOCK))
    d = np.zeros((BLOCK, BLOCK))
    e = np.zeros((BLOCK, BLOCK))
    for i in range(VALID):
        # rows x-1 and x+1 of the window (outer mask rows)
        m[i, i] = 1.0
        m[i, i + 2] = 1.0
        # row x of the window (middle mask row)
        d[i, i + 1] = 1.0
        n[i:i + 3, i] = MASK[0]
        # +20 centre weight; printed as -20 in the source derivation
        e[i:i + 3, i] = MASK[1]
    return OperatorSet(m=_frozen(m), n=_frozen(n), d=_frozen(d), e=_frozen(e))


def lift_to_dct(ops: OperatorSet, basis: DctBasis | None = None) -> OperatorSet:
    basis = basis or make_dct_basis()

    def lift(o):
        return _frozen(basis.c @ o @ basis.c_t)

    return OperatorSet(
        m=ops.m, n=ops.n, d=ops.d, e=ops.e,
        m_dct=lift(ops.m), n_dct=lift(ops.n),
        d_dct=lift(ops.d), e_dct=lift(ops.e),
    )


@lru_cache(maxsize=None)
def default_operators() -> OperatorSet:
    """Fully built operator set for the standard basis (cached)."""
    return lift_to_dct(build_spatial_operators(), make_dct_basis())


def laplacian_matrix_form(b: np.ndarray, ops: OperatorSet | None = None) -> np.ndarray:
    """Pixel-domain Laplacian via ``m b n + d b e``."""
    ops = ops or default_operators()
    b = np.asarray(b, dtype=np.float64)
    return ops.m @ b @ ops.n + ops.d @ b @ ops.e


def laplacian_dct(coeffs: np.ndarray, ops: OperatorSet | None = None) -> np.ndarray:
    """Coefficient-domain Laplacian ``M B N + D B E`` of one block or a stack."""
    ops = ops or default_operators()
    if not ops.lifted:
        raise ValueError("operator set has not been lifted to the DCT domain")
    coeffs = np.asarray(coeffs, dtype=np.float64)
    return ops.m_dct @ coeffs @ ops.n_dct + ops.d_dct @ coeffs @ ops.e_dct


def laplacian_spatial(b: np.ndarray) -> np.ndarray:
    """Reference Laplacian by sliding the 3x3 mask over the block.

    Deliberately loop-based; this is the oracle the matrix forms are checked
    against.  Returns an 8x8 matrix with the 6x6 valid response top-left.
    """
    b = np.asarray(b, dtype=np.float64)
    out = np.zeros(b.shape[:-2] + (BLOCK, BLOCK))
    for i in range(VALID):
        for j in range(VALID):
            acc = 0.0
            for u in range(3):
                for v in range(3):
                    acc = acc + MASK[u, v] * b[..., i + u, j + v]
            out[..., i, j] = acc
    return out

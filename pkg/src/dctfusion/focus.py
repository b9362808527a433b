"""Per-block focus measures: energy of Laplacian, variance of Laplacian, variance.

The ``*_dct`` functions work on DCT coefficient blocks (or stacks of them) and
never leave the coefficient domain.  The ``*_spatial`` functions compute the
same statistics from pixels and exist as oracles.
"""
from __future__ import annotations

import enum

import numpy as np

from .operators import OperatorSet, laplacian_dct, laplacian_spatial
from .transform import BLOCK, frobenius_trace

_NPIX = BLOCK * BLOCK


class Metric(str, enum.Enum):
    EOL = "eol"
    VOL = "vol"
    VARIANCE = "variance"
    AVERAGE = "average"


def _clamp(x):
    out = np.maximum(x, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def eol_dct(coeffs: np.ndarray, ops: OperatorSet | None = None):
    """``trace((Q + P)(Q + P)^t)`` with ``Q + P`` the coefficient-domain Laplacian."""
    return _clamp(frobenius_trace(laplacian_dct(coeffs, ops)))


def variance_dct(coeffs: np.ndarray):
    """Pixel variance of a block read straight off its coefficients.

    With the orthonormal basis the DC term is ``8 * mean`` and the sum of
    squared coefficients equals the sum of squared pixels, so the variance is
    ``(sum(B**2) - B[0, 0]**2) / 64``.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    energy = np.sum(coeffs * coeffs, axis=(-2, -1))
    dc = coeffs[..., 0, 0]
    return _clamp((energy - dc * dc) / _NPIX)


def vol_dct(coeffs: np.ndarray, ops: OperatorSet | None = None):
    return variance_dct(laplacian_dct(coeffs, ops))


def score_dct(coeffs: np.ndarray, metric: Metric | str, ops: OperatorSet | None = None):
    metric = Metric(metric)
    if metric is Metric.EOL:
        return eol_dct(coeffs, ops)
    if metric is Metric.VOL:
        return vol_dct(coeffs, ops)
    if metric is Metric.VARIANCE:
        return variance_dct(coeffs)
    raise ValueError(f"metric {metric.value!r} has no focus score")


# --- spatial oracles -------------------------------------------------------

def eol_spatial(b: np.ndarray):
    lap = laplacian_spatial(b)
    return _clamp(np.sum(lap * lap, axis=(-2, -1)))


def variance_spatial(b: np.ndarray):
    b = np.asarray(b, dtype=np.float64)
    mean = b.mean(axis=(-2, -1), keepdims=True)
    return _clamp(np.mean((b - mean) ** 2, axis=(-2, -1)))


def vol_spatial(b: np.ndarray):
    # variance over the full zero-padded 8x8 field, structural zeros included
    return variance_spatial(laplacian_spatial(b))

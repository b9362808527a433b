"""Randomised cross-check of every coefficient-domain formula against its pixel oracle."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import focus
from .operators import default_operators, laplacian_dct, laplacian_matrix_form, laplacian_spatial
from .transform import dct_forward, dct_inverse, make_dct_basis


@dataclass
class Check:
    name: str
    max_deviation: float
    first_failure: int | None = None


@dataclass
class SelfCheckResult:
    blocks: int
    seed: int
    tol: float
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.first_failure is None for c in self.checks)

    @property
    def first_failed(self) -> Check | None:
        return next((c for c in self.checks if c.first_failure is not None), None)


def random_blocks(n: int, seed: int) -> np.ndarray:
    """``n`` blocks of uniform integer pixels in [0, 255] from numpy's PCG64."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(n, 8, 8)).astype(np.float64)


def _relative(got: np.ndarray, want: np.ndarray) -> np.ndarray:
    got = np.asarray(got, dtype=np.float64)
    want = np.asarray(want, dtype=np.float64)
    return np.abs(got - want) / np.maximum(1.0, np.abs(want))


def _record(result: SelfCheckResult, name: str, dev: np.ndarray) -> None:
    # dev has one entry per block
    bad = np.flatnonzero(dev > result.tol)
    result.checks.append(Check(name, float(dev.max()), int(bad[0]) if bad.size else None))


def run_selfcheck(blocks: int = 10_000, seed: int = 42, tol: float = 1e-6) -> SelfCheckResult:
    if blocks < 1:
        raise ValueError("need at least one block")
    basis = make_dct_basis()
    ops = default_operators()
    b = random_blocks(blocks, seed)
    coeffs = dct_forward(b, basis)
    result = SelfCheckResult(blocks, seed, tol)

    _record(result, "eol", _relative(focus.eol_dct(coeffs, ops), focus.eol_spatial(b)))
    _record(result, "vol", _relative(focus.vol_dct(coeffs, ops), focus.vol_spatial(b)))
    _record(result, "variance", _relative(focus.variance_dct(coeffs), focus.variance_spatial(b)))

    energy = np.sum(b * b, axis=(1, 2))
    _record(result, "parseval", _relative(np.sum(coeffs * coeffs, axis=(1, 2)), energy))

    _record(result, "round_trip", np.abs(dct_inverse(coeffs, basis) - b).max(axis=(1, 2)))

    lap_pix = laplacian_spatial(b)
    _record(result, "matrix_form",
            np.abs(laplacian_matrix_form(b, ops) - lap_pix).max(axis=(1, 2)))
    lifted = dct_forward(lap_pix, basis)
    scale = np.maximum(1.0, np.abs(lifted).max(axis=(1, 2)))
    _record(result, "operator_lift",
            np.abs(laplacian_dct(coeffs, ops) - lifted).max(axis=(1, 2)) / scale)
    return result

"""Block-selection fusion: tile, score, decide, verify, assemble."""
from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import ndimage

from .focus import Metric, score_dct
from .operators import OperatorSet, default_operators
from .transform import BLOCK, DctBasis, dct_forward, dct_inverse, make_dct_basis

TIE = 0
"""Label for an undecided tile in a two-source map (``+1`` = A, ``-1`` = B)."""

MULTI_TIE = -1
"""Label for an undecided tile in a map over more than two sources."""

SCORE_RTOL = 1e-9


class TiePolicy(str, enum.Enum):
    AVERAGE = "average"
    FIRST = "first"


class PadPolicy(str, enum.Enum):
    EDGE_REPLICATE = "edge"


@dataclass(frozen=True)
class FusionConfig:
    metric: Metric = Metric.VOL
    cv_enabled: bool = False
    cv_window: int = 5
    tie_policy: TiePolicy = TiePolicy.AVERAGE
    pad_policy: PadPolicy = PadPolicy.EDGE_REPLICATE

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(self.metric))
        object.__setattr__(self, "tie_policy", TiePolicy(self.tie_policy))
        object.__setattr__(self, "pad_policy", PadPolicy(self.pad_policy))
        _check_window(self.cv_window)

    @property
    def name(self) -> str:
        label = "DCT+" + self.metric.value.upper()
        if self.metric is Metric.VARIANCE:
            label = "DCT+Variance"
        elif self.metric is Metric.AVERAGE:
            label = "DCT+Average"
        return label + ("+CV" if self.cv_enabled else "")


def _check_window(window: int) -> None:
    if int(window) != window or window < 3 or window % 2 == 0:
        raise ValueError(f"consistency window must be an odd integer >= 3, got {window!r}")


@dataclass(frozen=True)
class BlockGrid:
    """An image cut into 8x8 tiles.

    ``blocks`` has shape ``(rows, cols, 8, 8)``; ``domain`` says whether the
    tiles hold pixels or DCT coefficients.
    """

    blocks: np.ndarray
    original_width: int
    original_height: int
    pad_right: int
    pad_bottom: int
    domain: str = "spatial"

    @property
    def rows(self) -> int:
        return self.blocks.shape[0]

    @property
    def cols(self) -> int:
        return self.blocks.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols


@dataclass(frozen=True)
class DecisionMap:
    """Per-tile source choice.

    Two sources use labels ``+1`` (first), ``-1`` (second) and ``0`` (tie).
    More sources use the source index, with ``MULTI_TIE`` for a tie; ``tied``
    then marks, per source, which ones share the best score.
    """

    labels: np.ndarray
    n_sources: int = 2
    tied: np.ndarray | None = None

    @property
    def rows(self) -> int:
        return self.labels.shape[0]

    @property
    def cols(self) -> int:
        return self.labels.shape[1]

    def source_index(self) -> np.ndarray:
        """Chosen source per tile, ``-1`` where undecided."""
        if self.n_sources == 2:
            return np.select([self.labels == 1, self.labels == -1], [0, 1], -1)
        return self.labels.astype(np.int64)

    def tie_candidates(self) -> np.ndarray:
        """Boolean ``(n_sources, rows, cols)`` mask of sources eligible on a tie."""
        if self.tied is not None:
            return self.tied
        return np.ones((self.n_sources,) + self.labels.shape, dtype=bool)


# --- tiling ----------------------------------------------------------------

def tile(image: np.ndarray) -> BlockGrid:
    """Pad by edge replication to multiples of 8 and split into tiles."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale raster, got shape {image.shape}")
    h, w = image.shape
    if h < 1 or w < 1:
        raise ValueError(f"image must be at least 1x1, got {w}x{h}")
    pad_b = -h % BLOCK
    pad_r = -w % BLOCK
    padded = np.pad(image.astype(np.float64), ((0, pad_b), (0, pad_r)), mode="edge")
    rows, cols = padded.shape[0] // BLOCK, padded.shape[1] // BLOCK
    blocks = padded.reshape(rows, BLOCK, cols, BLOCK).swapaxes(1, 2)
    return BlockGrid(np.ascontiguousarray(blocks), w, h, pad_r, pad_b)


def untile(grid: BlockGrid) -> np.ndarray:
    """Stitch spatial tiles back together and crop the padding (float output)."""
    if grid.domain != "spatial":
        raise ValueError("untile expects a spatial-domain grid")
    full = grid.blocks.swapaxes(1, 2).reshape(grid.rows * BLOCK, grid.cols * BLOCK)
    return full[:grid.original_height, :grid.original_width]


def to_dct(grid: BlockGrid, basis: DctBasis | None = None) -> BlockGrid:
    if grid.domain == "dct":
        return grid
    return replace(grid, blocks=dct_forward(grid.blocks, basis), domain="dct")


def to_spatial(grid: BlockGrid, basis: DctBasis | None = None) -> BlockGrid:
    if grid.domain == "spatial":
        return grid
    return replace(grid, blocks=dct_inverse(grid.blocks, basis), domain="spatial")


def quantize(x: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round half away from zero to uint8."""
    # snap transform round-off (~1e-12) so exact halves round up
    x = np.round(np.clip(x, 0.0, 255.0), 6)
    return np.floor(x + 0.5).astype(np.uint8)


# --- decision --------------------------------------------------------------

def _workers(n_tasks: int) -> int:
    env = os.environ.get("FUSE_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ValueError(f"FUSE_THREADS must be a positive integer, got {env!r}") from None
        if cap < 1:
            raise ValueError(f"FUSE_THREADS must be a positive integer, got {env!r}")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


def _check_grids(grids: Sequence[BlockGrid]) -> None:
    first = grids[0]
    for g in grids[1:]:
        if g.shape != first.shape or (g.original_width, g.original_height) != (
            first.original_width, first.original_height
        ):
            raise ValueError(
                f"grid dimensions differ: {first.original_width}x{first.original_height} "
                f"vs {g.original_width}x{g.original_height}"
            )


def score_grid(grid: BlockGrid, metric: Metric | str, ops: OperatorSet | None = None) -> np.ndarray:
    """Focus score of every tile, shape ``(rows, cols)``."""
    return np.asarray(score_dct(to_dct(grid).blocks, metric, ops), dtype=np.float64)


def score_grids(grids: Sequence[BlockGrid], metric: Metric | str,
                ops: OperatorSet | None = None) -> np.ndarray:
    metric = Metric(metric)
    if metric is Metric.AVERAGE:
        raise ValueError("the average baseline does not build a decision map")
    ops = ops or default_operators()
    with ThreadPoolExecutor(max_workers=_workers(len(grids))) as pool:
        scores = list(pool.map(lambda g: score_grid(g, metric, ops), grids))
    return np.stack(scores)


def decide(grid_a: BlockGrid, grid_b: BlockGrid, metric: Metric | str,
           ops: OperatorSet | None = None) -> DecisionMap:
    """Two-source decision map by strict comparison of focus scores."""
    _check_grids([grid_a, grid_b])
    scores = score_grids([grid_a, grid_b], metric, ops)
    return decision_from_scores(scores)


def decide_many(grids: Sequence[BlockGrid], metric: Metric | str,
                ops: OperatorSet | None = None) -> DecisionMap:
    if len(grids) < 2:
        raise ValueError("need at least two sources")
    _check_grids(grids)
    return decision_from_scores(score_grids(grids, metric, ops))


def decision_from_scores(scores: np.ndarray, rel_tol: float = SCORE_RTOL) -> DecisionMap:
    """Label tiles from stacked scores of shape ``(n_sources, rows, cols)``.

    Scores within ``rel_tol`` of each other (relative to ``max(1, score)``)
    count as equal, so transform round-off cannot split a genuine tie.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    best = scores.max(axis=0)
    tol = rel_tol * np.maximum(1.0, np.abs(best))
    if n == 2:
        diff = scores[0] - scores[1]
        labels = np.where(np.abs(diff) <= tol, 0, np.sign(diff)).astype(np.int8)
        return DecisionMap(labels, 2)
    tied = scores >= best - tol
    unique = tied.sum(axis=0) == 1
    labels = np.where(unique, np.argmax(scores, axis=0), MULTI_TIE).astype(np.int64)
    return DecisionMap(labels, n, tied)


def consistency_verify(dmap: DecisionMap, window: int = 5) -> DecisionMap:
    """Majority filter over a ``window x window`` neighbourhood of tiles.

    Each tile takes the label held by most of its in-bounds neighbours
    (ties excluded from the vote).  If no label has a strict plurality the
    tile keeps its own.  For two sources this is the sign of the windowed
    mean of the +1/0/-1 labels.
    """
    _check_window(window)
    kernel = np.ones((window, window), dtype=np.int64)
    if dmap.n_sources == 2:
        total = ndimage.correlate(dmap.labels.astype(np.int64), kernel, mode="constant", cval=0)
        labels = np.where(total != 0, np.sign(total), dmap.labels).astype(np.int8)
        return DecisionMap(labels, 2)

    counts = np.stack([
        ndimage.correlate((dmap.labels == s).astype(np.int64), kernel, mode="constant", cval=0)
        for s in range(dmap.n_sources)
    ])
    top = counts.max(axis=0)
    winner = (counts == top).sum(axis=0) == 1
    winner &= top > 0
    labels = np.where(winner, np.argmax(counts, axis=0), dmap.labels).astype(np.int64)
    return DecisionMap(labels, dmap.n_sources, dmap.tied)


def window_disagreements(dmap: DecisionMap, window: int = 5) -> int:
    """Number of tiles whose label differs from a strict window majority."""
    verified = consistency_verify(dmap, window)
    return int(np.count_nonzero(verified.labels != dmap.labels))


# --- assembly --------------------------------------------------------------

def _select_coeffs(grids: Sequence[BlockGrid], dmap: DecisionMap,
                   tie_policy: TiePolicy) -> np.ndarray:
    stack = np.stack([to_dct(g).blocks for g in grids])  # (S, R, C, 8, 8)
    index = dmap.source_index()
    undecided = index < 0
    chosen = np.take_along_axis(stack, np.maximum(index, 0)[None, ..., None, None], axis=0)[0]
    if not undecided.any():
        return chosen
    cand = dmap.tie_candidates()
    if tie_policy is TiePolicy.FIRST:
        first = np.argmax(cand, axis=0)
        fallback = np.take_along_axis(stack, first[None, ..., None, None], axis=0)[0]
    else:
        w = cand.astype(np.float64)[..., None, None]
        fallback = (stack * w).sum(axis=0) / w.sum(axis=0)
    return np.where(undecided[..., None, None], fallback, chosen)


def assemble(grids: Sequence[BlockGrid], dmap: DecisionMap,
             tie_policy: TiePolicy | str = TiePolicy.AVERAGE,
             basis: DctBasis | None = None) -> np.ndarray:
    """Build the fused 8-bit raster from per-tile source choices."""
    tie_policy = TiePolicy(tie_policy)
    if len(grids) != dmap.n_sources:
        raise ValueError(f"map covers {dmap.n_sources} sources, got {len(grids)} grids")
    _check_grids(grids)
    if (dmap.rows, dmap.cols) != grids[0].shape:
        raise ValueError("decision map does not match grid dimensions")
    coeffs = _select_coeffs(grids, dmap, tie_policy)
    fused = replace(grids[0], blocks=dct_inverse(coeffs, basis), domain="spatial")
    return quantize(untile(fused))


def average_blocks(grids: Sequence[BlockGrid], basis: DctBasis | None = None) -> np.ndarray:
    """Per-tile mean of every source's coefficients."""
    _check_grids(grids)
    mean = np.mean(np.stack([to_dct(g, basis).blocks for g in grids]), axis=0)
    fused = replace(grids[0], blocks=dct_inverse(mean, basis), domain="spatial")
    return quantize(untile(fused))


# --- pipeline --------------------------------------------------------------

def _luminance(image: np.ndarray) -> np.ndarray:
    from .imaging import to_luminance
    return to_luminance(image)


def fuse(images: Sequence[np.ndarray], config: FusionConfig | None = None,
         ops: OperatorSet | None = None) -> tuple[np.ndarray, DecisionMap | None]:
    """Fuse two or more registered images of the same size.

    Grayscale inputs are ``(H, W)``; colour inputs ``(H, W, C)`` are decided
    on luminance and every channel takes the same tile choice.  Returns the
    fused uint8 raster and the decision map (``None`` for the average
    baseline).
    """
    config = config or FusionConfig()
    if len(images) < 2:
        raise ValueError(f"need at least two images, got {len(images)}")
    images = [np.asarray(im) for im in images]
    shape = images[0].shape
    for im in images[1:]:
        if im.shape != shape:
            raise ValueError(f"image dimensions differ: {shape} vs {im.shape}")
    if len(shape) not in (2, 3):
        raise ValueError(f"unsupported image shape {shape}")

    basis = make_dct_basis()
    ops = ops or default_operators()
    color = len(shape) == 3
    planes = [_luminance(im) for im in images] if color else images
    grids = [to_dct(tile(p), basis) for p in planes]

    if config.metric is Metric.AVERAGE:
        if not color:
            return average_blocks(grids, basis), None
        channels = [average_blocks([to_dct(tile(im[..., ch]), basis) for im in images], basis)
                    for ch in range(shape[2])]
        return np.stack(channels, axis=-1), None

    dmap = decide_many(grids, config.metric, ops)
    if config.cv_enabled:
        dmap = consistency_verify(dmap, config.cv_window)

    if not color:
        return assemble(grids, dmap, config.tie_policy, basis), dmap
    channels = [assemble([to_dct(tile(im[..., ch]), basis) for im in images],
                         dmap, config.tie_policy, basis)
                for ch in range(shape[2])]
    return np.stack(channels, axis=-1), dmap

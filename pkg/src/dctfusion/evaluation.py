"""Ground-truth metrics and the synthetic half-blur experiment."""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .focus import Metric
from .fusion import FusionConfig, fuse

KERNEL_SIZES = (5, 9)

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_RANGE = 255.0


def _same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")


def mse(reference: np.ndarray, test: np.ndarray) -> float:
    ref = np.asarray(reference, dtype=np.float64)
    tst = np.asarray(test, dtype=np.float64)
    _same_shape(ref, tst)
    return float(np.mean((ref - tst) ** 2))


def _gaussian_taps(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x * x) / (2 * sigma * sigma))
    return g / g.sum()


def _filter_valid(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Separable Gaussian mean, kept only where the window fits inside."""
    r = taps.size // 2
    out = ndimage.correlate1d(x, taps, axis=0, mode="constant")
    out = ndimage.correlate1d(out, taps, axis=1, mode="constant")
    return out[r:-r, r:-r]


def ssim_map(reference: np.ndarray, test: np.ndarray) -> np.ndarray:
    """Local SSIM over every full 11x11 Gaussian window position."""
    ref = np.asarray(reference, dtype=np.float64)
    tst = np.asarray(test, dtype=np.float64)
    _same_shape(ref, tst)
    if ref.ndim != 2:
        raise ValueError("ssim expects 2-D grayscale rasters")
    if min(ref.shape) < SSIM_WINDOW:
        raise ValueError(f"image {ref.shape} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    w = _gaussian_taps()
    c1 = (SSIM_K1 * SSIM_RANGE) ** 2
    c2 = (SSIM_K2 * SSIM_RANGE) ** 2
    mu_x = _filter_valid(ref, w)
    mu_y = _filter_valid(tst, w)
    sxx = _filter_valid(ref * ref, w) - mu_x * mu_x
    syy = _filter_valid(tst * tst, w) - mu_y * mu_y
    sxy = _filter_valid(ref * tst, w) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * sxy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2)
    return num / den


def ssim(reference: np.ndarray, test: np.ndarray) -> float:
    return float(np.mean(ssim_map(reference, test)))


# --- synthetic defocus -----------------------------------------------------

class Side(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class BlurSpec:
    side: Side
    kernel_size: int

    def __post_init__(self):
        object.__setattr__(self, "side", Side(self.side))
        if self.kernel_size not in KERNEL_SIZES:
            raise ValueError(f"kernel size must be one of {KERNEL_SIZES}, got {self.kernel_size}")


def box_kernel(size: int) -> np.ndarray:
    return np.full((size, size), 1.0 / (size * size))


def box_filter(image: np.ndarray, size: int) -> np.ndarray:
    """Box mean with mirror padding (``d c b a | a b c d``), float output."""
    # scipy's "reflect" repeats the edge sample, i.e. symmetric padding
    return ndimage.uniform_filter(np.asarray(image, dtype=np.float64), size=size, mode="reflect")


def synthetic_blur(image: np.ndarray, spec: BlurSpec) -> np.ndarray:
    """Blur the left or right half of a grayscale image.

    The filter runs over the whole image and the chosen half is spliced in at
    column ``W // 2``.  Output is uint8.
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("synthetic_blur expects a 2-D grayscale raster")
    h, w = image.shape
    if w < 2 * spec.kernel_size or h < 1:
        raise ValueError(
            f"image {w}x{h} too small for a {spec.kernel_size}x{spec.kernel_size} half blur"
        )
    blurred = np.floor(np.clip(box_filter(image, spec.kernel_size), 0, 255) + 0.5).astype(np.uint8)
    out = np.asarray(image, dtype=np.uint8).copy()
    half = w // 2
    if spec.side is Side.LEFT:
        out[:, :half] = blurred[:, :half]
    else:
        out[:, half:] = blurred[:, half:]
    return out


@dataclass(frozen=True)
class Pair:
    source: np.ndarray
    left_blurred: np.ndarray
    right_blurred: np.ndarray
    kernel_size: int
    name: str = ""

    @property
    def images(self) -> tuple[np.ndarray, np.ndarray]:
        return self.left_blurred, self.right_blurred


def make_pairs(images: Sequence[np.ndarray], names: Sequence[str] | None = None) -> list[Pair]:
    """Two complementary half-blurred pairs (5x5 and 9x9) per source image."""
    names = list(names) if names is not None else [f"image{i}" for i in range(len(images))]
    pairs = []
    for img, name in zip(images, names):
        img = np.asarray(img, dtype=np.uint8)
        for k in KERNEL_SIZES:
            pairs.append(Pair(
                source=img,
                left_blurred=synthetic_blur(img, BlurSpec(Side.LEFT, k)),
                right_blurred=synthetic_blur(img, BlurSpec(Side.RIGHT, k)),
                kernel_size=k,
                name=f"{name}/box{k}",
            ))
    return pairs


# --- benchmark -------------------------------------------------------------

@dataclass
class MetricReport:
    method: str
    cv: bool
    ssim: list[float] = field(default_factory=list)
    mse: list[float] = field(default_factory=list)

    @property
    def pairs(self) -> int:
        return len(self.ssim)

    @property
    def avg_ssim(self) -> float:
        return float(np.mean(self.ssim)) if self.ssim else float("nan")

    @property
    def avg_mse(self) -> float:
        return float(np.mean(self.mse)) if self.mse else float("nan")


def default_methods() -> list[FusionConfig]:
    return [FusionConfig(metric=m, cv_enabled=cv)
            for m in (Metric.AVERAGE, Metric.EOL, Metric.VARIANCE, Metric.VOL)
            for cv in (False, True)]


def run_benchmark(pairs: Iterable[Pair], methods: Sequence[FusionConfig] | None = None
                  ) -> list[MetricReport]:
    """Fuse every pair with every method and score against the clean source.

    Rows come back sorted by method name, then CV flag.
    """
    methods = list(methods) if methods is not None else default_methods()
    reports = {cfg: MetricReport(cfg.metric.value, cfg.cv_enabled) for cfg in methods}
    for pair in pairs:
        for cfg in methods:
            fused, _ = fuse(pair.images, cfg)
            reports[cfg].ssim.append(ssim(pair.source, fused))
            reports[cfg].mse.append(mse(pair.source, fused))
    return sorted(reports.values(), key=lambda r: (r.method, r.cv))


def format_report(rows: Sequence[MetricReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "cv", "avg_ssim", "avg_mse", "pairs"])
    for r in rows:
        writer.writerow([r.method, "on" if r.cv else "off",
                         f"{r.avg_ssim:.6g}", f"{r.avg_mse:.6g}", r.pairs])
    return buf.getvalue()

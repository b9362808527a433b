"""Multi-focus image fusion with Laplacian focus measures on 8x8 DCT blocks."""
from .evaluation import BlurSpec, MetricReport, Side, make_pairs, mse, run_benchmark, ssim, synthetic_blur
from .focus import Metric, eol_dct, eol_spatial, variance_dct, variance_spatial, vol_dct, vol_spatial
from .fusion import (
    BlockGrid,
    DecisionMap,
    FusionConfig,
    TiePolicy,
    assemble,
    consistency_verify,
    decide,
    fuse,
    tile,
    untile,
)
from .imaging import load_image, save_image
from .operators import OperatorSet, build_spatial_operators, laplacian_dct, laplacian_spatial, lift_to_dct
from .transform import DctBasis, dct_forward, dct_inverse, frobenius_trace, make_dct_basis

__version__ = "0.1.0"

import numpy as np
import pytest

from dctfusion.evaluation import (
    BlurSpec,
    MetricReport,
    Side,
    box_filter,
    box_kernel,
    default_methods,
    format_report,
    make_pairs,
    mse,
    run_benchmark,
    ssim,
    synthetic_blur,
)
from dctfusion.focus import Metric
from dctfusion.fusion import FusionConfig


def brute_box(img, k):
    r = k // 2
    padded = np.pad(img.astype(float), r, mode="symmetric")
    out = np.zeros(img.shape)
    for i in range(img.shape[0]):
        for j in range(img.shape[1]):
            out[i, j] = padded[i:i + k, j:j + k].sum() / (k * k)
    return out


def brute_ssim(x, y):
    """Direct evaluation of every 11x11 window, no filtering tricks."""
    x = x.astype(float)
    y = y.astype(float)
    g = np.exp(-((np.arange(11) - 5) ** 2) / (2 * 1.5 ** 2))
    w = np.outer(g, g)
    w /= w.sum()
    c1, c2 = (0.01 * 255) ** 2, (0.03 * 255) ** 2
    vals = []
    for i in range(x.shape[0] - 10):
        for j in range(x.shape[1] - 10):
            px, py = x[i:i + 11, j:j + 11], y[i:i + 11, j:j + 11]
            mx, my = (w * px).sum(), (w * py).sum()
            vx = (w * (px - mx) ** 2).sum()
            vy = (w * (py - my) ** 2).sum()
            cxy = (w * (px - mx) * (py - my)).sum()
            vals.append((2 * mx * my + c1) * (2 * cxy + c2) / ((mx ** 2 + my ** 2 + c1) * (vx + vy + c2)))
    return float(np.mean(vals))


# --- MSE ---

def test_mse_values():
    a = np.arange(12).reshape(3, 4)
    assert mse(a, a) == 0
    assert mse(a, a + 1) == 1
    assert mse(np.array([[0, 0]]), np.array([[3, 4]])) == 12.5


def test_mse_symmetric_and_checks_shape(rng):
    a, b = rng.integers(0, 256, (2, 10, 12))
    assert mse(a, b) == mse(b, a)
    with pytest.raises(ValueError):
        mse(a, b[:, :-1])


def test_mse_no_uint8_wraparound():
    a = np.array([[0]], np.uint8)
    b = np.array([[255]], np.uint8)
    assert mse(a, b) == 255 ** 2


# --- SSIM ---

def test_ssim_identical(textured_small):
    assert ssim(textured_small, textured_small) == pytest.approx(1.0, abs=1e-12)


def test_ssim_symmetric(textured_small, rng):
    noisy = np.clip(textured_small + rng.normal(0, 10, textured_small.shape), 0, 255)
    assert ssim(textured_small, noisy) == pytest.approx(ssim(noisy, textured_small), abs=1e-12)


def test_ssim_matches_brute_force(rng):
    x = rng.integers(0, 256, (16, 19))
    y = np.clip(x + rng.integers(-30, 31, x.shape), 0, 255)
    assert ssim(x, y) == pytest.approx(brute_ssim(x, y), abs=1e-12)


def test_ssim_matches_scikit_image(textured_small):
    metrics = pytest.importorskip("skimage.metrics")
    blurred = box_filter(textured_small, 5)
    want = metrics.structural_similarity(
        textured_small.astype(float), blurred, gaussian_weights=True, sigma=1.5,
        use_sample_covariance=False, data_range=255)
    assert ssim(textured_small, blurred) == pytest.approx(want, abs=1e-10)


def test_ssim_errors():
    with pytest.raises(ValueError):
        ssim(np.zeros((10, 20)), np.zeros((10, 20)))
    with pytest.raises(ValueError):
        ssim(np.zeros((20, 20)), np.zeros((20, 21)))


def test_ssim_blur_monotone(textured_small):
    q = lambda x: np.floor(x + 0.5)
    s5 = ssim(textured_small, q(box_filter(textured_small, 5)))
    s9 = ssim(textured_small, q(box_filter(textured_small, 9)))
    assert s9 < s5 < 1


# --- blur ---

@pytest.mark.parametrize("k", [5, 9])
def test_box_kernel_normalised(k):
    assert box_kernel(k).sum() == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("k", [5, 9])
def test_box_filter_matches_brute_force(k, rng):
    img = rng.integers(0, 256, (13, 21))
    np.testing.assert_allclose(box_filter(img, k), brute_box(img, k), atol=1e-9)


def test_constant_image_unchanged():
    img = np.full((20, 30), 77, np.uint8)
    for side in Side:
        for k in (5, 9):
            np.testing.assert_array_equal(synthetic_blur(img, BlurSpec(side, k)), img)


@pytest.mark.parametrize("k", [5, 9])
def test_blur_splice(k, textured_small):
    w = textured_small.shape[1]
    left = synthetic_blur(textured_small, BlurSpec("left", k))
    right = synthetic_blur(textured_small, BlurSpec("right", k))
    np.testing.assert_array_equal(left[:, w // 2:], textured_small[:, w // 2:])
    np.testing.assert_array_equal(right[:, :w // 2], textured_small[:, :w // 2])
    assert (left[:, :w // 2] != textured_small[:, :w // 2]).any()


@pytest.mark.parametrize("k", [5, 9])
def test_left_then_right_is_full_blur(k, textured_small):
    w = textured_small.shape[1]
    both = synthetic_blur(synthetic_blur(textured_small, BlurSpec("left", k)), BlurSpec("right", k))
    full = np.floor(brute_box(textured_small, k) + 0.5)
    np.testing.assert_array_equal(both[:, :w // 2], full[:, :w // 2])
    # beyond the splice column plus the kernel radius the second pass sees only original pixels
    np.testing.assert_array_equal(both[:, w // 2 + k // 2:], full[:, w // 2 + k // 2:])


def test_blur_odd_width_splits_at_floor():
    img = np.tile(np.arange(21, dtype=np.uint8) * 10, (12, 1))
    left = synthetic_blur(img, BlurSpec("left", 5))
    np.testing.assert_array_equal(left[:, 10:], img[:, 10:])


def test_blur_rejects_small_or_bad():
    with pytest.raises(ValueError):
        synthetic_blur(np.zeros((20, 17), np.uint8), BlurSpec("left", 9))
    with pytest.raises(ValueError):
        BlurSpec("left", 7)
    with pytest.raises(ValueError):
        BlurSpec("top", 5)


# --- pairs & benchmark ---

def test_pair_counts(textured_small):
    assert len(make_pairs([textured_small])) == 2
    assert len(make_pairs([textured_small] * 6)) == 12


def test_pair_members_complementary(textured_small):
    w = textured_small.shape[1]
    for p in make_pairs([textured_small]):
        np.testing.assert_array_equal(p.left_blurred[:, w // 2:], p.source[:, w // 2:])
        np.testing.assert_array_equal(p.right_blurred[:, :w // 2], p.source[:, :w // 2])
    assert [p.kernel_size for p in make_pairs([textured_small])] == [5, 9]


def test_benchmark_rows(textured_small):
    rows = run_benchmark(make_pairs([textured_small]))
    assert len(rows) == 8
    assert [(r.method, r.cv) for r in rows] == sorted((r.method, r.cv) for r in rows)
    assert all(r.pairs == 2 for r in rows)
    by = {(r.method, r.cv): r for r in rows}
    assert by[("vol", False)].avg_mse < by[("average", False)].avg_mse


def test_benchmark_identity_pair(textured_small):
    from dctfusion.evaluation import Pair
    pair = Pair(textured_small, textured_small, textured_small, 5)
    rows = run_benchmark([pair], [FusionConfig(metric=m) for m in Metric])
    for r in rows:
        assert r.avg_ssim == pytest.approx(1.0, abs=1e-12)
        assert r.avg_mse == 0


def test_report_csv_format():
    rows = [MetricReport("vol", True, [0.99912345678], [1.23456789]),
            MetricReport("average", False, [0.9], [68.90654321])]
    text = format_report(rows)
    assert text.splitlines() == [
        "method,cv,avg_ssim,avg_mse,pairs",
        "vol,on,0.999123,1.23457,1",
        "average,off,0.9,68.9065,1",
    ]


def test_default_methods_cartesian():
    methods = default_methods()
    assert len(methods) == 8 and len(set(methods)) == 8

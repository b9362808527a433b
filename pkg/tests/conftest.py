import numpy as np
import pytest

from dctfusion.imaging import to_luminance

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def textured_images():
    """Six 512x512 grayscale test images bundled with scikit-image."""
    data = pytest.importorskip("skimage.data")
    return {
        "camera": data.camera(),
        "astronaut": to_luminance(data.astronaut()),
        "moon": data.moon(),
        "brick": data.brick(),
        "grass": data.grass(),
        "gravel": data.gravel(),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def textured_small(rng):
    """64x64 smoothed-noise image with structure at several scales."""
    from scipy import ndimage

    noise = rng.normal(size=(64, 64))
    img = 128 + 40 * ndimage.gaussian_filter(noise, 1.0) / ndimage.gaussian_filter(noise, 1.0).std()
    img += 20 * np.sin(np.arange(64) / 3.0)[None, :]
    return np.clip(np.round(img), 0, 255).astype(np.uint8)

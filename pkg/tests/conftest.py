import numpy as np
import pytest

from dronewatch.augment import ForegroundAsset
from dronewatch.imaging import Image


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def random_image(rng, w, h, c=3) -> Image:
    return Image(rng.integers(0, 256, (h, w, c)).astype(np.uint8))


def opaque_asset(rng, w, h, name="asset") -> ForegroundAsset:
    arr = rng.integers(0, 256, (h, w, 4)).astype(np.uint8)
    arr[:, :, 3] = 255
    return ForegroundAsset(raster=Image(arr), name=name)

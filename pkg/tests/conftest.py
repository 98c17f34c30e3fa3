import numpy as np
import pytest

from radonlens.image import ImageGrid, disk_phantom, smooth_phantom


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def disk32():
    return disk_phantom(32, radius_frac=0.4)


@pytest.fixture
def smooth64():
    return smooth_phantom(64)


@pytest.fixture
def random_image(rng):
    return ImageGrid(rng.uniform(0.0, 1.0, (32, 32)))

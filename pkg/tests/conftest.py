import numpy as np
import pytest

from semsplat.decoder.mlp import SemanticDecoder
from tests.factories import make_camera, make_cloud


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def camera():
    return make_camera()


@pytest.fixture
def cloud(rng):
    return make_cloud(rng)


@pytest.fixture
def decoder():
    return SemanticDecoder.create(input_dim=4, num_classes=3, hidden=6, seed=7, dtype=np.float64)

import numpy as np
import pytest

from relaysim.modulation import build_constellation


@pytest.fixture(params=[2, 4, 8])
def constellation(request):
    return build_constellation(request.param)


@pytest.fixture
def qpsk():
    return build_constellation(4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

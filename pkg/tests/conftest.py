import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_configure(config):
    # keep BLAS threading from oversubscribing the small test problems
    os.environ.setdefault("OMP_NUM_THREADS", "2")

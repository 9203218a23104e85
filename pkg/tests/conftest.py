import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def fd_directional(f, x, n, h):
    """Central difference of f along n at x."""
    return (f(x + h * n) - f(x - h * n)) / (2.0 * h)

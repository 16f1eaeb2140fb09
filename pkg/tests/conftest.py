import numpy as np
import pytest
from hypothesis import settings

from cpseg.core import RegressionSeries

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def make_series(n, p, seed=0, beta=None, noise=1.0):
    """Gaussian design with an optional ``(p, n)`` coefficient path."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    signal = np.zeros(n) if beta is None else np.einsum("tj,jt->t", x, beta)
    return RegressionSeries(x, signal + noise * rng.standard_normal(n))


def intercept_series(y):
    y = np.asarray(y, dtype=float)
    return RegressionSeries(np.ones((y.size, 1)), y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

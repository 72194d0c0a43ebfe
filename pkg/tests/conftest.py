import numpy as np
import pytest

from slsopt import FiniteSumProblem


def make_toy2():
    """Two scalar components f1 = x^2/2, f2 = x^2 with distinct curvature."""
    components = [
        (lambda x: 0.5 * x[0] ** 2, lambda x: np.array([x[0]])),
        (lambda x: x[0] ** 2, lambda x: np.array([2.0 * x[0]])),
    ]
    return FiniteSumProblem(n=1, components=components)


@pytest.fixture
def toy2():
    return make_toy2()


def central_diff_grad(value_fn, x, h=1e-6):
    g = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (value_fn(x + e) - value_fn(x - e)) / (2.0 * h)
    return g

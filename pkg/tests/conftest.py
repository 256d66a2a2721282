import numpy as np
import pytest

from oracles import random_orthonormal


def tucker_tensor(rng, dims, ranks):
    """Exact Tucker tensor with Gaussian core and orthonormal factors."""
    core = rng.standard_normal(ranks)
    factors = [random_orthonormal(rng, d, r) for d, r in zip(dims, ranks)]
    x = core
    for n, u in enumerate(factors):
        x = np.moveaxis(np.tensordot(u, x, axes=(1, n)), 0, n)
    return x, core, factors


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

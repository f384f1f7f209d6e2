import itertools

import numpy as np
import pytest

from wcdrbm import RbmParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_params(rng, n_visible, n_hidden, scale=0.8):
    return RbmParams(
        n_visible, n_hidden,
        rng.normal(0.0, scale, n_visible),
        rng.normal(0.0, scale, n_hidden),
        rng.normal(0.0, scale, (n_hidden, n_visible)),
    )


def all_hidden_states(n_hidden):
    return [np.array(h, dtype=np.uint8)
            for h in itertools.product((0, 1), repeat=n_hidden)]


def naive_energy(params, x, h):
    """Triple-loop energy evaluation, independent of the library path."""
    total = 0.0
    for j in range(params.n_visible):
        total -= params.b[j] * x[j]
    for i in range(params.n_hidden):
        total -= params.c[i] * h[i]
    for i in range(params.n_hidden):
        for j in range(params.n_visible):
            total -= h[i] * params.W[i, j] * x[j]
    return total

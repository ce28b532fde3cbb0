"""Shared helpers for the test suite."""

import numpy as np
import pytest

from rfloc.core import validate_dataset


BAND5 = (91.2, 93.6, 96.0, 98.4, 100.8)


def toy_dataset(n=60, m=5, seed=0, fn=None):
    """Random-feature dataset; labels from fn(X) or a fixed linear map."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, m))
    if fn is None:
        W = rng.normal(size=(m, 3))
        Y = X @ W
    else:
        Y = fn(X)
    freqs = BAND5 if m == 5 else tuple(88.0 + 0.1 * i for i in range(m))
    return validate_dataset(X, Y, freqs)


def column_dataset(values, labels, m=1):
    """1-feature dataset (optionally tiled to m columns) with 3D labels."""
    X = np.tile(np.asarray(values, dtype=float)[:, None], (1, m))
    Y = np.tile(np.asarray(labels, dtype=float)[:, None], (1, 3))
    freqs = tuple(88.0 + 0.1 * i for i in range(m))
    return validate_dataset(X, Y, freqs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

"""Shared fixtures for the collapse_lab test suite."""

import numpy as np
import pytest

from collapse_lab.model.core import HyperParams, ModelState


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs an optimizer to convergence")


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def desk_hp():
    """The desk-scale instance used for the convergence checks."""
    return HyperParams(K=4, d=8, n=10, lambda_w=5e-4, lambda_h=5e-4, lambda_b=5e-4)


@pytest.fixture
def make_state():
    """Factory for random Gaussian states of a given shape."""

    def factory(rng, K, d, n, scale=1.0):
        return ModelState(
            W=scale * rng.standard_normal((K, d)),
            H=scale * rng.standard_normal((d, n * K)),
            b=scale * rng.standard_normal(K),
        )

    return factory

"""Shared fixtures: converged margin points for the built-in models.

Session-scoped so the expensive solves happen once; individual tests must
not mutate the returned objects (they are frozen dataclasses holding arrays
that are shared across tests).
"""

import numpy as np
import pytest

import ddehopf as dh

# (model name, seed alpha, free parameter index) for sigma = 0 points
SEEDS = {
    "hayes": ([0.0, 1.5, 1.0], 1),
    "sd-source": ([1.0, 1.0, 2.0, 1.0, 0.2], 2),
    "quadratic": ([0.0, -1.4], 1),
    "osc2": ([0.12, 0.1, 1.0], 0),
}


@pytest.fixture(scope="session")
def models():
    return {name: dh.get_model(name) for name in SEEDS}


@pytest.fixture(scope="session")
def hopf_points(models):
    """sigma = 0 margin points on every built-in model."""
    out = {}
    for name, (alpha, free) in SEEDS.items():
        out[name] = dh.margin_point_from_alpha(models[name], 0.0, alpha, free_index=free)
    return out


@pytest.fixture(scope="session")
def hayes_point(hopf_points):
    return hopf_points["hayes"]


@pytest.fixture(scope="session")
def hayes_normal(models, hayes_point):
    return dh.normal_at(models["hayes"], hayes_point)


@pytest.fixture(scope="session")
def hayes_tau_fixed():
    """Two-parameter slice of hayes with the delay frozen at 1."""
    model = dh.fix_parameters(dh.get_model("hayes"), {"tau": 1.0})
    sol = dh.margin_point_from_alpha(model, 0.0, [0.0, 1.5], free_index=1)
    return model, sol


def assert_allclose(actual, desired, rtol=0.0, atol=0.0):
    np.testing.assert_allclose(np.asarray(actual), np.asarray(desired), rtol=rtol, atol=atol)

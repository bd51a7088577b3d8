"""Fixtures for INCAD tests."""

from collections.abc import Callable
from typing import Any

import numpy as np
import pytest

from incad.config import IncadConfig, RunConfig
from incad.const import CONF_BURN_IN, CONF_SWEEPS
from incad.data import generate_synthetic
from incad.model import ModelState
from incad.mvn import MVNParams, RandomSource, make_rng


@pytest.fixture
def rng() -> RandomSource:
    """Return a seeded generator."""
    return make_rng(1234)


@pytest.fixture
def blobs() -> np.ndarray:
    """Return two well-separated 2-D Gaussian blobs of 40 points each."""
    gen = make_rng(7)
    left = gen.normal(loc=(-5.0, 0.0), scale=0.5, size=(40, 2))
    right = gen.normal(loc=(5.0, 0.0), scale=0.5, size=(40, 2))
    return np.vstack([left, right])


@pytest.fixture
def make_run_config() -> Callable[..., RunConfig]:
    """Return a factory resolving a RunConfig against data, with flat-key overrides."""

    def _make(data: np.ndarray, **overrides: Any) -> RunConfig:
        values = {CONF_SWEEPS: 6, CONF_BURN_IN: 2}
        values.update(overrides)
        return IncadConfig.from_mapping(values).resolve(data)

    return _make


@pytest.fixture
def run_config(blobs, make_run_config) -> RunConfig:
    """Return a short-run config resolved against the blobs."""
    return make_run_config(blobs)


def single_cluster_state(data: np.ndarray, config: RunConfig) -> ModelState:
    """Build a state with every point in one cluster at the sample moments."""
    state = ModelState.empty(data, config)
    state.spawn(0, MVNParams(mean=data.mean(axis=0), covariance=np.cov(data, rowvar=False)))
    for i in range(1, state.n_points):
        state.attach(i, 0)
    return state


@pytest.fixture
def synthetic():
    """Return the default synthetic dataset."""
    return generate_synthetic(IncadConfig.from_mapping({}).synthetic, make_rng(0))

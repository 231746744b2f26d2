"""Shared fixtures: a tiny channel pipeline kept small enough for fast tests."""
from __future__ import annotations

import pytest

import riscast

TINY_N = 2
TINY_LENGTH = 260
TINY_FILTER_LENGTH = 16
TINY_WINDOW = 10
TINY_SEED = 5


@pytest.fixture(scope="session")
def tiny_geometry():
    return riscast.LinkGeometry()


@pytest.fixture(scope="session")
def tiny_filter():
    return riscast.build_correlation_filter(0.01, TINY_FILTER_LENGTH)


@pytest.fixture(scope="session")
def tiny_series(tiny_geometry, tiny_filter):
    return riscast.generate_channel_series(
        tiny_geometry, TINY_N, TINY_LENGTH, tiny_filter, seed=TINY_SEED
    )


@pytest.fixture(scope="session")
def tiny_matrix(tiny_series):
    return riscast.to_feature_matrix(tiny_series)


@pytest.fixture(scope="session")
def tiny_dataset(tiny_matrix):
    return riscast.prepare_dataset(tiny_matrix, window=TINY_WINDOW)


@pytest.fixture(scope="session")
def tiny_models(tiny_dataset):
    """One quickly trained model per variant, for pipeline-level tests."""
    trained = {}
    for variant in riscast.VARIANTS:
        config = riscast.ModelConfig(
            variant=variant, n_elements=TINY_N, window=TINY_WINDOW
        ).resolved()
        trained[variant] = riscast.train_model(
            config, tiny_dataset, riscast.TrainConfig(epochs=3, seed=0)
        )
    return trained

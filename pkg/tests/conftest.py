from __future__ import annotations

import pytest

from bugdedup.corpus import duplicate_clusters, filter_invalid
from bugdedup.preprocess import default_config
from bugdedup.synth import generate


@pytest.fixture(scope="session")
def clean_cfg():
    return default_config()


@pytest.fixture(scope="session")
def small_synth():
    """400-bug synthetic corpus shared by pipeline-level tests."""
    return generate(400, seed=3)


@pytest.fixture(scope="session")
def small_clean(small_synth):
    return filter_invalid(small_synth.corpus).corpus


@pytest.fixture(scope="session")
def small_clusters(small_clean):
    return duplicate_clusters(small_clean)

from __future__ import annotations

import pytest

from curriforge import harness


@pytest.fixture(scope="session")
def dataset200(tmp_path_factory):
    """The separable 200-sample synthetic dataset (read-only once built)."""
    root = tmp_path_factory.mktemp("dataset200")
    manifest, embeddings = harness.synthesize_dataset(root)
    return manifest, embeddings

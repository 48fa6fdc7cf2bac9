from __future__ import annotations

import pytest

from cli_drive import build_dataset, write_config


@pytest.fixture
def small_session_setup(tmp_path):
    """A 4-epoch config with one milestone; no CLI run attached."""
    manifest, embeddings = build_dataset(tmp_path / "data")
    config = write_config(
        tmp_path / "config.json", manifest, embeddings, tmp_path / "work",
        pacing={"milestones": [2], "total_epochs": 4, "easy_count": 2},
    )
    return config, manifest, embeddings

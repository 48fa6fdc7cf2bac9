from __future__ import annotations

import json

from curriforge import harness
from curriforge.cli import main


def build_dataset(root, **kw):
    defaults = dict(n_real=10, n_hard=5, n_easy=5, dim=6, image_size=16, seed=3)
    defaults.update(kw)
    return harness.synthesize_dataset(root, **defaults)


def write_config(path, manifest, embeddings, out_dir, pacing, seed=0, **kw):
    body = {
        "version": 1,
        "seed": seed,
        "paths": {
            "manifest": str(manifest),
            "embeddings": str(embeddings),
            "out_dir": str(out_dir),
        },
        "pacing": pacing,
        "batch_size": kw.pop("batch_size", 8),
    }
    body.update(kw)
    path.write_text(json.dumps(body))
    return path


def cli_run(tmp_path, pacing, seed=0, dataset_kw=None, **config_kw):
    """Drive the CLI end to end; return the paths a replay needs."""
    manifest, embeddings = build_dataset(tmp_path / "data", **(dataset_kw or {}))
    out_dir = tmp_path / "run"
    config = write_config(
        tmp_path / "config.json", manifest, embeddings, out_dir, pacing,
        seed=seed, **config_kw,
    )
    assert main(["run", "--config", str(config)]) == 0
    scores = tmp_path / "scores.jsonl"
    assert main([
        "score-static", "--manifest", str(manifest),
        "--embeddings", str(embeddings), "--out", str(scores),
    ]) == 0
    replay_dump = tmp_path / "replayed.jsonl"
    assert main([
        "schedule", "--config", str(config), "--scores", str(scores),
        "--loss-log", str(out_dir / "losses.jsonl"), "--out", str(replay_dump),
    ]) == 0
    return {
        "config": config,
        "manifest": manifest,
        "embeddings": embeddings,
        "out_dir": out_dir,
        "loss_log": out_dir / "losses.jsonl",
        "schedule_dump": replay_dump,
    }

"""An external training loop driven through the session facade.

The loop below owns its own model and its own batching; the session only
tells it what to train on each epoch and collects the losses afterwards.
That is the whole integration surface: next_pool out, submit_losses in,
one final quality table at close.
"""
import json
import tempfile
from pathlib import Path

import numpy as np

from curriforge import LossRecord, harness, load_embeddings, load_manifest
from curriforge.dataio import load_image
from curriforge_adapter import close_session, next_pool, open_session, submit_losses

work = Path(tempfile.mkdtemp(prefix="curriforge-loop-"))
manifest, embeddings_path = harness.synthesize_dataset(
    work / "data", n_real=12, n_hard=6, n_easy=6, dim=8, image_size=16, seed=21
)

config = work / "config.json"
config.write_text(json.dumps({
    "version": 1,
    "seed": 21,
    "paths": {
        "manifest": str(manifest),
        "embeddings": str(embeddings_path),
        "out_dir": str(work / "session"),
    },
    "pacing": {"milestones": [2, 4], "total_epochs": 6, "easy_count": 3},
    "batch_size": 8,
}))

records = load_manifest(manifest)
embeddings = load_embeddings(embeddings_path, expected_ids=[r.sample_id for r in records])
real_ids = sorted(r.sample_id for r in records if r.label == "REAL")
dim = len(next(iter(embeddings.values())))

session = open_session(config, manifest, embeddings_path)
model = harness.toy_init(dim, np.random.default_rng(21))

total_epochs = 6
for t in range(total_epochs):
    pool = next_pool(session)

    # the loop decides how to consume the pool; here one full-batch step
    # over every real plus the scheduled fakes
    ids, feats, labels = list(real_ids), [embeddings[i] for i in real_ids], [0.0] * len(real_ids)
    for sample_id in pool.hard_ids:
        ids.append(sample_id)
        feats.append(embeddings[sample_id])
        labels.append(1.0)
    for sample_id, png in sorted(pool.easy_ids_with_freda_paths.items()):
        ids.append(sample_id)
        feats.append(harness.spectral_band_features(load_image(png), dim))
        labels.append(1.0)

    model, losses = harness.toy_step(model, np.stack(feats), np.array(labels), pool.lr_hint)
    ack = submit_losses(session, t, [
        LossRecord(t, sample_id, float(loss), pool.lr_hint)
        for sample_id, loss in zip(ids, losses)
    ])

    fake_losses = losses[len(real_ids):]
    print(f"epoch {t} [{pool.phase:10s}] k={pool.k}  hard={len(pool.hard_ids)}  "
          f"easy={len(pool.easy_ids_with_freda_paths)}  lr={pool.lr_hint:.4f}  "
          f"fake-loss={float(np.mean(fake_losses)):.4f}  acknowledged={ack['accepted']}")

table = close_session(session)
print("\nhardest five at close:")
for state in sorted(table, key=lambda s: -s.fqs)[:5]:
    print(f"  {state.sample_id:8s} fqs={state.fqs:.4f}  q={state.q:+.3f}  d={state.d:.4f}")

"""How close is each fake to the real image it forged?

Walk through static quality scoring on a tiny synthetic dataset: build it,
score every fake against its paired real, and see high-quality fakes land
near q=1 while crude ones fall away.
"""
import tempfile
from pathlib import Path

import numpy as np

from curriforge import dataio, harness
from curriforge.fqs import compute_static_scores

work = Path(tempfile.mkdtemp(prefix="curriforge-demo-"))

# 20 reals, 10 near-real fakes, 10 crude fakes, embeddings included
manifest_path, embeddings_path = harness.synthesize_dataset(
    work, n_real=20, n_hard=10, n_easy=10, dim=8, image_size=16, seed=7
)

records = dataio.load_manifest(manifest_path)
table = dataio.load_embeddings(embeddings_path)

# q = cosine similarity between a fake's embedding and its paired real's
scores = compute_static_scores(records, table)

print(f"{len(scores)} fakes scored; a few from each end:")
ranked = sorted(scores, key=scores.get, reverse=True)
for sid in ranked[:3] + ranked[-3:]:
    print(f"  {sid:10s} q = {scores[sid]:+.4f}")

# the synthesizer names its convincing fakes hard_* and its crude ones easy_*
hard_mean = np.mean([q for s, q in scores.items() if s.startswith("hard")])
easy_mean = np.mean([q for s, q in scores.items() if s.startswith("easy")])
print(f"mean q: convincing fakes {hard_mean:.3f}, crude fakes {easy_mean:.3f}")

# persist the table; `curriforge schedule` consumes exactly this file
dataio.save_scores(scores, work / "scores.jsonl")
print(f"wrote {work / 'scores.jsonl'}")

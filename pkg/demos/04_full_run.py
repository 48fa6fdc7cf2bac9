"""End-to-end run: dataset synthesis to CSV report, all through the CLI.

Everything below shells through the same entry points a terminal user gets
(score-static, run, schedule, report), so the artifacts it leaves behind are
exactly what production tooling would consume.
"""
import json
import tempfile
from pathlib import Path

from curriforge import harness
from curriforge.cli import main

work = Path(tempfile.mkdtemp(prefix="curriforge-demo-"))
manifest, embeddings = harness.synthesize_dataset(work / "data")

config = work / "config.json"
config.write_text(json.dumps({
    "version": 1,
    "seed": 17,
    "paths": {
        "manifest": str(manifest),
        "embeddings": str(embeddings),
        "out_dir": str(work / "run"),
    },
    "pacing": {"milestones": [2, 5, 8, 12, 15], "total_epochs": 20,
               "easy_count": 1000},
    "batch_size": 32,
}))

# full curriculum run: warm-up, scoring, pacing, augmentation, toy training
main(["run", "--config", str(config)])

# replay the recorded losses into a schedule dump; byte-identical to the
# run's own dump, which is the determinism contract in one line
main(["score-static", "--manifest", str(manifest),
      "--embeddings", str(embeddings), "--out", str(work / "scores.jsonl")])
main(["schedule", "--config", str(config), "--scores", str(work / "scores.jsonl"),
      "--loss-log", str(work / "run" / "losses.jsonl"),
      "--out", str(work / "replayed.jsonl")])
same = (work / "replayed.jsonl").read_bytes() == (work / "run" / "schedule.jsonl").read_bytes()
print(f"replayed dump identical to run dump: {same}")

# flatten the report into CSV series for plotting
main(["report", "--report", str(work / "run" / "report.jsonl"),
      "--out-dir", str(work / "csv")])

print("\nepoch series (first lines):")
for line in (work / "csv" / "epochs.csv").read_text().splitlines()[:6]:
    print(" ", line)
print(f"\nartifacts under {work}")

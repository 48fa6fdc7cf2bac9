"""Self-contained synthetic trainer exercising the full curriculum loop.

No neural network: a logistic classifier over the embedding vectors stands
in for the detector, supplying real per-sample losses, and a cosine
schedule supplies the learning rate.  Augmented images cannot reuse their
source embeddings (their pixels changed), so they enter the classifier
through a feature hook; the default summarizes the magnitude spectrum in
nested square bands.

Everything is seeded: two runs with the same inputs and seed produce
byte-identical reports, schedule dumps, and loss logs.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import dataio, freda
from .dataio import (
    FORMAT_VERSION,
    LABEL_FAKE,
    LABEL_REAL,
    LossLogWriter,
    LossRecord,
    SampleRecord,
    _dump_line,
    _iter_records,
    read_header,
)
from .errors import DimensionError, ParseError, PairingError, ScheduleError
from .fqs import FqsConfig, QualityState, compute_static_scores
from .pacing import (
    PHASE_WARMUP,
    CurriculumScheduler,
    PacingConfig,
    PoolPlan,
    build_epoch_pool,
    save_schedule_dump,
    schedule_row,
)

REPORT_SCHEMA = "training-report"


@dataclass(frozen=True)
class RunConfig:
    """Everything a full run needs besides file locations."""

    fqs: FqsConfig = FqsConfig()
    pacing: PacingConfig = PacingConfig()
    seed: int = 0
    batch_size: int = 32
    freda_radius: int | None = None

    def validate(self) -> None:
        self.fqs.validate()
        self.pacing.validate()
        if self.batch_size < 2:
            raise DimensionError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.freda_radius is not None and self.freda_radius < 0:
            raise DimensionError(
                f"freda_radius must be >= 0, got {self.freda_radius}"
            )

    def to_dict(self) -> dict:
        cfg = {
            "fqs": asdict(self.fqs),
            "pacing": asdict(self.pacing),
            "seed": self.seed,
            "batch_size": self.batch_size,
            "freda_radius": self.freda_radius,
        }
        cfg["pacing"]["milestones"] = list(self.pacing.milestones)
        return cfg

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        fqs_cfg = FqsConfig(**obj.get("fqs", {}))
        pacing_obj = dict(obj.get("pacing", {}))
        if "milestones" in pacing_obj:
            pacing_obj["milestones"] = tuple(pacing_obj["milestones"])
        pacing_cfg = PacingConfig(**pacing_obj)
        return cls(
            fqs=fqs_cfg,
            pacing=pacing_cfg,
            seed=obj.get("seed", 0),
            batch_size=obj.get("batch_size", 32),
            freda_radius=obj.get("freda_radius"),
        )


@dataclass(frozen=True)
class ToyModelState:
    """Logistic classifier over embeddings; the last weight is the bias."""

    weights: np.ndarray
    step_count: int


@dataclass(frozen=True)
class EpochRow:
    epoch: int
    phase: str
    k: int
    alpha_f: float
    lr: float
    hard_size: int
    easy_size: int
    mean_loss_hard: float | None
    mean_loss_easy: float | None


@dataclass
class TrainingReport:
    """Per-epoch rows plus the final per-sample quality table.

    ``plans`` is in-memory bookkeeping for callers that want the exact pool
    membership; it is not serialized (digests in the schedule dump cover
    audits).
    """

    seed: int
    config: dict
    rows: list[EpochRow]
    fqs_table: list[QualityState]
    plans: list[PoolPlan] | None = None


def cosine_lr(t: int, total_epochs: int, lr_max: float) -> float:
    """Cosine annealing: lr_max * (1 + cos(pi * t / total)) / 2."""
    if not (0 <= t < total_epochs):
        raise ScheduleError(f"epoch {t} outside [0, {total_epochs})")
    if not (lr_max > 0 and math.isfinite(lr_max)):
        raise ScheduleError(f"lr_max must be positive, got {lr_max}")
    return lr_max * 0.5 * (1.0 + math.cos(math.pi * t / total_epochs))


def toy_init(dim: int, rng: np.random.Generator) -> ToyModelState:
    """Small random weights; near zero so early losses sit near ln 2."""
    return ToyModelState(weights=rng.normal(0.0, 0.01, size=dim + 1), step_count=0)


def toy_step(
    model: ToyModelState, features: np.ndarray, labels: np.ndarray, lr: float
) -> tuple[ToyModelState, np.ndarray]:
    """One gradient step of logistic regression.

    Returns the updated model and each sample's binary cross-entropy,
    evaluated before the update.  With all-zero weights every loss is
    exactly ln 2; lr=0 leaves the model untouched.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.weights.shape[0] - 1:
        raise DimensionError(
            f"features {features.shape} do not match weight dim "
            f"{model.weights.shape[0] - 1}"
        )
    logits = features @ model.weights[:-1] + model.weights[-1]
    probs = 1.0 / (1.0 + np.exp(-logits))
    clipped = np.clip(probs, 1e-12, 1.0 - 1e-12)
    losses = -(labels * np.log(clipped) + (1.0 - labels) * np.log(1.0 - clipped))
    grad_w = features.T @ (probs - labels) / len(labels)
    grad_b = float(np.mean(probs - labels))
    weights = model.weights.copy()
    weights[:-1] -= lr * grad_w
    weights[-1] -= lr * grad_b
    return ToyModelState(weights, model.step_count + 1), losses


def spectral_band_features(img: np.ndarray, dim: int) -> np.ndarray:
    """Feature hook for augmented images: nested square-band magnitudes.

    The centered magnitude spectrum (channel-averaged) is split into
    ``dim`` rings by Chebyshev distance from the DC bin; each feature is
    log1p of the ring's mean magnitude.
    """
    spec = freda.forward_spectrum(img)
    mag = np.abs(spec).mean(axis=2)
    height, width = mag.shape
    ch, cw = height // 2, width // 2
    uu, vv = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    ring = np.maximum(np.abs(uu - ch), np.abs(vv - cw))
    max_ring = int(ring.max())
    edges = np.linspace(0, max_ring + 1, dim + 1)
    features = np.zeros(dim, dtype=np.float64)
    for i in range(dim):
        inside = (ring >= edges[i]) & (ring < edges[i + 1])
        if np.any(inside):
            features[i] = math.log1p(float(mag[inside].mean()))
    return features


def _epoch_batches(
    real_ids: list[str],
    fake_ids: list[str],
    batch_size: int,
    rng: np.random.Generator,
) -> list[list[str]]:
    """Mini-batches drawing reals and fakes 1:1 while both sides last.

    Each sample appears exactly once per epoch; after the shorter side is
    exhausted the remaining batches are single-class.
    """
    half = max(1, batch_size // 2)
    reals = list(real_ids)
    fakes = list(fake_ids)
    rng.shuffle(reals)
    rng.shuffle(fakes)
    batches: list[list[str]] = []
    ri = fi = 0
    while ri < len(reals) or fi < len(fakes):
        batch = reals[ri : ri + half] + fakes[fi : fi + half]
        ri += half
        fi += half
        batches.append(batch)
    return batches


def run_curriculum(
    manifest_path: str | Path,
    embeddings_path: str | Path,
    cfg: RunConfig,
    out_dir: str | Path,
    feature_fn: Callable[[np.ndarray, int], np.ndarray] = spectral_band_features,
) -> TrainingReport:
    """Execute warm-up, scoring, pacing, augmentation, and toy training.

    Writes ``report.jsonl``, ``schedule.jsonl``, ``losses.jsonl``, and the
    augmented images (with a provenance log) under ``out_dir``.  The report
    and dump contain no paths or timestamps, so runs are reproducible to
    the byte.
    """
    cfg.validate()
    manifest_path = Path(manifest_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    freda_dir = out_dir / "freda"
    freda_dir.mkdir(exist_ok=True)

    records = dataio.load_manifest(manifest_path)
    by_id = {rec.sample_id: rec for rec in records}
    real_ids = [r.sample_id for r in records if r.label == LABEL_REAL]
    fake_ids = [r.sample_id for r in records if r.label == LABEL_FAKE]
    embeddings = dataio.load_embeddings(embeddings_path, expected_ids=by_id.keys())
    dim = len(next(iter(embeddings.values())))

    static_scores = compute_static_scores(records, embeddings)
    scheduler = CurriculumScheduler(cfg.pacing, cfg.fqs, static_scores, cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    model = toy_init(dim, rng)

    loss_path = out_dir / "losses.jsonl"
    if loss_path.exists():
        loss_path.unlink()

    # augmented features and pixels are radius-pure, so materialize once
    feature_cache: dict[str, np.ndarray] = {}
    provenance: list[dict] = []

    def materialize(easy_id: str) -> None:
        if easy_id in feature_cache:
            return
        rec = by_id[easy_id]
        if rec.paired_real_id is None or rec.paired_real_id not in by_id:
            raise PairingError(f"easy sample {easy_id!r} has no paired real")
        fake_img = dataio.load_image(dataio.image_abspath(manifest_path, rec))
        real_img = dataio.load_image(
            dataio.image_abspath(manifest_path, by_id[rec.paired_real_id])
        )
        radius = (
            cfg.freda_radius
            if cfg.freda_radius is not None
            else freda.default_radius(fake_img.shape[0], fake_img.shape[1])
        )
        augmented = freda.freda(fake_img, real_img, radius)
        out_name = f"{freda.augmented_id(easy_id)}.png"
        dataio.save_image(augmented, freda_dir / out_name)
        feature_cache[easy_id] = feature_fn(augmented, dim)
        provenance.append(
            {"src_id": easy_id, "r": radius, "out_path": f"freda/{out_name}"}
        )

    rows: list[EpochRow] = []
    with LossLogWriter(loss_path) as writer:
        for t in range(cfg.pacing.total_epochs):
            plan = scheduler.plan_epoch(t)
            lr = cosine_lr(t, cfg.pacing.total_epochs, cfg.fqs.lr_max)
            pool = build_epoch_pool(plan, materialize, real_ids)
            real_set = set(real_ids)
            pool_reals = [i for i in pool if i in real_set]
            pool_fakes = [i for i in pool if i not in real_set]

            losses_by_id: dict[str, float] = {}
            for batch in _epoch_batches(pool_reals, pool_fakes, cfg.batch_size, rng):
                feats = np.stack(
                    [
                        feature_cache[freda.source_id(i)]
                        if freda.is_augmented_id(i)
                        else embeddings[i]
                        for i in batch
                    ]
                )
                labels = np.array(
                    [0.0 if by_id[freda.source_id(i)].label == LABEL_REAL else 1.0 for i in batch]
                )
                model, batch_losses = toy_step(model, feats, labels, lr)
                for sample_id, loss in zip(batch, batch_losses):
                    losses_by_id[sample_id] = float(loss)

            epoch_records = [
                LossRecord(t, sample_id, losses_by_id[sample_id], lr)
                for sample_id in sorted(losses_by_id)
            ]
            writer.append(epoch_records)
            scheduler.observe_losses(t, epoch_records)

            hard_losses = [losses_by_id[i] for i in sorted(plan.hard_ids)]
            easy_losses = [
                losses_by_id[freda.augmented_id(i)] for i in sorted(plan.easy_ids)
            ]
            rows.append(
                EpochRow(
                    epoch=t,
                    phase=plan.phase,
                    k=plan.k_current,
                    alpha_f=plan.alpha_f_current,
                    lr=lr,
                    hard_size=len(plan.hard_ids),
                    easy_size=len(plan.easy_ids),
                    mean_loss_hard=(
                        float(np.mean(hard_losses)) if hard_losses else None
                    ),
                    mean_loss_easy=(
                        float(np.mean(easy_losses)) if easy_losses else None
                    ),
                )
            )

    report = TrainingReport(
        seed=cfg.seed,
        config=cfg.to_dict(),
        rows=rows,
        fqs_table=scheduler.final_table(),
        plans=list(scheduler.plans),
    )
    save_report(report, out_dir / "report.jsonl")
    save_schedule_dump(
        [schedule_row(p) for p in scheduler.plans], out_dir / "schedule.jsonl"
    )
    with open(freda_dir / "provenance.jsonl", "w", encoding="utf-8") as fh:
        fh.write(_dump_line({"schema": "freda-provenance", "version": FORMAT_VERSION}))
        for entry in provenance:
            fh.write(_dump_line(entry))
    return report


# ---------------------------------------------------------------------------
# report persistence


def save_report(report: TrainingReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            _dump_line(
                {
                    "schema": REPORT_SCHEMA,
                    "version": FORMAT_VERSION,
                    "seed": report.seed,
                    "config": report.config,
                }
            )
        )
        for row in report.rows:
            fh.write(
                _dump_line(
                    {
                        "kind": "epoch",
                        "epoch": row.epoch,
                        "phase": row.phase,
                        "k": row.k,
                        "alpha_f": row.alpha_f,
                        "lr": row.lr,
                        "hard_size": row.hard_size,
                        "easy_size": row.easy_size,
                        "mean_loss_hard": row.mean_loss_hard,
                        "mean_loss_easy": row.mean_loss_easy,
                    }
                )
            )
        for state in report.fqs_table:
            fh.write(
                _dump_line(
                    {
                        "kind": "fqs",
                        "sample_id": state.sample_id,
                        "q": state.q,
                        "d": state.d,
                        "fqs": state.fqs,
                        "last_updated_epoch": state.last_updated_epoch,
                    }
                )
            )


def load_report(path: str | Path) -> TrainingReport:
    path = Path(path)
    rows: list[EpochRow] = []
    table: list[QualityState] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = read_header(fh, str(path), REPORT_SCHEMA)
        if header is None:
            raise ParseError(f"{path}: empty report")
        seed = header.get("seed")
        config = header.get("config", {})
        if not isinstance(seed, int):
            raise ParseError(f"{path}:1: header is missing an integer seed")
        for lineno, obj in _iter_records(fh, str(path)):
            kind = obj.get("kind")
            try:
                if kind == "epoch":
                    rows.append(
                        EpochRow(
                            epoch=int(obj["epoch"]),
                            phase=str(obj["phase"]),
                            k=int(obj["k"]),
                            alpha_f=float(obj["alpha_f"]),
                            lr=float(obj["lr"]),
                            hard_size=int(obj["hard_size"]),
                            easy_size=int(obj["easy_size"]),
                            mean_loss_hard=(
                                None
                                if obj["mean_loss_hard"] is None
                                else float(obj["mean_loss_hard"])
                            ),
                            mean_loss_easy=(
                                None
                                if obj["mean_loss_easy"] is None
                                else float(obj["mean_loss_easy"])
                            ),
                        )
                    )
                elif kind == "fqs":
                    table.append(
                        QualityState(
                            sample_id=str(obj["sample_id"]),
                            q=float(obj["q"]),
                            d=float(obj["d"]),
                            fqs=float(obj["fqs"]),
                            last_updated_epoch=int(obj["last_updated_epoch"]),
                        )
                    )
                else:
                    raise ParseError(f"{path}:{lineno}: unknown row kind {kind!r}")
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: bad report row ({exc})") from exc
    return TrainingReport(seed=seed, config=config, rows=rows, fqs_table=table)


# ---------------------------------------------------------------------------
# synthetic dataset


def _smooth_image(size: int, rng: np.random.Generator) -> np.ndarray:
    """Low-frequency pattern in [0.25, 0.75], one per call."""
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    img = np.zeros((size, size, 3))
    for c in range(3):
        fy, fx = rng.uniform(0.5, 2.0, size=2)
        py, px = rng.uniform(0, 2 * np.pi, size=2)
        wave = np.sin(2 * np.pi * fy * yy / size + py) + np.sin(
            2 * np.pi * fx * xx / size + px
        )
        img[:, :, c] = wave
    lo, hi = img.min(), img.max()
    return 0.25 + 0.5 * (img - lo) / (hi - lo)


def _forge_image(
    base: np.ndarray, size: int, rng: np.random.Generator
) -> np.ndarray:
    """A fake: the paired real's pixels plus high-frequency artifacts."""
    img = base.copy()
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    checker = 0.06 * np.cos(np.pi * (yy + xx))
    img += checker[:, :, None]
    top, left = rng.integers(0, size - size // 4, size=2)
    patch = size // 4
    img[top : top + patch, left : left + patch] += rng.uniform(
        -0.1, 0.1, size=(patch, patch, 3)
    )
    return np.clip(img, 0.05, 0.95)


def synthesize_dataset(
    out_dir: str | Path,
    n_real: int = 100,
    n_hard: int = 50,
    n_easy: int = 50,
    dim: int = 8,
    image_size: int = 32,
    seed: int = 7,
) -> tuple[Path, Path]:
    """Build a dataset where quality tiers are separable by construction.

    Hard fakes' embeddings sit next to their paired real's (static score
    near 1, and near-impossible for the toy classifier), easy fakes' sit
    in the opposite half-space (static score near -1, trivially
    separable).  Returns (manifest_path, embeddings_path).
    """
    if n_hard + n_easy > n_real:
        raise DimensionError("need n_hard + n_easy <= n_real for 1:1 pairing")
    out_dir = Path(out_dir)
    images = out_dir / "images"
    images.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    axis = np.zeros(dim)
    axis[0] = 1.0

    def unit(v: np.ndarray) -> np.ndarray:
        return v / np.linalg.norm(v)

    records: list[SampleRecord] = []
    table: dict[str, np.ndarray] = {}
    real_images: dict[str, np.ndarray] = {}

    for i in range(n_real):
        sample_id = f"real{i:03d}"
        table[sample_id] = unit(axis + 0.15 * rng.normal(size=dim))
        img = _smooth_image(image_size, rng)
        real_images[sample_id] = img
        rel = f"images/{sample_id}.png"
        dataio.save_image(img, out_dir / rel)
        records.append(SampleRecord(sample_id, LABEL_REAL, rel, None, "capture"))

    for j in range(n_hard):
        sample_id = f"hard{j:03d}"
        real_id = f"real{j:03d}"
        table[sample_id] = unit(table[real_id] + 0.05 * rng.normal(size=dim))
        img = _forge_image(real_images[real_id], image_size, rng)
        rel = f"images/{sample_id}.png"
        dataio.save_image(img, out_dir / rel)
        records.append(SampleRecord(sample_id, LABEL_FAKE, rel, real_id, "highq-swap"))

    for j in range(n_easy):
        sample_id = f"easy{j:03d}"
        real_id = f"real{n_hard + j:03d}"
        table[sample_id] = unit(-axis + 0.15 * rng.normal(size=dim))
        img = _forge_image(real_images[real_id], image_size, rng)
        rel = f"images/{sample_id}.png"
        dataio.save_image(img, out_dir / rel)
        records.append(SampleRecord(sample_id, LABEL_FAKE, rel, real_id, "lowq-swap"))

    manifest_path = out_dir / "manifest.jsonl"
    embeddings_path = out_dir / "embeddings.txt"
    dataio.save_manifest(records, manifest_path)
    dataio.save_embeddings(table, embeddings_path)
    return manifest_path, embeddings_path

"""Session protocol around the curriculum scheduler.

An external training loop drives one epoch at a time: open a session, ask
for the next epoch's pool, train on it, submit the per-sample losses, and
repeat; closing yields the final per-sample quality table.  All scheduling
decisions delegate to the library core, so a session's pool sequence is
bit-identical to an offline loss-log replay.

Call order is policed: losses arrive strictly in epoch order, a curriculum
epoch cannot be planned until every earlier epoch's losses are in (warm-up
pools don't depend on losses, so those may be fetched ahead), and nothing
works on a closed session.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from curriforge import (
    CurriculumScheduler,
    LossRecord,
    compute_static_scores,
    cosine_lr,
    load_embeddings,
    load_manifest,
)
from curriforge.cli import load_config
from curriforge.dataio import image_abspath, load_image, save_image
from curriforge.errors import (
    ConfigError,
    DuplicateError,
    InputError,
    ScheduleError,
    SessionStateError,
)
from curriforge.freda import augmented_id, default_radius, freda
from curriforge.pacing import ScheduleRow, schedule_row


@dataclass
class EpochPool:
    """One epoch's assignment for the external loop.

    Hard-pool fakes and all reals train as-is; easy-pool fakes are replaced
    by the augmented images at the listed paths.
    """

    epoch: int
    phase: str
    hard_ids: list[str]
    easy_ids_with_freda_paths: dict[str, str]
    lr_hint: float
    alpha_f: float
    k: int


@dataclass
class SchedulerSession:
    """Opaque handle; construct through open_session only."""

    _scheduler: CurriculumScheduler
    _manifest_path: Path
    _records_by_id: dict
    _freda_dir: Path
    _freda_radius: int | None
    _total_epochs: int
    _warmup_epochs: int
    _lr_max: float
    _plan_cursor: int = 0
    _submitted: int = 0
    _closed: bool = False
    _rows: list[ScheduleRow] = field(default_factory=list)
    _materialized: dict[str, str] = field(default_factory=dict)

    def schedule_rows(self) -> list[ScheduleRow]:
        """Audit trail: one row per pool handed out so far."""
        return list(self._rows)


def open_session(
    config_path,
    manifest_path,
    embeddings_path,
    workdir=None,
) -> SchedulerSession:
    """Validate inputs and stand up a scheduler ready for epoch 0.

    Augmented images are written under ``workdir`` (default: the config's
    out_dir path) as they are assigned.
    """
    cfg, paths = load_config(config_path)
    manifest_path = Path(manifest_path)
    records = load_manifest(manifest_path)
    table = load_embeddings(embeddings_path, expected_ids=[r.sample_id for r in records])
    scores = compute_static_scores(records, table)
    scheduler = CurriculumScheduler(cfg.pacing, cfg.fqs, scores, cfg.seed)

    if workdir is None:
        workdir = paths.get("out_dir")
    if workdir is None:
        raise ConfigError(
            "no working directory: pass workdir= or set paths.out_dir in the config"
        )
    freda_dir = Path(workdir) / "freda"

    return SchedulerSession(
        _scheduler=scheduler,
        _manifest_path=manifest_path,
        _records_by_id={r.sample_id: r for r in records},
        _freda_dir=freda_dir,
        _freda_radius=cfg.freda_radius,
        _total_epochs=cfg.pacing.total_epochs,
        _warmup_epochs=cfg.pacing.warmup_epochs,
        _lr_max=cfg.fqs.lr_max,
    )


def _require_open(session: SchedulerSession) -> None:
    if session._closed:
        raise SessionStateError("session is closed")


def _materialize(session: SchedulerSession, easy_id: str) -> str:
    cached = session._materialized.get(easy_id)
    if cached is not None:
        return cached
    record = session._records_by_id[easy_id]
    fake_img = load_image(image_abspath(session._manifest_path, record))
    real_rec = session._records_by_id[record.paired_real_id]
    real_img = load_image(image_abspath(session._manifest_path, real_rec))
    radius = (
        session._freda_radius
        if session._freda_radius is not None
        else default_radius(fake_img.shape[0], fake_img.shape[1])
    )
    out_path = session._freda_dir / f"{augmented_id(easy_id)}.png"
    session._freda_dir.mkdir(parents=True, exist_ok=True)
    save_image(freda(fake_img, real_img, radius), out_path)
    session._materialized[easy_id] = str(out_path)
    return str(out_path)


def next_pool(session: SchedulerSession) -> EpochPool:
    """Plan the next epoch and hand its pool to the caller."""
    _require_open(session)
    t = session._plan_cursor
    if t >= session._total_epochs:
        raise SessionStateError(
            f"schedule exhausted after {session._total_epochs} epoch(s)"
        )
    if t >= session._warmup_epochs and session._submitted < t:
        raise SessionStateError(
            f"epoch {session._submitted} losses must be submitted "
            f"before epoch {t} can be planned"
        )

    plan = session._scheduler.plan_epoch(t)
    easy_paths = {i: _materialize(session, i) for i in sorted(plan.easy_ids)}
    session._rows.append(schedule_row(plan))
    session._plan_cursor = t + 1
    return EpochPool(
        epoch=t,
        phase=plan.phase,
        hard_ids=sorted(plan.hard_ids),
        easy_ids_with_freda_paths=easy_paths,
        lr_hint=cosine_lr(t, session._total_epochs, session._lr_max),
        alpha_f=plan.alpha_f_current,
        k=plan.k_current,
    )


def submit_losses(session: SchedulerSession, epoch: int, records) -> dict:
    """Feed one epoch's per-sample losses into the scheduler."""
    _require_open(session)
    if epoch < session._submitted:
        raise SessionStateError(f"epoch {epoch} losses were already submitted")
    if epoch != session._submitted:
        raise SessionStateError(
            f"expected epoch {session._submitted} losses next, got epoch {epoch}"
        )
    if epoch >= session._plan_cursor:
        raise SessionStateError(f"epoch {epoch} has not been planned yet")

    records = list(records)
    seen: set[str] = set()
    epoch_lr: float | None = None
    for rec in records:
        if not isinstance(rec, LossRecord):
            raise InputError(f"expected LossRecord, got {type(rec).__name__}")
        if rec.epoch != epoch:
            raise InputError(f"record for epoch {rec.epoch} in epoch {epoch} batch")
        if rec.sample_id in seen:
            raise DuplicateError(f"duplicate loss for {rec.sample_id!r} in epoch {epoch}")
        if not math.isfinite(rec.loss) or rec.loss < 0:
            raise InputError(f"loss must be finite and non-negative, got {rec.loss}")
        if not math.isfinite(rec.lr) or rec.lr <= 0:
            raise ScheduleError(f"lr must be finite and positive, got {rec.lr}")
        if epoch_lr is None:
            epoch_lr = rec.lr
        elif rec.lr != epoch_lr:
            raise ScheduleError(
                f"epoch {epoch} lr disagrees: {rec.lr} vs {epoch_lr}"
            )
        seen.add(rec.sample_id)

    session._scheduler.observe_losses(epoch, records)
    session._submitted = epoch + 1
    return {"epoch": epoch, "accepted": len(records)}


def close_session(session: SchedulerSession):
    """Finish the session and return the final per-sample quality table."""
    _require_open(session)
    if session._submitted < session._warmup_epochs:
        raise SessionStateError(
            "cannot close before all warm-up losses are submitted "
            f"({session._submitted} of {session._warmup_epochs} epochs in)"
        )
    table = session._scheduler.final_table()
    session._closed = True
    return table

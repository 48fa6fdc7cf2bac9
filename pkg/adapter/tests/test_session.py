from __future__ import annotations

import math

import numpy as np
import pytest

from curriforge import LossRecord, cosine_lr
from curriforge.dataio import load_image
from curriforge.errors import (
    ConfigError,
    DuplicateError,
    InputError,
    PipelineError,
    ScheduleError,
    SessionStateError,
)
from curriforge.freda import freda

from curriforge_adapter import close_session, next_pool, open_session, submit_losses


def drive_epoch(session, pool, loss=0.6):
    ids = sorted(set(pool.hard_ids) | set(pool.easy_ids_with_freda_paths))
    records = [LossRecord(pool.epoch, i, loss, pool.lr_hint) for i in ids]
    return submit_losses(session, pool.epoch, records)


# ---------------------------------------------------------------------------
# protocol happy path


def test_warmup_pool_before_any_submission(small_session_setup):
    config, manifest, embeddings = small_session_setup
    session = open_session(config, manifest, embeddings)
    pool = next_pool(session)
    assert pool.epoch == 0
    assert pool.phase == "warmup"
    assert len(pool.hard_ids) == 10  # every fake trains during warm-up
    assert pool.easy_ids_with_freda_paths == {}
    assert pool.k == 10
    assert pool.alpha_f == 0.5
    assert pool.lr_hint == cosine_lr(0, 4, 0.1)


def test_full_drive_returns_quality_table(small_session_setup):
    config, manifest, embeddings = small_session_setup
    session = open_session(config, manifest, embeddings)
    for t in range(4):
        pool = next_pool(session)
        assert pool.epoch == t
        ack = drive_epoch(session, pool)
        assert ack == {"epoch": t, "accepted": len(pool.hard_ids) + len(pool.easy_ids_with_freda_paths)}
    table = close_session(session)
    assert len(table) == 10
    assert [s.sample_id for s in table] == sorted(s.sample_id for s in table)
    assert all(math.isfinite(s.fqs) for s in table)


def test_warmup_pools_may_run_ahead_of_submissions(small_session_setup):
    config, manifest, embeddings = small_session_setup
    session = open_session(config, manifest, embeddings)
    first = next_pool(session)
    second = next_pool(session)  # both warm-up epochs, no losses needed yet
    assert [first.epoch, second.epoch] == [0, 1]
    drive_epoch(session, first)
    drive_epoch(session, second)
    third = next_pool(session)
    assert third.phase == "curriculum"


def test_independent_sessions_coexist(small_session_setup):
    config, manifest, embeddings = small_session_setup
    a = open_session(config, manifest, embeddings)
    b = open_session(config, manifest, embeddings)
    pool_a = next_pool(a)
    drive_epoch(a, pool_a, loss=0.9)
    # b's cursor is untouched by a's progress
    pool_b = next_pool(b)
    assert pool_b.epoch == 0


# ---------------------------------------------------------------------------
# protocol violations


def test_submit_for_past_epoch_is_rejected(small_session_setup):
    config, manifest, embeddings = small_session_setup
    session = open_session(config, manifest, embeddings)
    pool = next_pool(session)
    drive_epoch(session, pool)
    with pytest.raises(SessionStateError) as exc:
        drive_epoch(session, pool)
    assert exc.value.code == "E_STATE"
    assert "already" in str(exc.value)


def test_submit_skipping_an_epoch_is_rejected(small_session_setup):
    config, manifest, embeddings = small_session_setup
    session = open_session(config, manifest, embeddings)
    next_pool(session)
    with pytest.raises(SessionStateError):
        submit_losses(session, 1, [LossRecord(1, "real000", 0.5, 0.1)])


def test_submit_before_pool_is_rejected(small_session_setup):
    config, manifest, embeddings = small_session_setup
    session = open_session(config, manifest, embeddings)
    with pytest.raises(SessionStateError):
        submit_losses(session, 0, [LossRecord(0, "real000", 0.5, 0.1)])


def test_curriculum_pool_requires_all_prior_losses(small_session_setup):
    config, manifest, embeddings = small_session_setup
    session = open_session(config, manifest, embeddings)
    next_pool(session)
    next_pool(session)
    with pytest.raises(SessionStateError):  # warm-up over, epoch 0+1 losses missing
        next_pool(session)


def test_pool_after_schedule_end_is_rejected(small_session_setup):
    config, manifest, embeddings = small_session_setup
    session = open_session(config, manifest, embeddings)
    for _ in range(4):
        drive_epoch(session, next_pool(session))
    with pytest.raises(SessionStateError):
        next_pool(session)


def test_close_before_warmup_losses_is_rejected(small_session_setup):
    config, manifest, embeddings = small_session_setup
    session = open_session(config, manifest, embeddings)
    next_pool(session)
    with pytest.raises(SessionStateError):
        close_session(session)


def test_closed_session_rejects_everything(small_session_setup):
    config, manifest, embeddings = small_session_setup
    session = open_session(config, manifest, embeddings)
    drive_epoch(session, next_pool(session))
    drive_epoch(session, next_pool(session))
    close_session(session)
    for call in (
        lambda: next_pool(session),
        lambda: submit_losses(session, 2, []),
        lambda: close_session(session),
    ):
        with pytest.raises(SessionStateError):
            call()


# ---------------------------------------------------------------------------
# record validation mirrors the primary codes


def _open_with_pool(setup):
    config, manifest, embeddings = setup
    session = open_session(config, manifest, embeddings)
    pool = next_pool(session)
    return session, pool


def test_duplicate_sample_in_batch(small_session_setup):
    session, pool = _open_with_pool(small_session_setup)
    rec = LossRecord(0, "hard000", 0.5, pool.lr_hint)
    with pytest.raises(DuplicateError) as exc:
        submit_losses(session, 0, [rec, rec])
    assert exc.value.code == "E_DUP"


def test_record_for_wrong_epoch(small_session_setup):
    session, pool = _open_with_pool(small_session_setup)
    with pytest.raises(InputError):
        submit_losses(session, 0, [LossRecord(3, "hard000", 0.5, pool.lr_hint)])


def test_negative_loss(small_session_setup):
    session, pool = _open_with_pool(small_session_setup)
    with pytest.raises(InputError):
        submit_losses(session, 0, [LossRecord(0, "hard000", -0.5, pool.lr_hint)])


def test_inconsistent_lr_within_epoch(small_session_setup):
    session, pool = _open_with_pool(small_session_setup)
    with pytest.raises(ScheduleError) as exc:
        submit_losses(session, 0, [
            LossRecord(0, "hard000", 0.5, 0.1),
            LossRecord(0, "hard001", 0.5, 0.05),
        ])
    assert exc.value.code == "E_SCHEDULE"


def test_rejected_batch_leaves_session_usable(small_session_setup):
    session, pool = _open_with_pool(small_session_setup)
    with pytest.raises(InputError):
        submit_losses(session, 0, [LossRecord(0, "hard000", -1.0, pool.lr_hint)])
    ack = drive_epoch(session, pool)
    assert ack["epoch"] == 0


# ---------------------------------------------------------------------------
# open_session validation


def test_open_requires_a_working_directory(tmp_path, small_session_setup):
    import json

    config, manifest, embeddings = small_session_setup
    obj = json.loads(config.read_text())
    del obj["paths"]["out_dir"]
    config.write_text(json.dumps(obj))
    with pytest.raises(ConfigError):
        open_session(config, manifest, embeddings)
    session = open_session(config, manifest, embeddings, workdir=tmp_path / "w")
    assert next_pool(session).epoch == 0


def test_open_checks_embedding_coverage(tmp_path, small_session_setup):
    config, manifest, embeddings = small_session_setup
    from curriforge.dataio import load_embeddings, save_embeddings

    table = load_embeddings(embeddings)
    del table["hard000"]
    save_embeddings(table, embeddings)
    with pytest.raises(PipelineError) as exc:
        open_session(config, manifest, embeddings)
    assert exc.value.code == "E_COVERAGE"


# ---------------------------------------------------------------------------
# materialized augmentation


def test_easy_pool_paths_hold_augmented_images(tmp_path, small_session_setup):
    config, manifest, embeddings = small_session_setup
    session = open_session(config, manifest, embeddings)
    drive_epoch(session, next_pool(session), loss=0.7)
    drive_epoch(session, next_pool(session), loss=0.7)
    pool = next_pool(session)
    assert pool.phase == "curriculum"
    assert pool.k == 9  # one milestone fired: floor(0.9 * 10)
    assert len(pool.easy_ids_with_freda_paths) == min(2, 10 - pool.k)
    from curriforge.dataio import load_manifest, image_abspath

    by_id = {r.sample_id: r for r in load_manifest(manifest)}
    for easy_id, path_str in pool.easy_ids_with_freda_paths.items():
        out = load_image(path_str)
        fake = load_image(image_abspath(manifest, by_id[easy_id]))
        real = load_image(image_abspath(manifest, by_id[by_id[easy_id].paired_real_id]))
        expected = freda(fake, real, 1)  # default radius: 16 // 16
        assert out.shape == fake.shape
        assert np.max(np.abs(out - expected)) <= 0.5 / 255 + 1e-9
        assert path_str.endswith(f"{easy_id}#freda.png")

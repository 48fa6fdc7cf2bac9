from __future__ import annotations

import json

import numpy as np
import pytest

from curriforge import dataio
from curriforge.dataio import LossRecord, SampleRecord
from curriforge.errors import (
    DuplicateError,
    InputError,
    ParseError,
    PipelineError,
    ReferenceError_,
    ScheduleError,
)


def write_manifest_lines(path, rows, schema="sample-manifest"):
    lines = [json.dumps({"schema": schema, "version": 1})]
    lines += [json.dumps(r) for r in rows]
    path.write_text("\n".join(lines) + "\n")


def touch_image(tmp_path, name):
    p = tmp_path / name
    p.write_bytes(b"\x89PNG\r\n\x1a\n")
    return name


# ---------------------------------------------------------------------------
# manifest


def test_load_manifest_missing_file(tmp_path):
    # raw OS error at the library layer; the CLI maps it to a stable code
    with pytest.raises(FileNotFoundError):
        dataio.load_manifest(tmp_path / "nope.jsonl")


def test_load_manifest_header_only(tmp_path):
    path = tmp_path / "m.jsonl"
    write_manifest_lines(path, [])
    assert dataio.load_manifest(path) == []


def test_load_manifest_sorts_and_links(tmp_path):
    path = tmp_path / "m.jsonl"
    rows = [
        {"sample_id": "r1", "label": "REAL", "image_path": touch_image(tmp_path, "r1.png")},
        {"sample_id": "f1", "label": "FAKE", "image_path": touch_image(tmp_path, "f1.png"), "paired_real_id": "r1"},
        {"sample_id": "r0", "label": "REAL", "image_path": touch_image(tmp_path, "r0.png"), "source_tag": "capture"},
        {"sample_id": "f0", "label": "FAKE", "image_path": touch_image(tmp_path, "f0.png"), "paired_real_id": "r0"},
    ]
    write_manifest_lines(path, rows)
    records = dataio.load_manifest(path)
    assert [r.sample_id for r in records] == ["f0", "f1", "r0", "r1"]
    assert records[0].paired_real_id == "r0"
    assert records[2].source_tag == "capture"


def test_load_manifest_rejects_dangling_pair(tmp_path):
    path = tmp_path / "m.jsonl"
    write_manifest_lines(path, [
        {"sample_id": "f0", "label": "FAKE", "image_path": touch_image(tmp_path, "f0.png"), "paired_real_id": "ghost"},
    ])
    with pytest.raises(ReferenceError_):
        dataio.load_manifest(path)


def test_load_manifest_rejects_fake_without_pair(tmp_path):
    path = tmp_path / "m.jsonl"
    write_manifest_lines(path, [
        {"sample_id": "f0", "label": "FAKE", "image_path": touch_image(tmp_path, "f0.png")},
    ])
    with pytest.raises(ReferenceError_):
        dataio.load_manifest(path)


def test_load_manifest_rejects_pair_to_fake(tmp_path):
    path = tmp_path / "m.jsonl"
    write_manifest_lines(path, [
        {"sample_id": "r0", "label": "REAL", "image_path": touch_image(tmp_path, "r0.png")},
        {"sample_id": "f0", "label": "FAKE", "image_path": touch_image(tmp_path, "f0.png"), "paired_real_id": "r0"},
        {"sample_id": "f1", "label": "FAKE", "image_path": touch_image(tmp_path, "f1.png"), "paired_real_id": "f0"},
    ])
    with pytest.raises(ReferenceError_):
        dataio.load_manifest(path)


def test_load_manifest_rejects_missing_image(tmp_path):
    path = tmp_path / "m.jsonl"
    write_manifest_lines(path, [
        {"sample_id": "r0", "label": "REAL", "image_path": "absent.png"},
    ])
    with pytest.raises(ReferenceError_):
        dataio.load_manifest(path)
    assert dataio.load_manifest(path, check_paths=False)[0].sample_id == "r0"


def test_load_manifest_rejects_duplicate_id(tmp_path):
    path = tmp_path / "m.jsonl"
    img = touch_image(tmp_path, "r0.png")
    write_manifest_lines(path, [
        {"sample_id": "r0", "label": "REAL", "image_path": img},
        {"sample_id": "r0", "label": "REAL", "image_path": img},
    ])
    with pytest.raises(DuplicateError):
        dataio.load_manifest(path)


def test_load_manifest_parse_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text(
        json.dumps({"schema": "sample-manifest", "version": 1})
        + "\n{not json\n"
    )
    with pytest.raises(ParseError) as exc:
        dataio.load_manifest(path)
    assert ":2:" in str(exc.value)


def test_load_manifest_rejects_whitespace_id(tmp_path):
    path = tmp_path / "m.jsonl"
    write_manifest_lines(path, [
        {"sample_id": "r 0", "label": "REAL", "image_path": touch_image(tmp_path, "r0.png")},
    ])
    with pytest.raises(ParseError):
        dataio.load_manifest(path)


def test_load_manifest_rejects_unknown_label(tmp_path):
    path = tmp_path / "m.jsonl"
    write_manifest_lines(path, [
        {"sample_id": "r0", "label": "GENUINE", "image_path": touch_image(tmp_path, "r0.png")},
    ])
    with pytest.raises(ParseError):
        dataio.load_manifest(path)


def test_load_manifest_rejects_wrong_schema(tmp_path):
    path = tmp_path / "m.jsonl"
    write_manifest_lines(path, [], schema="loss-log")
    with pytest.raises(ParseError):
        dataio.load_manifest(path)


def test_manifest_round_trip_is_byte_stable(tmp_path):
    records = [
        SampleRecord("f0", "FAKE", "f0.png", "r0", "swap"),
        SampleRecord("r0", "REAL", "r0.png"),
    ]
    for name in ("f0.png", "r0.png"):
        touch_image(tmp_path, name)
    path = tmp_path / "m.jsonl"
    dataio.save_manifest(records, path)
    loaded = dataio.load_manifest(path)
    assert loaded == sorted(records, key=lambda r: r.sample_id)
    first = path.read_bytes()
    dataio.save_manifest(loaded, path)
    assert path.read_bytes() == first


def test_image_abspath_resolves_relative_to_manifest(tmp_path):
    record = SampleRecord("r0", "REAL", "images/r0.png")
    got = dataio.image_abspath(tmp_path / "m.jsonl", record)
    assert got == tmp_path / "images" / "r0.png"


# ---------------------------------------------------------------------------
# embeddings


def _table(ids, dim, seed=0):
    rng = np.random.default_rng(seed)
    return {i: rng.normal(size=dim) for i in ids}


def test_embeddings_text_round_trip_exact(tmp_path):
    table = _table(["a", "b", "c"], 4)
    path = tmp_path / "emb.txt"
    dataio.save_embeddings(table, path)
    loaded = dataio.load_embeddings(path)
    assert set(loaded) == {"a", "b", "c"}
    for i in table:
        assert np.array_equal(loaded[i], table[i])


def test_embeddings_binary_round_trip(tmp_path):
    table = _table(["a", "b"], 6, seed=3)
    path = tmp_path / "emb.bin"
    dataio.save_embeddings(table, path, binary=True)
    assert path.read_bytes()[:4] == dataio.EMBEDDINGS_MAGIC
    loaded = dataio.load_embeddings(path)
    for i in table:
        assert np.array_equal(loaded[i], table[i])


def test_embeddings_coverage_check(tmp_path):
    path = tmp_path / "emb.txt"
    dataio.save_embeddings(_table(["a"], 4), path)
    with pytest.raises(PipelineError) as exc:
        dataio.load_embeddings(path, expected_ids=["a", "b"])
    assert exc.value.code == "E_COVERAGE"


def _text_embeddings(path, dim, count, rows):
    header = json.dumps({"schema": "embeddings", "version": 1, "dim": dim, "count": count})
    path.write_text(header + "\n" + "".join(r + "\n" for r in rows))


def test_embeddings_reject_inconsistent_dim(tmp_path):
    path = tmp_path / "emb.txt"
    _text_embeddings(path, 3, 2, ["a 1.0 2.0 3.0", "b 1.0 2.0"])
    with pytest.raises(ParseError):
        dataio.load_embeddings(path)


def test_embeddings_reject_count_mismatch(tmp_path):
    path = tmp_path / "emb.txt"
    _text_embeddings(path, 2, 2, ["a 1.0 2.0"])
    with pytest.raises(ParseError):
        dataio.load_embeddings(path)


def test_embeddings_reject_nonfinite(tmp_path):
    path = tmp_path / "emb.txt"
    _text_embeddings(path, 2, 1, ["a 1.0 nan"])
    with pytest.raises(ParseError):
        dataio.load_embeddings(path)


def test_embeddings_reject_non_numeric(tmp_path):
    path = tmp_path / "emb.txt"
    _text_embeddings(path, 2, 1, ["a 1.0 xyz"])
    with pytest.raises(ParseError):
        dataio.load_embeddings(path)


def test_embeddings_reject_duplicates(tmp_path):
    path = tmp_path / "emb.txt"
    _text_embeddings(path, 1, 2, ["a 1.0", "a 1.0"])
    with pytest.raises(DuplicateError):
        dataio.load_embeddings(path)


def test_embeddings_binary_truncation_is_parse_error(tmp_path):
    table = _table(["a", "b"], 6)
    path = tmp_path / "emb.bin"
    dataio.save_embeddings(table, path, binary=True)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) - 5])
    with pytest.raises(ParseError):
        dataio.load_embeddings(path)


# ---------------------------------------------------------------------------
# loss log


def test_loss_log_append_and_read(tmp_path):
    path = tmp_path / "losses.jsonl"
    records = [
        LossRecord(0, "a", 0.7, 0.1),
        LossRecord(0, "b", 0.6, 0.1),
        LossRecord(1, "a", 0.5, 0.09),
    ]
    with dataio.LossLogWriter(path) as writer:
        for r in records:
            writer.append([r])
    assert dataio.load_loss_log(path) == records
    assert dataio.read_epoch_losses(path, 0) == records[:2]
    assert dataio.read_epoch_losses(path, 5) == []


def test_loss_log_writer_reopen_seeds_duplicate_check(tmp_path):
    path = tmp_path / "losses.jsonl"
    with dataio.LossLogWriter(path) as writer:
        writer.append([LossRecord(0, "a", 0.7, 0.1)])
    with dataio.LossLogWriter(path) as writer:
        writer.append([LossRecord(0, "b", 0.6, 0.1)])
        with pytest.raises(DuplicateError):
            writer.append([LossRecord(0, "a", 0.5, 0.1)])


def test_loss_log_rejects_lr_disagreement_within_epoch(tmp_path):
    path = tmp_path / "losses.jsonl"
    with dataio.LossLogWriter(path) as writer:
        writer.append([LossRecord(0, "a", 0.7, 0.1)])
        with pytest.raises(ScheduleError):
            writer.append([LossRecord(0, "b", 0.6, 0.05)])


def test_loss_log_rejects_negative_loss(tmp_path):
    path = tmp_path / "losses.jsonl"
    with dataio.LossLogWriter(path) as writer:
        with pytest.raises(InputError):
            writer.append([LossRecord(0, "a", -0.1, 0.1)])
        with pytest.raises(InputError):
            writer.append([LossRecord(0, "a", float("nan"), 0.1)])


def test_loss_log_load_detects_duplicates(tmp_path):
    path = tmp_path / "losses.jsonl"
    header = json.dumps({"schema": "loss-log", "version": 1})
    row = json.dumps({"epoch": 0, "sample_id": "a", "loss": 0.5, "lr": 0.1})
    path.write_text(header + "\n" + row + "\n" + row + "\n")
    with pytest.raises(DuplicateError):
        dataio.load_loss_log(path)


def test_loss_log_save_round_trip(tmp_path):
    records = [LossRecord(0, "a", 0.7, 0.1), LossRecord(1, "a", 0.4, 0.05)]
    path = tmp_path / "losses.jsonl"
    dataio.save_loss_log(records, path)
    assert dataio.load_loss_log(path) == records


# ---------------------------------------------------------------------------
# static scores


def test_scores_round_trip(tmp_path):
    scores = {"a": 0.9999999999, "b": -1.0, "c": 0.0}
    path = tmp_path / "scores.jsonl"
    dataio.save_scores(scores, path)
    assert dataio.load_scores(path) == scores


def test_scores_reject_duplicates(tmp_path):
    path = tmp_path / "scores.jsonl"
    header = json.dumps({"schema": "static-scores", "version": 1})
    row = json.dumps({"sample_id": "a", "q": 0.5})
    path.write_text(header + "\n" + row + "\n" + row + "\n")
    with pytest.raises(DuplicateError):
        dataio.load_scores(path)


# ---------------------------------------------------------------------------
# images


def test_image_round_trip_and_byte_stability(tmp_path):
    rng = np.random.default_rng(11)
    img = rng.uniform(size=(9, 7, 3))
    path = tmp_path / "img.png"
    dataio.save_image(img, path)
    loaded = dataio.load_image(path)
    assert loaded.shape == (9, 7, 3)
    assert np.max(np.abs(loaded - img)) <= 0.5 / 255 + 1e-12
    first = path.read_bytes()
    dataio.save_image(loaded, path)
    assert path.read_bytes() == first


def test_image_grayscale_keeps_single_channel(tmp_path):
    img = np.linspace(0, 1, 64).reshape(8, 8, 1)
    path = tmp_path / "g.png"
    dataio.save_image(img, path)
    assert dataio.load_image(path).shape == (8, 8, 1)

"""Manifest, embeddings, loss-log, and image ingestion/validation.

Every on-disk format is line-delimited: a JSON header line carrying a
``schema`` name and ``version``, then one record per line.  The embeddings
table additionally has a packed binary twin with identical semantics,
recognized by a magic prefix.  Exact field orders live in FORMATS.md.

All loaders validate on entry and raise subclasses of
:class:`~curriforge.errors.PipelineError`; nothing downstream re-checks.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, TextIO

import numpy as np
from PIL import Image

from .errors import (
    CoverageError,
    DimensionError,
    DuplicateError,
    InputError,
    ParseError,
    ReferenceError_,
    ScheduleError,
)

LABEL_REAL = "REAL"
LABEL_FAKE = "FAKE"

MANIFEST_SCHEMA = "sample-manifest"
EMBEDDINGS_SCHEMA = "embeddings"
LOSS_LOG_SCHEMA = "loss-log"
SCORES_SCHEMA = "static-scores"

FORMAT_VERSION = 1

# Binary embeddings magic; text files start with "{" so sniffing is unambiguous.
EMBEDDINGS_MAGIC = b"EMB\x01"


@dataclass(frozen=True)
class SampleRecord:
    """One dataset entry: a real face crop or a fake paired with its real."""

    sample_id: str
    label: str
    image_path: str
    paired_real_id: str | None = None
    source_tag: str = ""


@dataclass(frozen=True)
class LossRecord:
    """One observed per-sample loss at a given epoch and learning rate."""

    epoch: int
    sample_id: str
    loss: float
    lr: float


# ---------------------------------------------------------------------------
# line-delimited plumbing


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":")) + "\n"


def _parse_json_line(line: str, path: str, lineno: int) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"{path}:{lineno}: expected a JSON object")
    return obj


def read_header(fh: TextIO, path: str, schema: str) -> dict | None:
    """Read and validate the header line; None for a zero-byte file."""
    first = fh.readline()
    if first == "":
        return None
    header = _parse_json_line(first, path, 1)
    if header.get("schema") != schema:
        raise ParseError(
            f"{path}:1: expected schema {schema!r}, got {header.get('schema')!r}"
        )
    version = header.get("version")
    if version != FORMAT_VERSION:
        raise ParseError(f"{path}:1: unsupported version {version!r}")
    return header


def _iter_records(fh: TextIO, path: str) -> Iterator[tuple[int, dict]]:
    for lineno, line in enumerate(fh, start=2):
        if line.strip() == "":
            continue
        yield lineno, _parse_json_line(line, path, lineno)


# ---------------------------------------------------------------------------
# manifest


def _require_str(obj: dict, key: str, path: str, lineno: int) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or value == "":
        raise ParseError(f"{path}:{lineno}: field {key!r} must be a non-empty string")
    return value


def load_manifest(path: str | Path, check_paths: bool = True) -> list[SampleRecord]:
    """Load and validate a sample manifest.

    Returns records in stable order by sample_id.  Enforces id uniqueness,
    label domain, fake-to-real referential integrity, and (by default) that
    every image path resolves relative to the manifest's directory.
    """
    path = Path(path)
    records: list[SampleRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = read_header(fh, str(path), MANIFEST_SCHEMA)
        if header is None:
            return []
        for lineno, obj in _iter_records(fh, str(path)):
            sample_id = _require_str(obj, "sample_id", str(path), lineno)
            if any(ch.isspace() for ch in sample_id):
                raise ParseError(
                    f"{path}:{lineno}: sample_id may not contain whitespace"
                )
            label = _require_str(obj, "label", str(path), lineno)
            if label not in (LABEL_REAL, LABEL_FAKE):
                raise ParseError(f"{path}:{lineno}: unknown label {label!r}")
            image_path = _require_str(obj, "image_path", str(path), lineno)
            paired = obj.get("paired_real_id")
            if paired is not None and not isinstance(paired, str):
                raise ParseError(f"{path}:{lineno}: paired_real_id must be a string")
            source_tag = obj.get("source_tag", "")
            if not isinstance(source_tag, str):
                raise ParseError(f"{path}:{lineno}: source_tag must be a string")
            records.append(
                SampleRecord(sample_id, label, image_path, paired, source_tag)
            )

    by_id: dict[str, SampleRecord] = {}
    for rec in records:
        if rec.sample_id in by_id:
            raise DuplicateError(f"duplicate sample_id {rec.sample_id!r}")
        by_id[rec.sample_id] = rec

    for rec in records:
        if rec.label == LABEL_FAKE:
            if rec.paired_real_id is None:
                raise ReferenceError_(
                    f"FAKE sample {rec.sample_id!r} has no paired_real_id"
                )
            target = by_id.get(rec.paired_real_id)
            if target is None:
                raise ReferenceError_(
                    f"sample {rec.sample_id!r} pairs to missing id "
                    f"{rec.paired_real_id!r}"
                )
            if target.label != LABEL_REAL:
                raise ReferenceError_(
                    f"sample {rec.sample_id!r} pairs to non-REAL id "
                    f"{rec.paired_real_id!r}"
                )

    if check_paths:
        base = path.parent
        for rec in records:
            if not (base / rec.image_path).exists():
                raise ReferenceError_(
                    f"sample {rec.sample_id!r}: image path "
                    f"{rec.image_path!r} does not resolve"
                )

    return sorted(records, key=lambda r: r.sample_id)


def save_manifest(records: Iterable[SampleRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dump_line({"schema": MANIFEST_SCHEMA, "version": FORMAT_VERSION}))
        for rec in records:
            fh.write(
                _dump_line(
                    {
                        "sample_id": rec.sample_id,
                        "label": rec.label,
                        "image_path": rec.image_path,
                        "paired_real_id": rec.paired_real_id,
                        "source_tag": rec.source_tag,
                    }
                )
            )


def image_abspath(manifest_path: str | Path, record: SampleRecord) -> Path:
    """Resolve a record's image path against its manifest's directory."""
    return Path(manifest_path).parent / record.image_path


# ---------------------------------------------------------------------------
# embeddings


def _validate_embedding_row(
    sample_id: str, values: np.ndarray, dim: int, where: str
) -> None:
    if values.shape != (dim,):
        raise ParseError(f"{where}: row {sample_id!r} has {values.size} values, expected {dim}")
    if not np.all(np.isfinite(values)):
        raise ParseError(f"{where}: row {sample_id!r} contains non-finite values")


def load_embeddings(
    path: str | Path, expected_ids: Iterable[str] = ()
) -> dict[str, np.ndarray]:
    """Load an id -> vector table (text or packed binary, sniffed by magic).

    Every id in ``expected_ids`` must be present; extra rows are allowed.
    All rows share the header's dimension.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(len(EMBEDDINGS_MAGIC))
    if magic == EMBEDDINGS_MAGIC:
        table = _load_embeddings_binary(path)
    else:
        table = _load_embeddings_text(path)

    missing = sorted(set(expected_ids) - table.keys())
    if missing:
        shown = ", ".join(missing[:5])
        raise CoverageError(
            f"{path}: {len(missing)} required embedding(s) missing: {shown}"
        )
    return table


def _load_embeddings_text(path: Path) -> dict[str, np.ndarray]:
    table: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = read_header(fh, str(path), EMBEDDINGS_SCHEMA)
        if header is None:
            raise ParseError(f"{path}: empty embeddings file")
        dim = header.get("dim")
        count = header.get("count")
        if not isinstance(dim, int) or dim < 1:
            raise ParseError(f"{path}:1: dim must be a positive integer")
        if not isinstance(count, int) or count < 0:
            raise ParseError(f"{path}:1: count must be a non-negative integer")
        for lineno, line in enumerate(fh, start=2):
            if line.strip() == "":
                continue
            parts = line.split()
            sample_id = parts[0]
            try:
                values = np.array([float(p) for p in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-numeric value") from exc
            _validate_embedding_row(sample_id, values, dim, f"{path}:{lineno}")
            if sample_id in table:
                raise DuplicateError(f"{path}:{lineno}: duplicate embedding id {sample_id!r}")
            table[sample_id] = values
    if len(table) != count:
        raise ParseError(f"{path}: header count {count} != {len(table)} rows")
    return table


def _load_embeddings_binary(path: Path) -> dict[str, np.ndarray]:
    table: dict[str, np.ndarray] = {}
    raw = Path(path).read_bytes()
    offset = len(EMBEDDINGS_MAGIC)
    try:
        dim, count = struct.unpack_from("<II", raw, offset)
        offset += 8
        if dim < 1:
            raise ParseError(f"{path}: dim must be positive")
        for _ in range(count):
            (id_len,) = struct.unpack_from("<H", raw, offset)
            offset += 2
            sample_id = raw[offset : offset + id_len].decode("utf-8")
            offset += id_len
            values = np.frombuffer(raw, dtype="<f8", count=dim, offset=offset).astype(
                np.float64
            )
            offset += 8 * dim
            _validate_embedding_row(sample_id, values, dim, str(path))
            if sample_id in table:
                raise DuplicateError(f"{path}: duplicate embedding id {sample_id!r}")
            table[sample_id] = values
    except (struct.error, ValueError) as exc:
        # struct.error: short header or id-length field; ValueError: frombuffer
        # payload cut mid-row or an undecodable id.
        raise ParseError(f"{path}: truncated binary embeddings file") from exc
    if offset != len(raw):
        raise ParseError(f"{path}: {len(raw) - offset} trailing bytes")
    return table


def save_embeddings(
    table: dict[str, np.ndarray], path: str | Path, binary: bool = False
) -> None:
    """Write an embeddings table; text by default, packed binary on request.

    Float values survive a text round trip exactly (shortest-repr encoding).
    """
    items = sorted(table.items())
    if not items:
        dim = 0
    else:
        dim = len(next(iter(table.values())))
    for sample_id, values in items:
        if len(values) != dim:
            raise DimensionError(
                f"embedding {sample_id!r} has dim {len(values)}, expected {dim}"
            )
    if binary:
        chunks = [EMBEDDINGS_MAGIC, struct.pack("<II", max(dim, 1), len(items))]
        for sample_id, values in items:
            encoded = sample_id.encode("utf-8")
            chunks.append(struct.pack("<H", len(encoded)))
            chunks.append(encoded)
            chunks.append(np.asarray(values, dtype="<f8").tobytes())
        Path(path).write_bytes(b"".join(chunks))
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            _dump_line(
                {
                    "schema": EMBEDDINGS_SCHEMA,
                    "version": FORMAT_VERSION,
                    "dim": max(dim, 1),
                    "count": len(items),
                }
            )
        )
        for sample_id, values in items:
            encoded = " ".join(repr(float(v)) for v in values)
            fh.write(f"{sample_id} {encoded}\n")


# ---------------------------------------------------------------------------
# loss log


def _validate_loss_fields(obj: dict, where: str) -> LossRecord:
    epoch = obj.get("epoch")
    if not isinstance(epoch, int) or epoch < 0:
        raise ParseError(f"{where}: epoch must be a non-negative integer")
    sample_id = obj.get("sample_id")
    if not isinstance(sample_id, str) or sample_id == "":
        raise ParseError(f"{where}: sample_id must be a non-empty string")
    loss = obj.get("loss")
    if not isinstance(loss, (int, float)) or not math.isfinite(loss) or loss < 0:
        raise InputError(f"{where}: loss must be finite and non-negative")
    lr = obj.get("lr")
    if not isinstance(lr, (int, float)) or not math.isfinite(lr) or lr <= 0:
        raise ScheduleError(f"{where}: lr must be finite and positive")
    return LossRecord(epoch, sample_id, float(loss), float(lr))


@dataclass
class LossLogWriter:
    """Append-only loss-log writer with crash-safe per-line flushes.

    Opening an existing log replays it once to seed the duplicate and
    lr-consistency checks; appends then validate in O(1).
    """

    path: Path
    _fh: TextIO | None = None
    _seen: set[tuple[int, str]] = field(default_factory=set)
    _epoch_lr: dict[int, float] = field(default_factory=dict)

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._seen = set()
        self._epoch_lr = {}
        existing = self.path.exists() and self.path.stat().st_size > 0
        if existing:
            for rec in load_loss_log(self.path):
                self._seen.add((rec.epoch, rec.sample_id))
                self._epoch_lr[rec.epoch] = rec.lr
        self._fh = open(self.path, "a", encoding="utf-8")
        if not existing:
            self._fh.write(
                _dump_line({"schema": LOSS_LOG_SCHEMA, "version": FORMAT_VERSION})
            )
            self._fh.flush()

    def append(self, records: Iterable[LossRecord]) -> None:
        assert self._fh is not None, "writer is closed"
        for rec in records:
            key = (rec.epoch, rec.sample_id)
            if key in self._seen:
                raise DuplicateError(
                    f"duplicate loss record for epoch {rec.epoch}, "
                    f"sample {rec.sample_id!r}"
                )
            known_lr = self._epoch_lr.get(rec.epoch)
            if known_lr is not None and known_lr != rec.lr:
                raise ScheduleError(
                    f"epoch {rec.epoch} has lr {known_lr}, record carries {rec.lr}"
                )
            if not math.isfinite(rec.loss) or rec.loss < 0:
                raise InputError(f"loss must be finite and non-negative, got {rec.loss}")
            if not math.isfinite(rec.lr) or rec.lr <= 0:
                raise ScheduleError(f"lr must be finite and positive, got {rec.lr}")
            self._seen.add(key)
            self._epoch_lr[rec.epoch] = rec.lr
            self._fh.write(
                _dump_line(
                    {
                        "epoch": rec.epoch,
                        "sample_id": rec.sample_id,
                        "loss": rec.loss,
                        "lr": rec.lr,
                    }
                )
            )
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "LossLogWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def append_losses(log: str | Path, records: Iterable[LossRecord]) -> None:
    """One-shot append with full validation against the existing log."""
    with LossLogWriter(log) as writer:
        writer.append(records)


def load_loss_log(path: str | Path) -> list[LossRecord]:
    """Load the full log, enforcing uniqueness and per-epoch lr consistency."""
    path = Path(path)
    records: list[LossRecord] = []
    seen: set[tuple[int, str]] = set()
    epoch_lr: dict[int, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = read_header(fh, str(path), LOSS_LOG_SCHEMA)
        if header is None:
            return []
        for lineno, obj in _iter_records(fh, str(path)):
            rec = _validate_loss_fields(obj, f"{path}:{lineno}")
            key = (rec.epoch, rec.sample_id)
            if key in seen:
                raise DuplicateError(
                    f"{path}:{lineno}: duplicate loss record for epoch "
                    f"{rec.epoch}, sample {rec.sample_id!r}"
                )
            known_lr = epoch_lr.get(rec.epoch)
            if known_lr is not None and known_lr != rec.lr:
                raise ScheduleError(
                    f"{path}:{lineno}: epoch {rec.epoch} has lr {known_lr}, "
                    f"record carries {rec.lr}"
                )
            seen.add(key)
            epoch_lr[rec.epoch] = rec.lr
            records.append(rec)
    return records


def read_epoch_losses(log: str | Path, epoch: int) -> list[LossRecord]:
    """Return exactly the records of one epoch, in file order."""
    return [rec for rec in load_loss_log(log) if rec.epoch == epoch]


def save_loss_log(records: Iterable[LossRecord], path: str | Path) -> None:
    path = Path(path)
    if path.exists():
        path.unlink()
    with LossLogWriter(path) as writer:
        writer.append(records)


# ---------------------------------------------------------------------------
# static-score table


def save_scores(scores: dict[str, float], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dump_line({"schema": SCORES_SCHEMA, "version": FORMAT_VERSION}))
        for sample_id in sorted(scores):
            fh.write(_dump_line({"sample_id": sample_id, "q": scores[sample_id]}))


def load_scores(path: str | Path) -> dict[str, float]:
    path = Path(path)
    scores: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = read_header(fh, str(path), SCORES_SCHEMA)
        if header is None:
            return {}
        for lineno, obj in _iter_records(fh, str(path)):
            sample_id = _require_str(obj, "sample_id", str(path), lineno)
            q = obj.get("q")
            if not isinstance(q, (int, float)) or not math.isfinite(q):
                raise ParseError(f"{path}:{lineno}: q must be a finite number")
            if sample_id in scores:
                raise DuplicateError(f"{path}:{lineno}: duplicate score id {sample_id!r}")
            scores[sample_id] = float(q)
    return scores


# ---------------------------------------------------------------------------
# images


def load_image(path: str | Path) -> np.ndarray:
    """Load a lossless 8-bit raster image as float64 (H, W, C) in [0, 1]."""
    with Image.open(path) as img:
        if img.mode == "L":
            arr = np.asarray(img, dtype=np.float64)[:, :, None]
        else:
            arr = np.asarray(img.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def save_image(pixels: np.ndarray, path: str | Path) -> None:
    """Write a float (H, W, C) array in [0, 1] as an 8-bit PNG."""
    if pixels.ndim != 3 or pixels.shape[2] not in (1, 3):
        raise DimensionError(f"expected (H, W, 1|3) pixels, got {pixels.shape}")
    quantized = np.rint(np.clip(pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
    if quantized.shape[2] == 1:
        img = Image.fromarray(quantized[:, :, 0], mode="L")
    else:
        img = Image.fromarray(quantized, mode="RGB")
    img.save(path, format="PNG")

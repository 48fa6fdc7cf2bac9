"""Command-line surface: scoring, augmentation, scheduling, runs, reports.

Subcommands
    score-static  write the static-score table for every fake in a manifest
    freda         batch-augment fake/real pairs, logging provenance
    schedule      replay a recorded loss history into a schedule dump
    run           full synthetic-harness curriculum run
    report        emit CSV series from a training report

One versioned config file carries every hyper-parameter; ``--set`` flags
override individual fields.  Errors print ``<CODE>: message`` on stderr
and exit nonzero; success exits 0.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import dataio, freda, harness
from .dataio import FORMAT_VERSION, _dump_line, _iter_records, read_header
from .errors import (
    ConfigError,
    CoverageError,
    ParseError,
    PipelineError,
    ReferenceError_,
)
from .fqs import compute_static_scores
from .harness import RunConfig, load_report, run_curriculum
from .pacing import CurriculumScheduler, save_schedule_dump, schedule_row

PAIRS_SCHEMA = "freda-pairs"
PROVENANCE_SCHEMA = "freda-provenance"
CONFIG_VERSION = 1


# ---------------------------------------------------------------------------
# config file


def load_config(path: str | Path, overrides: list[str] | None = None) -> tuple[RunConfig, dict]:
    """Load the run config file; returns (RunConfig, paths).

    Paths in the file resolve relative to the file's directory.  Overrides
    are ``dotted.key=value`` strings applied before validation; values
    parse as JSON with a plain-string fallback.
    """
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: config must be a JSON object")
    if obj.get("version") != CONFIG_VERSION:
        raise ConfigError(f"{path}: unsupported config version {obj.get('version')!r}")

    for item in overrides or []:
        _apply_override(obj, item)

    raw_paths = obj.get("paths", {})
    if not isinstance(raw_paths, dict):
        raise ConfigError(f"{path}: 'paths' must be an object")
    paths = {
        key: str(path.parent / value) for key, value in raw_paths.items()
    }
    try:
        cfg = RunConfig.from_dict(obj)
    except TypeError as exc:
        raise ConfigError(f"{path}: unknown config field ({exc})") from exc
    cfg.validate()
    return cfg, paths


def _apply_override(obj: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    dotted, raw_value = item.split("=", 1)
    try:
        value = json.loads(raw_value)
    except json.JSONDecodeError:
        value = raw_value
    keys = dotted.split(".")
    target = obj
    for key in keys[:-1]:
        target = target.setdefault(key, {})
        if not isinstance(target, dict):
            raise ConfigError(f"override {item!r} traverses a non-object")
    target[keys[-1]] = value


# ---------------------------------------------------------------------------
# subcommands


def cmd_score_static(args: argparse.Namespace) -> int:
    records = dataio.load_manifest(args.manifest)
    ids = [r.sample_id for r in records]
    embeddings = dataio.load_embeddings(args.embeddings, expected_ids=ids)
    scores = compute_static_scores(records, embeddings)
    dataio.save_scores(scores, args.out)
    print(f"wrote {len(scores)} static scores to {args.out}")
    return 0


def _load_pairs(path: str | Path) -> list[tuple[str, Path, Path]]:
    path = Path(path)
    pairs: list[tuple[str, Path, Path]] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = read_header(fh, str(path), PAIRS_SCHEMA)
        if header is None:
            return []
        for lineno, obj in _iter_records(fh, str(path)):
            try:
                src_id = str(obj["src_id"])
                fake_path = path.parent / str(obj["fake_path"])
                real_path = path.parent / str(obj["real_path"])
            except KeyError as exc:
                raise ParseError(f"{path}:{lineno}: missing field {exc}") from exc
            for p in (fake_path, real_path):
                if not p.exists():
                    raise ReferenceError_(f"{path}:{lineno}: {p} does not resolve")
            pairs.append((src_id, fake_path, real_path))
    return pairs


def cmd_freda(args: argparse.Namespace) -> int:
    pairs = _load_pairs(args.pairs)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def augment(pair: tuple[str, Path, Path]) -> dict:
        src_id, fake_path, real_path = pair
        fake_img = dataio.load_image(fake_path)
        real_img = dataio.load_image(real_path)
        radius = (
            args.radius
            if args.radius is not None
            else freda.default_radius(fake_img.shape[0], fake_img.shape[1])
        )
        out_name = f"{freda.augmented_id(src_id)}.png"
        dataio.save_image(freda.freda(fake_img, real_img, radius), out_dir / out_name)
        return {"src_id": src_id, "r": radius, "out_path": out_name}

    # pairs are independent; map in a pool, keeping provenance in input order
    with ThreadPoolExecutor() as pool:
        entries = list(pool.map(augment, pairs))

    provenance = Path(args.provenance) if args.provenance else out_dir / "provenance.jsonl"
    with open(provenance, "w", encoding="utf-8") as fh:
        fh.write(_dump_line({"schema": PROVENANCE_SCHEMA, "version": FORMAT_VERSION}))
        for entry in entries:
            fh.write(_dump_line(entry))
    print(f"augmented {len(entries)} pair(s) into {out_dir}")
    return 0


def cmd_schedule(args: argparse.Namespace) -> int:
    cfg, _ = load_config(args.config, args.set)
    scores = dataio.load_scores(args.scores)
    if not scores:
        raise CoverageError(f"{args.scores}: no static scores to schedule from")
    log = dataio.load_loss_log(args.loss_log) if args.loss_log else []
    if cfg.pacing.total_epochs > cfg.pacing.warmup_epochs and not log:
        raise CoverageError(
            "curriculum epochs need a recorded loss log (--loss-log)"
        )

    scheduler = CurriculumScheduler(cfg.pacing, cfg.fqs, scores, cfg.seed)
    by_epoch: dict[int, list[dataio.LossRecord]] = {}
    for rec in log:
        by_epoch.setdefault(rec.epoch, []).append(rec)

    rows = []
    for t in range(cfg.pacing.total_epochs):
        plan = scheduler.plan_epoch(t)
        rows.append(schedule_row(plan))
        if log:
            scheduler.observe_losses(t, by_epoch.get(t, []))
    save_schedule_dump(rows, args.out)
    print(f"wrote {len(rows)} schedule rows to {args.out}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg, paths = load_config(args.config, args.set)
    for key in ("manifest", "embeddings", "out_dir"):
        if key not in paths:
            raise ConfigError(f"config paths must include {key!r}")
    out_dir = Path(args.out_dir) if args.out_dir else Path(paths["out_dir"])
    report = run_curriculum(paths["manifest"], paths["embeddings"], cfg, out_dir)
    print(
        f"ran {len(report.rows)} epoch(s); report, schedule dump, and loss "
        f"log are under {out_dir}"
    )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    report = load_report(args.report)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    epochs_csv = out_dir / "epochs.csv"
    with open(epochs_csv, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "epoch",
                "phase",
                "k",
                "alpha_f",
                "lr",
                "hard_size",
                "easy_size",
                "mean_loss_hard",
                "mean_loss_easy",
            ]
        )
        for row in report.rows:
            writer.writerow(
                [
                    row.epoch,
                    row.phase,
                    row.k,
                    row.alpha_f,
                    row.lr,
                    row.hard_size,
                    row.easy_size,
                    "" if row.mean_loss_hard is None else row.mean_loss_hard,
                    "" if row.mean_loss_easy is None else row.mean_loss_easy,
                ]
            )

    fqs_csv = out_dir / "fqs.csv"
    with open(fqs_csv, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "q", "d", "fqs", "last_updated_epoch"])
        for state in report.fqs_table:
            writer.writerow(
                [state.sample_id, state.q, state.d, state.fqs, state.last_updated_epoch]
            )

    print(f"wrote {epochs_csv} and {fqs_csv}")
    return 0


# ---------------------------------------------------------------------------
# argument wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curriforge",
        description="Curriculum data pipeline for forgery-detection training",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score-static", help="static similarity score per fake")
    p.add_argument("--manifest", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score_static)

    p = sub.add_parser("freda", help="batch frequency-domain augmentation")
    p.add_argument("--pairs", required=True, help="pair list (src_id, fake, real)")
    p.add_argument("--radius", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--provenance", default=None)
    p.set_defaults(func=cmd_freda)

    p = sub.add_parser("schedule", help="replay losses into a schedule dump")
    p.add_argument("--config", required=True)
    p.add_argument("--scores", required=True, help="static-score table")
    p.add_argument("--loss-log", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("run", help="full synthetic curriculum run")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None, help="override the config out_dir")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="emit CSV series from a report")
    p.add_argument("--report", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"E_REF: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())

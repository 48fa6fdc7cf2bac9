"""Pacing: warm-up, milestone-driven pool shrinkage, per-epoch pool assembly.

The first ``T_0`` epochs are warm-up and use every sample.  From epoch
``T_0`` on, each epoch trains on the hard pool H_t (top-k by combined
score) together with augmented versions of the easy pool E_t (bottom-E,
excluding H_t); the originals of E_t are replaced by their augmented
forms.  Pool size and the static-score balance weight change only at
milestones: crossing one multiplies k by ``alpha_beta`` (floored, never
below 1) and alpha_f by its decay factor.

The scheduler is a single-writer state machine: epochs must be planned and
observed serially, in order.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import freda
from .dataio import FORMAT_VERSION, LossRecord, _dump_line, _iter_records, read_header
from .errors import (
    ConfigError,
    InputError,
    ParseError,
    ScheduleError,
    ScoringIncompleteError,
    SessionStateError,
    SizeError,
)
from .fqs import FqsConfig, QualityTracker, decay_alpha_f

SCHEDULE_SCHEMA = "schedule-dump"

PHASE_WARMUP = "warmup"
PHASE_CURRICULUM = "curriculum"

SELECT_TOPK = "topk"
SELECT_SOFTMAX = "softmax"


@dataclass(frozen=True)
class PacingConfig:
    """Pacing hyper-parameters.

    Attributes:
        milestones: strictly increasing epoch indices [T_0..T_N]; warm-up
            covers epochs 0..T_0-1, so T_0 must be >= 1.  Milestones at or
            beyond total_epochs simply never fire.
        total_epochs: schedule length.
        k_init: initial hard-pool size; None means the full fake count.
        alpha_beta: per-milestone hard-pool shrink factor in (0, 1].
        easy_count: requested easy-pool size E; the pool shrinks gracefully
            when fewer non-hard fakes remain.
        selection: "topk" (deterministic, default) or "softmax" (sample the
            hard pool proportionally to exp(fqs / temperature)).
        temperature: softmax selection temperature.
    """

    milestones: tuple[int, ...] = (2, 5, 8, 12, 15)
    total_epochs: int = 20
    k_init: int | None = None
    alpha_beta: float = 0.9
    easy_count: int = 1000
    selection: str = SELECT_TOPK
    temperature: float = 1.0

    def validate(self) -> None:
        if len(self.milestones) == 0:
            raise ConfigError("milestones must be non-empty")
        if any(not isinstance(m, int) for m in self.milestones):
            raise ConfigError("milestones must be integers")
        if self.milestones[0] < 1:
            raise ConfigError(
                f"first milestone must be >= 1 (warm-up needs an epoch), "
                f"got {self.milestones[0]}"
            )
        if any(b <= a for a, b in zip(self.milestones, self.milestones[1:])):
            raise ConfigError(f"milestones must be strictly increasing: {self.milestones}")
        if self.total_epochs < 1:
            raise ConfigError(f"total_epochs must be >= 1, got {self.total_epochs}")
        if self.total_epochs < self.milestones[0]:
            raise ConfigError(
                f"total_epochs {self.total_epochs} ends before warm-up "
                f"(first milestone {self.milestones[0]})"
            )
        if not (0.0 < self.alpha_beta <= 1.0):
            raise ConfigError(f"alpha_beta must be in (0, 1], got {self.alpha_beta}")
        if self.k_init is not None and self.k_init < 1:
            raise ConfigError(f"k_init must be >= 1, got {self.k_init}")
        if self.easy_count < 0:
            raise ConfigError(f"easy_count must be >= 0, got {self.easy_count}")
        if self.selection not in (SELECT_TOPK, SELECT_SOFTMAX):
            raise ConfigError(f"unknown selection mode {self.selection!r}")
        if not (self.temperature > 0):
            raise ConfigError(f"temperature must be positive, got {self.temperature}")

    @property
    def warmup_epochs(self) -> int:
        return self.milestones[0]


@dataclass(frozen=True)
class PoolPlan:
    """One epoch's pool assignment.

    During warm-up the hard side is the entire fake set and the easy side
    is empty; in curriculum phase |hard_ids| == k_current and the pools are
    disjoint.
    """

    epoch: int
    phase: str
    hard_ids: frozenset[str]
    easy_ids: frozenset[str]
    k_current: int
    alpha_f_current: float


@dataclass(frozen=True)
class PacingState:
    """Scheduler position: current k, current alpha_f, milestones applied."""

    fake_ids: tuple[str, ...]
    k_current: int
    alpha_f_current: float
    alpha_f_decay: float
    milestones_applied: int
    next_epoch: int


def shrink_k(k_prev: int, alpha_beta: float) -> int:
    """One milestone shrink: max(1, floor(alpha_beta * k_prev))."""
    if not (0.0 < alpha_beta <= 1.0):
        raise ConfigError(f"alpha_beta must be in (0, 1], got {alpha_beta}")
    if k_prev < 1:
        raise InputError(f"k_prev must be >= 1, got {k_prev}")
    return max(1, math.floor(alpha_beta * k_prev))


def _ranked_ids(scores: dict[str, float], descending: bool) -> np.ndarray:
    """Ids ordered by score with ascending-id tie-break (stable mergesort)."""
    ids = np.array(sorted(scores), dtype=object)
    values = np.array([scores[i] for i in ids], dtype=np.float64)
    key = -values if descending else values
    order = np.argsort(key, kind="mergesort")
    return ids[order]


def select_hard_pool(scores: dict[str, float], k: int) -> set[str]:
    """The k ids with largest score; ties broken by ascending id."""
    if k < 0:
        raise InputError(f"k must be >= 0, got {k}")
    if k > len(scores):
        raise SizeError(f"k={k} exceeds {len(scores)} scored samples")
    return set(_ranked_ids(scores, descending=True)[:k])


def select_easy_pool(scores: dict[str, float], easy_count: int, excluded: set[str]) -> set[str]:
    """The min(E, remaining) ids with smallest score, skipping ``excluded``."""
    if easy_count < 0:
        raise InputError(f"easy_count must be >= 0, got {easy_count}")
    remaining = {i: s for i, s in scores.items() if i not in excluded}
    take = min(easy_count, len(remaining))
    return set(_ranked_ids(remaining, descending=False)[:take])


def _softmax_hard_pool(
    scores: dict[str, float], k: int, temperature: float, rng: np.random.Generator
) -> set[str]:
    """Ablation mode: draw k ids without replacement, weight exp(fqs/T)."""
    if k > len(scores):
        raise SizeError(f"k={k} exceeds {len(scores)} scored samples")
    ids = sorted(scores)
    values = np.array([scores[i] for i in ids], dtype=np.float64) / temperature
    weights = np.exp(values - values.max())
    weights /= weights.sum()
    chosen = rng.choice(len(ids), size=k, replace=False, p=weights)
    return {ids[i] for i in chosen}


def initial_state(
    cfg: PacingConfig,
    fake_ids: Iterable[str],
    alpha_f_init: float,
    alpha_f_decay: float = 0.5,
) -> PacingState:
    """Scheduler state before epoch 0; k starts at k_init (default: all fakes)."""
    cfg.validate()
    ids = tuple(sorted(fake_ids))
    if not ids:
        raise InputError("cannot pace an empty fake set")
    k = cfg.k_init if cfg.k_init is not None else len(ids)
    if k > len(ids):
        raise SizeError(f"k_init={k} exceeds {len(ids)} fakes")
    return PacingState(
        fake_ids=ids,
        k_current=k,
        alpha_f_current=alpha_f_init,
        alpha_f_decay=alpha_f_decay,
        milestones_applied=0,
        next_epoch=0,
    )


def apply_due_milestones(t: int, cfg: PacingConfig, state: PacingState) -> PacingState:
    """Fold every milestone with T_n <= t that has not been applied yet.

    Crossing a milestone shrinks k and decays alpha_f, each exactly once.
    """
    due = sum(1 for m in cfg.milestones if m <= t)
    k = state.k_current
    alpha_f = state.alpha_f_current
    for _ in range(due - state.milestones_applied):
        k = shrink_k(k, cfg.alpha_beta)
        alpha_f = decay_alpha_f(alpha_f, 1, state.alpha_f_decay)
    return replace(
        state, k_current=k, alpha_f_current=alpha_f, milestones_applied=due
    )


def epoch_plan(
    t: int,
    cfg: PacingConfig,
    scores: dict[str, float] | None,
    state: PacingState,
    rng: np.random.Generator | None = None,
) -> tuple[PoolPlan, PacingState]:
    """Plan one epoch and advance the state.

    Epochs must be requested serially.  ``scores`` is ignored during
    warm-up and must cover every fake afterwards, computed under the
    balance weight this epoch uses (see :func:`apply_due_milestones`).
    """
    if not (0 <= t < cfg.total_epochs):
        raise ScheduleError(f"epoch {t} outside [0, {cfg.total_epochs})")
    if t != state.next_epoch:
        raise SessionStateError(
            f"epochs must be planned in order; expected {state.next_epoch}, got {t}"
        )

    if t < cfg.warmup_epochs:
        plan = PoolPlan(
            epoch=t,
            phase=PHASE_WARMUP,
            hard_ids=frozenset(state.fake_ids),
            easy_ids=frozenset(),
            k_current=state.k_current,
            alpha_f_current=state.alpha_f_current,
        )
        return plan, replace(state, next_epoch=t + 1)

    state = apply_due_milestones(t, cfg, state)
    if scores is None or set(scores) != set(state.fake_ids):
        raise ScoringIncompleteError(
            f"epoch {t}: every fake needs a score before curriculum selection"
        )
    if cfg.selection == SELECT_SOFTMAX:
        if rng is None:
            raise ConfigError("softmax selection needs a random generator")
        hard = _softmax_hard_pool(scores, state.k_current, cfg.temperature, rng)
    else:
        hard = select_hard_pool(scores, state.k_current)
    easy = select_easy_pool(scores, cfg.easy_count, excluded=hard)
    plan = PoolPlan(
        epoch=t,
        phase=PHASE_CURRICULUM,
        hard_ids=frozenset(hard),
        easy_ids=frozenset(easy),
        k_current=state.k_current,
        alpha_f_current=state.alpha_f_current,
    )
    return plan, replace(state, next_epoch=t + 1)


def build_epoch_pool(
    plan: PoolPlan,
    freda_fn: Callable[[str], None],
    real_ids: Iterable[str],
    rng: np.random.Generator | None = None,
) -> list[str]:
    """Assemble one epoch's sample list.

    The fake side is the hard pool's originals plus the easy pool under
    augmented ids (originals of E_t replaced); ``freda_fn`` is invoked once
    per easy id to materialize its augmented form.  The real side is every
    real sample.  Order is deterministic: sorted, then shuffled by ``rng``
    when one is given.
    """
    for easy_id in sorted(plan.easy_ids):
        freda_fn(easy_id)
    pool = (
        sorted(real_ids)
        + sorted(plan.hard_ids)
        + [freda.augmented_id(i) for i in sorted(plan.easy_ids)]
    )
    if rng is not None:
        rng.shuffle(pool)
    return pool


def pool_digest(ids: Iterable[str]) -> str:
    """Stable digest of an id set: sha256 over the sorted newline-joined list."""
    joined = "\n".join(sorted(ids))
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class ScheduleRow:
    """One schedule-dump line; digests make pool audits cheap to compare."""

    epoch: int
    phase: str
    k: int
    alpha_f: float
    hard_size: int
    easy_size: int
    hard_ids_digest: str
    easy_ids_digest: str


def schedule_row(plan: PoolPlan) -> ScheduleRow:
    return ScheduleRow(
        epoch=plan.epoch,
        phase=plan.phase,
        k=plan.k_current,
        alpha_f=plan.alpha_f_current,
        hard_size=len(plan.hard_ids),
        easy_size=len(plan.easy_ids),
        hard_ids_digest=pool_digest(plan.hard_ids),
        easy_ids_digest=pool_digest(plan.easy_ids),
    )


def save_schedule_dump(rows: Iterable[ScheduleRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dump_line({"schema": SCHEDULE_SCHEMA, "version": FORMAT_VERSION}))
        for row in rows:
            fh.write(
                _dump_line(
                    {
                        "epoch": row.epoch,
                        "phase": row.phase,
                        "k": row.k,
                        "alpha_f": row.alpha_f,
                        "hard_size": row.hard_size,
                        "easy_size": row.easy_size,
                        "hard_ids_digest": row.hard_ids_digest,
                        "easy_ids_digest": row.easy_ids_digest,
                    }
                )
            )


def load_schedule_dump(path: str | Path) -> list[ScheduleRow]:
    path = Path(path)
    rows: list[ScheduleRow] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = read_header(fh, str(path), SCHEDULE_SCHEMA)
        if header is None:
            return []
        for lineno, obj in _iter_records(fh, str(path)):
            try:
                rows.append(
                    ScheduleRow(
                        epoch=int(obj["epoch"]),
                        phase=str(obj["phase"]),
                        k=int(obj["k"]),
                        alpha_f=float(obj["alpha_f"]),
                        hard_size=int(obj["hard_size"]),
                        easy_size=int(obj["easy_size"]),
                        hard_ids_digest=str(obj["hard_ids_digest"]),
                        easy_ids_digest=str(obj["easy_ids_digest"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: bad schedule row ({exc})") from exc
    return rows


class CurriculumScheduler:
    """Serial orchestrator tying scoring state to pool planning.

    Drive it strictly in epoch order::

        plan = scheduler.plan_epoch(t)
        ...train on the plan's pools, collect per-sample losses...
        scheduler.observe_losses(t, records)

    Dynamic hardness initializes when the losses of the final warm-up
    epoch arrive; from then on only hard-pool members move.
    """

    def __init__(
        self,
        pacing_cfg: PacingConfig,
        fqs_cfg: FqsConfig,
        static_scores: dict[str, float],
        seed: int = 0,
    ):
        pacing_cfg.validate()
        fqs_cfg.validate()
        self.pacing_cfg = pacing_cfg
        self.fqs_cfg = fqs_cfg
        self.tracker = QualityTracker(fqs_cfg, static_scores)
        self.state = initial_state(
            pacing_cfg,
            sorted(static_scores),
            fqs_cfg.alpha_f_init,
            fqs_cfg.alpha_f_decay,
        )
        self.rng = np.random.default_rng(seed)
        self.plans: list[PoolPlan] = []
        self._observed_epoch = -1

    def plan_epoch(self, t: int) -> PoolPlan:
        if t < self.pacing_cfg.warmup_epochs:
            plan, self.state = epoch_plan(t, self.pacing_cfg, None, self.state)
        else:
            if not self.tracker.initialized:
                raise ScoringIncompleteError(
                    f"epoch {t}: warm-up losses were never observed, "
                    f"samples are unscored"
                )
            # milestones first so selection sees this epoch's balance weight
            self.state = apply_due_milestones(t, self.pacing_cfg, self.state)
            scores = self.tracker.fqs_scores(self.state.alpha_f_current)
            plan, self.state = epoch_plan(
                t, self.pacing_cfg, scores, self.state, self.rng
            )
        self.plans.append(plan)
        return plan

    def observe_losses(self, t: int, records: list[LossRecord]) -> None:
        """Feed one planned epoch's losses; must follow plan_epoch(t)."""
        if t >= self.state.next_epoch:
            raise SessionStateError(f"epoch {t} has not been planned yet")
        if t != self._observed_epoch + 1:
            raise SessionStateError(
                f"losses must arrive in epoch order; expected "
                f"{self._observed_epoch + 1}, got {t}"
            )
        last_warmup = self.pacing_cfg.warmup_epochs - 1
        if t == last_warmup:
            self.tracker.initialize_dynamic(t, records)
        elif t > last_warmup:
            self.tracker.update(t, set(self.plans[t].hard_ids), records)
        self._observed_epoch = t

    def final_table(self):
        """Per-sample quality table under the current balance weight."""
        return self.tracker.table(self.state.alpha_f_current)

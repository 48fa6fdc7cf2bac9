"""Forgery Quality Score: static similarity, dynamic hardness, combination.

A fake sample's score has two ingredients.  The static part ``q`` is the
cosine similarity between the fake's face embedding and its paired real's
embedding; realistic swaps score near 1.  The dynamic part ``d`` is an
exponential moving average of learning-rate-normalized per-sample loss,
updated only in epochs where the sample sat in the hard pool and frozen
otherwise.  The combined score is ``fqs = d + alpha_f * q`` where the
balance weight ``alpha_f`` decays at each pacing milestone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataio import LABEL_FAKE, LossRecord, SampleRecord
from .errors import (
    ConfigError,
    CoverageError,
    DegenerateInputError,
    DimensionError,
    InputError,
    ScheduleError,
)

DEFAULT_HARDNESS_CEILING = 1e4


@dataclass(frozen=True)
class FqsConfig:
    """Scoring hyper-parameters.

    Attributes:
        gamma: discount factor of the dynamic-hardness moving average, in [0, 1].
        alpha_f_init: initial balance weight on the static score.
        lr_max: peak learning rate used to normalize losses.
        alpha_f_decay: factor applied to alpha_f at each milestone.
        hardness_ceiling: clamp on normalized hardness; guards against the
            blow-up when the learning rate approaches zero late in a
            cosine schedule.
    """

    gamma: float = 0.9
    alpha_f_init: float = 0.5
    lr_max: float = 0.1
    alpha_f_decay: float = 0.5
    hardness_ceiling: float = DEFAULT_HARDNESS_CEILING

    def validate(self) -> None:
        if not (0.0 <= self.gamma <= 1.0):
            raise ConfigError(f"gamma must be in [0, 1], got {self.gamma}")
        if not (self.alpha_f_init > 0 and math.isfinite(self.alpha_f_init)):
            raise ConfigError(f"alpha_f_init must be positive, got {self.alpha_f_init}")
        if not (self.lr_max > 0 and math.isfinite(self.lr_max)):
            raise ConfigError(f"lr_max must be positive, got {self.lr_max}")
        if not (0.0 < self.alpha_f_decay <= 1.0):
            raise ConfigError(
                f"alpha_f_decay must be in (0, 1], got {self.alpha_f_decay}"
            )
        if not (self.hardness_ceiling > 0):
            raise ConfigError(
                f"hardness_ceiling must be positive, got {self.hardness_ceiling}"
            )


@dataclass(frozen=True)
class QualityState:
    """Per-sample scores at one point in training; fqs is never stale."""

    sample_id: str
    q: float
    d: float
    fqs: float
    last_updated_epoch: int


def static_score(fake_emb: np.ndarray, real_emb: np.ndarray) -> float:
    """Cosine similarity of a fake/real embedding pair.

    Symmetric in its arguments and clipped to [-1, 1] so float round-off
    cannot leak outside the score domain.
    """
    fake_emb = np.asarray(fake_emb, dtype=np.float64)
    real_emb = np.asarray(real_emb, dtype=np.float64)
    if fake_emb.ndim != 1 or real_emb.ndim != 1:
        raise DimensionError("embeddings must be 1-D vectors")
    if fake_emb.shape != real_emb.shape:
        raise DimensionError(
            f"embedding dims differ: {fake_emb.shape[0]} vs {real_emb.shape[0]}"
        )
    if not (np.all(np.isfinite(fake_emb)) and np.all(np.isfinite(real_emb))):
        raise InputError("embeddings must be finite")
    norm_f = float(np.linalg.norm(fake_emb))
    norm_r = float(np.linalg.norm(real_emb))
    if norm_f == 0.0 or norm_r == 0.0:
        raise DegenerateInputError("zero-norm embedding has no direction")
    cos = float(np.dot(fake_emb, real_emb) / (norm_f * norm_r))
    return min(1.0, max(-1.0, cos))


def instantaneous_hardness(
    loss: float,
    lr_t: float,
    lr_max: float,
    ceiling: float = DEFAULT_HARDNESS_CEILING,
) -> float:
    """Loss normalized by the learning-rate ratio: loss * lr_max / lr_t.

    Equal to the raw loss at peak learning rate; clamped at ``ceiling``
    because the ratio diverges as the schedule anneals toward zero.
    """
    if not (math.isfinite(lr_t) and lr_t > 0):
        raise ScheduleError(f"lr_t must be positive, got {lr_t}")
    if not (math.isfinite(lr_max) and lr_max > 0):
        raise ScheduleError(f"lr_max must be positive, got {lr_max}")
    if not math.isfinite(loss) or loss < 0:
        raise InputError(f"loss must be finite and non-negative, got {loss}")
    # ratio first: the result is exactly the loss when lr_t == lr_max
    return min(loss * (lr_max / lr_t), ceiling)


def update_dynamic(d_prev: float, s: float, gamma: float, in_hard_pool: bool) -> float:
    """One moving-average step: gamma*s + (1-gamma)*d_prev, frozen outside H_t."""
    if not (0.0 <= gamma <= 1.0):
        raise ConfigError(f"gamma must be in [0, 1], got {gamma}")
    if not in_hard_pool:
        return d_prev
    return gamma * s + (1.0 - gamma) * d_prev


def combine_fqs(d: float, q: float, alpha_f: float) -> float:
    """Combined score d + alpha_f * q."""
    if not (math.isfinite(d) and math.isfinite(q) and math.isfinite(alpha_f)):
        raise InputError("combine_fqs requires finite inputs")
    if alpha_f < 0:
        raise InputError(f"alpha_f must be non-negative, got {alpha_f}")
    return d + alpha_f * q


def decay_alpha_f(alpha_f: float, milestones_crossed: int, decay: float = 0.5) -> float:
    """Balance weight after a number of milestone decays."""
    if milestones_crossed < 0:
        raise InputError(f"milestones_crossed must be >= 0, got {milestones_crossed}")
    if not (0.0 < decay <= 1.0):
        raise ConfigError(f"decay must be in (0, 1], got {decay}")
    return alpha_f * decay**milestones_crossed


def compute_static_scores(
    records: list[SampleRecord], embeddings: dict[str, np.ndarray]
) -> dict[str, float]:
    """Static score for every FAKE record from its embedding pair.

    A missing embedding is a hard error, never a silent default: a default
    would quietly corrupt the ranking the whole curriculum rests on.
    """
    scores: dict[str, float] = {}
    for rec in records:
        if rec.label != LABEL_FAKE:
            continue
        if rec.sample_id not in embeddings:
            raise CoverageError(f"no embedding for fake sample {rec.sample_id!r}")
        if rec.paired_real_id not in embeddings:
            raise CoverageError(
                f"no embedding for paired real {rec.paired_real_id!r} "
                f"of sample {rec.sample_id!r}"
            )
        scores[rec.sample_id] = static_score(
            embeddings[rec.sample_id], embeddings[rec.paired_real_id]
        )
    return scores


class QualityTracker:
    """Holds q and d for every fake and applies the per-epoch update rule.

    Dynamic hardness starts from the final warm-up epoch's normalized loss
    (warm-up visits every sample, so the prior is meaningful) and then moves
    only for samples inside the hard pool; everything else stays frozen.
    """

    def __init__(self, config: FqsConfig, static_scores: dict[str, float]):
        config.validate()
        self.config = config
        self.q: dict[str, float] = dict(static_scores)
        self.d: dict[str, float] = {}
        self.last_updated: dict[str, int] = {}

    @property
    def initialized(self) -> bool:
        return bool(self.d)

    def _hardness(self, rec: LossRecord) -> float:
        return instantaneous_hardness(
            rec.loss, rec.lr, self.config.lr_max, self.config.hardness_ceiling
        )

    def initialize_dynamic(self, epoch: int, records: list[LossRecord]) -> None:
        """Seed d from the given (last warm-up) epoch's loss records."""
        by_id = {rec.sample_id: rec for rec in records if rec.epoch == epoch}
        missing = sorted(set(self.q) - by_id.keys())
        if missing:
            shown = ", ".join(missing[:5])
            raise CoverageError(
                f"epoch {epoch} losses missing for {len(missing)} fake(s): {shown}"
            )
        for sample_id in self.q:
            self.d[sample_id] = self._hardness(by_id[sample_id])
            self.last_updated[sample_id] = epoch

    def update(
        self, epoch: int, hard_ids: set[str], records: list[LossRecord]
    ) -> None:
        """Move d for hard-pool members from this epoch's records.

        Samples outside ``hard_ids`` keep their previous d ("otherwise"
        branch of the recursion); a hard-pool member without a loss record
        is a coverage error because its update would be undefined.
        """
        if not self.initialized:
            raise CoverageError("dynamic hardness was never initialized")
        by_id = {rec.sample_id: rec for rec in records if rec.epoch == epoch}
        for sample_id in sorted(hard_ids):
            if sample_id not in self.d:
                raise CoverageError(f"unknown hard-pool id {sample_id!r}")
            rec = by_id.get(sample_id)
            if rec is None:
                raise CoverageError(
                    f"epoch {epoch}: no loss record for hard-pool sample "
                    f"{sample_id!r}"
                )
            self.d[sample_id] = update_dynamic(
                self.d[sample_id], self._hardness(rec), self.config.gamma, True
            )
            self.last_updated[sample_id] = epoch

    def fqs_scores(self, alpha_f: float) -> dict[str, float]:
        """Current combined score per fake under the given balance weight."""
        if not self.initialized:
            raise CoverageError("dynamic hardness was never initialized")
        return {
            sample_id: combine_fqs(self.d[sample_id], self.q[sample_id], alpha_f)
            for sample_id in self.q
        }

    def table(self, alpha_f: float) -> list[QualityState]:
        """Full per-sample state, fqs recomputed under ``alpha_f``."""
        scores = self.fqs_scores(alpha_f)
        return [
            QualityState(
                sample_id=sample_id,
                q=self.q[sample_id],
                d=self.d[sample_id],
                fqs=scores[sample_id],
                last_updated_epoch=self.last_updated[sample_id],
            )
            for sample_id in sorted(self.q)
        ]

"""Curriculum-learning data pipeline for forgery-detection training.

Scores every fake sample's forgery quality (static embedding similarity
plus dynamic loss history), augments low-quality fakes by frequency-domain
splicing, and schedules per-epoch training pools from easy to hard.
"""

from .dataio import (
    LossRecord,
    SampleRecord,
    load_embeddings,
    load_loss_log,
    load_manifest,
    read_epoch_losses,
)
from .errors import PipelineError
from .fqs import (
    FqsConfig,
    QualityState,
    QualityTracker,
    combine_fqs,
    compute_static_scores,
    decay_alpha_f,
    instantaneous_hardness,
    static_score,
    update_dynamic,
)
# the augmentation op itself stays namespaced (curriforge.freda.freda) so the
# submodule keeps its name
from .freda import build_mask, default_radius, forward_spectrum, inverse_spectrum, splice
from .harness import (
    RunConfig,
    TrainingReport,
    cosine_lr,
    run_curriculum,
    synthesize_dataset,
    toy_step,
)
from .pacing import (
    CurriculumScheduler,
    PacingConfig,
    PoolPlan,
    build_epoch_pool,
    epoch_plan,
    pool_digest,
    select_easy_pool,
    select_hard_pool,
    shrink_k,
)

__version__ = "0.1.0"

__all__ = [
    "CurriculumScheduler",
    "FqsConfig",
    "LossRecord",
    "PacingConfig",
    "PipelineError",
    "PoolPlan",
    "QualityState",
    "QualityTracker",
    "RunConfig",
    "SampleRecord",
    "TrainingReport",
    "build_epoch_pool",
    "build_mask",
    "combine_fqs",
    "compute_static_scores",
    "cosine_lr",
    "decay_alpha_f",
    "default_radius",
    "epoch_plan",
    "forward_spectrum",
    "instantaneous_hardness",
    "inverse_spectrum",
    "load_embeddings",
    "load_loss_log",
    "load_manifest",
    "pool_digest",
    "read_epoch_losses",
    "run_curriculum",
    "select_easy_pool",
    "select_hard_pool",
    "shrink_k",
    "splice",
    "static_score",
    "synthesize_dataset",
    "toy_step",
    "update_dynamic",
]

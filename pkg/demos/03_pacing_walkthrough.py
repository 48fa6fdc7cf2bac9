"""Drive the pacing schedule by hand, one epoch at a time.

The scheduler plans each epoch's pools: warm-up first (everything trains),
then a hard pool that shrinks at milestones and an easy pool routed through
augmentation.  Losses we feed back update the hardness scores that drive the
next epoch's selection.
"""
import numpy as np

from curriforge.dataio import LossRecord
from curriforge.fqs import FqsConfig
from curriforge.harness import cosine_lr
from curriforge.pacing import CurriculumScheduler, PacingConfig

rng = np.random.default_rng(11)

# 30 fakes with random static quality; ten epochs, shrink at 2, 5, and 8
fake_ids = [f"f{i:02d}" for i in range(30)]
static_q = {sid: float(q) for sid, q in zip(fake_ids, rng.uniform(-1, 1, 30))}
cfg = PacingConfig(milestones=(2, 5, 8), total_epochs=10, easy_count=6)

scheduler = CurriculumScheduler(cfg, FqsConfig(), static_q, seed=0)

print("epoch  phase       k   alpha_f  easy  pool")
for t in range(cfg.total_epochs):
    plan = scheduler.plan_epoch(t)
    members = sorted(plan.hard_ids)
    shown = ",".join(members[:4]) + ("..." if len(members) > 4 else "")
    print(
        f"{t:5d}  {plan.phase:10s} {plan.k_current:3d}   "
        f"{plan.alpha_f_current:.4f}  {len(plan.easy_ids):4d}  {shown}"
    )

    # stand-in training: noisy losses, lower for high-q fakes
    lr = cosine_lr(t, cfg.total_epochs, 0.1)
    visited = sorted(plan.hard_ids | plan.easy_ids)
    losses = [
        LossRecord(t, sid, float(0.7 - 0.2 * static_q[sid] + rng.uniform(0, 0.1)), lr)
        for sid in visited
    ]
    scheduler.observe_losses(t, losses)

# the final table ranks every fake by combined quality score
print("\nfinal top five by FQS:")
for state in sorted(scheduler.final_table(), key=lambda s: -s.fqs)[:5]:
    print(
        f"  {state.sample_id}: fqs={state.fqs:.3f} "
        f"(d={state.d:.3f}, q={state.q:+.3f}, last update t={state.last_updated_epoch})"
    )

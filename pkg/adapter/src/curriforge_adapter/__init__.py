"""Epoch-by-epoch session protocol for external training loops.

open_session -> (next_pool -> train -> submit_losses)* -> close_session;
every pool decision delegates to the curriforge core.
"""

from .session import (
    EpochPool,
    SchedulerSession,
    close_session,
    next_pool,
    open_session,
    submit_losses,
)

__version__ = "0.1.0"

__all__ = [
    "EpochPool",
    "SchedulerSession",
    "close_session",
    "next_pool",
    "open_session",
    "submit_losses",
]

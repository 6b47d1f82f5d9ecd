"""Chunked streaming generation with propagated noise, fused rewards and a routed memory sink."""

from ._core import (
    BudgetMismatch,
    ConfigError,
    RunConfig,
    RunResult,
    compare,
    fuse,
    propagate_noise,
    route,
    run,
    select_top_k,
    strategies,
    verify,
)

__all__ = [
    "BudgetMismatch",
    "ConfigError",
    "RunConfig",
    "RunResult",
    "compare",
    "fuse",
    "propagate_noise",
    "route",
    "run",
    "select_top_k",
    "strategies",
    "verify",
]

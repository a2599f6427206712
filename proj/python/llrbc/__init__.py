"""Lifelong learning for constructive routing solvers."""

from ._core import (
    ConfigError,
    DataError,
    Policy,
    __version__,
    best_route,
    compute_metrics,
    confidence_weight,
    divergence,
    evaluate_lengths,
    generate_instances,
    run,
    tour_length,
    validate_config,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Policy",
    "__version__",
    "best_route",
    "compute_metrics",
    "confidence_weight",
    "divergence",
    "evaluate_lengths",
    "generate_instances",
    "run",
    "tour_length",
    "validate_config",
]

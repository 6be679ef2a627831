"""Low-rank Kalman filters for online neural networks."""

from ._core import (
    ConfigError,
    Filter,
    MissingDatasetError,
    NetworkSpec,
    SingularMatrixError,
    bo_function,
    forward,
    init_params,
    jacobians,
    lowdisc_candidates,
    lowrank_project,
    qr_stack,
    run,
    suite_names,
    verify,
)

__all__ = [
    "ConfigError",
    "Filter",
    "MissingDatasetError",
    "NetworkSpec",
    "SingularMatrixError",
    "bo_function",
    "forward",
    "init_params",
    "jacobians",
    "lowdisc_candidates",
    "lowrank_project",
    "qr_stack",
    "run",
    "suite_names",
    "verify",
]

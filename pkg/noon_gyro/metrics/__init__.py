from .limits import (
    bias_point,
    heisenberg_limit,
    invert_rate,
    numerical_uncertainty,
    propagated_uncertainty,
    sql_limit,
)
from .precision_report import (
    BlockPrecision,
    PrecisionReport,
    RunPrecision,
    block_labels,
    block_precision,
    build_report,
    run_precision,
    super_resolution_ratio,
    velocity_deviations,
)

__all__ = [
    "BlockPrecision",
    "PrecisionReport",
    "RunPrecision",
    "bias_point",
    "block_labels",
    "block_precision",
    "build_report",
    "heisenberg_limit",
    "invert_rate",
    "numerical_uncertainty",
    "propagated_uncertainty",
    "run_precision",
    "sql_limit",
    "super_resolution_ratio",
    "velocity_deviations",
]

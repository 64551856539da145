"""Temporal subspace clustering with adjacency supervision."""

from ._tvsh import (
    Error,
    FileError,
    InvalidInput,
    NumericalFailure,
    OracleUnavailable,
    SelectionError,
    SingularSystem,
    SolverConfig,
    UndefinedMetric,
    boundary_error_count,
    evaluate,
    flip_adjacency,
    generate,
    group_shrink,
    neighborhoods,
    segment,
    solve_sylvester,
    tvs_matrix,
)

__all__ = [
    "Error",
    "FileError",
    "InvalidInput",
    "NumericalFailure",
    "OracleUnavailable",
    "SelectionError",
    "SingularSystem",
    "SolverConfig",
    "UndefinedMetric",
    "boundary_error_count",
    "evaluate",
    "flip_adjacency",
    "generate",
    "group_shrink",
    "neighborhoods",
    "segment",
    "solve_sylvester",
    "tvs_matrix",
]

"""Slice-constrained projection of variational problems with a-priori bounds.

The package solves discretized weak problems ``a(z, v) = b(v)`` two ways:
the classical projection onto a trial space tested against a test space, and
a constrained variant that additionally keeps the approximation inside a
nested family of distance slices.  Both come with computable worst-case
error bounds, plus synthetic instance generators with known ground truth so
the bounds can be checked against actual errors.
"""

from .bounds import (
    BoundReport,
    InvalidInput,
    InvalidState,
    SingularGram,
    TooLarge,
    WaterFillingSolution,
    babuska_bound,
    ms_bound,
    sup_oracle,
    water_filling,
)
from .cli import (
    ExperimentConfig,
    ParseError,
    ValidationError,
    main,
    oracle_sweep,
    parse_config,
    run_experiment,
    run_instance,
)
from .problems import (
    DimensionTooSmall,
    HadamardUnavailable,
    InvalidDistances,
    InvalidSpectrum,
    ProblemInstance,
    RieszFamily,
    SubspaceHierarchy,
    TestSpace,
    evaluate_b,
    example1,
    example2,
    flat_orthogonal,
    rhs_vector,
    riesz_representers,
    synth_prescribed,
)
from .solvers import (
    InfeasibleWidths,
    MultiSliceSolution,
    SingularSystem,
    SolverOptions,
    TruthUnavailable,
    error_norm,
    project_slices,
    solve_ms,
    solve_pg,
)
from .spaces import (
    AmbientSpace,
    OrthonormalFrame,
    RankDeficient,
    complement_frame,
    orthonormalize,
    project,
)
from .spectral import (
    AdaptedBases,
    BoundIntermediates,
    GramDecomposition,
    LengthMismatch,
    adapted_bases,
    decompose,
    deltas,
    gamma,
    gram_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "AmbientSpace",
    "OrthonormalFrame",
    "RankDeficient",
    "orthonormalize",
    "project",
    "complement_frame",
    "ProblemInstance",
    "SubspaceHierarchy",
    "TestSpace",
    "RieszFamily",
    "InvalidSpectrum",
    "InvalidDistances",
    "DimensionTooSmall",
    "HadamardUnavailable",
    "riesz_representers",
    "evaluate_b",
    "rhs_vector",
    "flat_orthogonal",
    "synth_prescribed",
    "example1",
    "example2",
    "GramDecomposition",
    "AdaptedBases",
    "BoundIntermediates",
    "LengthMismatch",
    "gram_matrix",
    "decompose",
    "adapted_bases",
    "gamma",
    "deltas",
    "SolverOptions",
    "MultiSliceSolution",
    "SingularSystem",
    "InfeasibleWidths",
    "TruthUnavailable",
    "solve_pg",
    "project_slices",
    "solve_ms",
    "error_norm",
    "WaterFillingSolution",
    "BoundReport",
    "SingularGram",
    "InvalidInput",
    "TooLarge",
    "InvalidState",
    "babuska_bound",
    "water_filling",
    "sup_oracle",
    "ms_bound",
    "ExperimentConfig",
    "ParseError",
    "ValidationError",
    "parse_config",
    "run_experiment",
    "run_instance",
    "oracle_sweep",
    "main",
    "__version__",
]

"""Augmented jump chain toolkit for non-autonomous Markov jump processes.

Represents a jump process with a piecewise-constant time-dependent
generator as an autonomous Markov chain on space-time, assembles the
sparse Ulam-Galerkin jump matrix in closed form, and solves propagation,
Koopman, committor and coherence problems on it.
"""

from .generator import (
    GridPotential,
    RateMatrixSequence,
    TimeGrid,
    Violation,
    embedded_matrix,
    embedded_probabilities,
    four_neighbor_adjacency,
    rate_sequence_from_protocol,
    sqra_generator,
    validate_generator,
    with_recomputed_diagonal,
)
from .jumpchain import (
    SpaceTimePoint,
    TrajectorySample,
    kernel_density,
    path_state_at,
    sample_jump_time,
    sample_trajectory,
    survival,
)
from .galerkin import (
    JumpMatrix,
    SpaceTimeIndexer,
    apply_adjoint,
    apply_forward,
    assemble,
    row_mass,
)
from .operators import (
    NonConvergence,
    SpaceTimeVector,
    embed_spacelike,
    jump_activity,
    koopman_matrix_column,
    koopman_solve,
    reconstruct_propagator,
    synchronize,
)
from .committor import (
    EmptyTarget,
    SpaceTimeSet,
    coherence_defect,
    committor_solve,
)
from .oracle import (
    convergence_study,
    exact_propagator,
    expm,
    operator_norm_error,
)

__version__ = "0.1.0"

__all__ = [
    "GridPotential", "RateMatrixSequence", "TimeGrid", "Violation",
    "embedded_matrix", "embedded_probabilities", "four_neighbor_adjacency",
    "rate_sequence_from_protocol", "sqra_generator", "validate_generator",
    "with_recomputed_diagonal",
    "SpaceTimePoint", "TrajectorySample", "kernel_density", "path_state_at",
    "sample_jump_time", "sample_trajectory", "survival",
    "JumpMatrix", "SpaceTimeIndexer", "apply_adjoint", "apply_forward",
    "assemble", "row_mass",
    "NonConvergence", "SpaceTimeVector", "embed_spacelike", "jump_activity",
    "koopman_matrix_column", "koopman_solve", "reconstruct_propagator",
    "synchronize",
    "EmptyTarget", "SpaceTimeSet", "coherence_defect", "committor_solve",
    "convergence_study", "exact_propagator", "expm", "operator_norm_error",
]

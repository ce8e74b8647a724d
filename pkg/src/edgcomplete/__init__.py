"""Euclidean distance geometry via low-rank Gram matrix completion.

Recover a point configuration from a random subset of its pairwise squared
distances by completing the centered Gram matrix with a factored
trace-minimization solver, then embedding it with classical MDS.
"""

__version__ = "0.1.0"

from .basis import (
    ObservationSet,
    apply_A,
    apply_A_star,
    apply_A_star_times_P,
    apply_frame_operator,
    apply_sampling_operator,
    h_entry,
    h_inv_entry,
    inner_w,
    pair_from_index,
    pair_index,
    v_matrix,
    w_matrix,
)
from .coherence import (
    CoherenceReport,
    TangentSpace,
    coherence_exact,
    coherence_simplified,
    project_tangent,
    sample_complexity,
    tangent_space,
)
from .estimator import ClassicalMDS, EDGCompletion
from .geometry import (
    center_gram_from_points,
    distance_matrix_from_points,
    gram_from_distances,
    is_edm,
    mds_embed,
    procrustes_align,
    relative_gram_error,
)
from .sampling import NoiseModel, corrupt, derive_noise_model, observe, sample_observations, sample_pairs
from .solver import (
    DivergenceError,
    SolveReport,
    SolverConfig,
    bb_descent,
    reconstruct,
    recover_gram,
    solve_exact,
    solve_noisy,
)

__all__ = [
    "ClassicalMDS", "CoherenceReport", "DivergenceError", "EDGCompletion", "NoiseModel",
    "ObservationSet", "SolveReport", "SolverConfig", "TangentSpace", "apply_A",
    "apply_A_star", "apply_A_star_times_P", "apply_frame_operator",
    "apply_sampling_operator", "bb_descent", "center_gram_from_points",
    "coherence_exact", "coherence_simplified", "corrupt", "derive_noise_model",
    "distance_matrix_from_points", "gram_from_distances", "h_entry", "h_inv_entry",
    "inner_w", "is_edm", "mds_embed", "observe", "pair_from_index", "pair_index",
    "procrustes_align", "project_tangent", "reconstruct", "recover_gram",
    "relative_gram_error", "sample_complexity", "sample_observations", "sample_pairs",
    "solve_exact", "solve_noisy", "tangent_space", "v_matrix", "w_matrix",
]

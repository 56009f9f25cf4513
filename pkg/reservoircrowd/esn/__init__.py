from .reservoir import (
    ReservoirState,
    SparsityProfile,
    WeightBundle,
    augment,
    commit_action,
    commit_population,
    evaluate_candidates,
    evaluate_population,
    generate_sparse_matrix,
    rescale_spectral_radius,
    spectral_radius,
)

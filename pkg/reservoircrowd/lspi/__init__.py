from .trainer import (
    Accumulators,
    EpisodeBatch,
    EpisodeTrace,
    EpsilonSchedule,
    GroupingMode,
    GroupMode,
    LSPITrainer,
    accumulator_memory_bytes,
    apply_forgetting,
    build_episode_batch,
    decay_epsilon,
    epsilon_greedy,
    epsilon_greedy_population,
    finalize_episode,
    record_step,
    solve_output_weights,
)

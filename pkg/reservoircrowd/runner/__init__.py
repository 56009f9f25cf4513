from .experiment import (
    BatchResult,
    EpisodeRecord,
    Trial,
    TrialConfig,
    read_records,
    run_batch,
    run_episode,
    run_trial,
)

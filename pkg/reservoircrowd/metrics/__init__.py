from .curves import LearningCurve, learning_curve, standard_error
from .density import DensityMap, accumulate_density, density_from_logs, snapshot
from .diagram import (
    FundamentalPoint,
    average_density,
    average_velocity,
    default_episode_window,
    default_time_window,
    fundamental_point,
    velocity_from_displacements,
)
from .emit import emit, read_curve, read_density, read_diagram, read_pgm, write_pgm

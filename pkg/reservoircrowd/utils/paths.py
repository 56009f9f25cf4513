import os
import pathlib

# Defines (hard-coded paths to relevant files)
package = pathlib.Path(__file__).parents[1]
root = package.parent

config = package / 'config.yaml'
config_schema = package / 'config_schema.yaml'

maps = package / 'maps'
task1_map = maps / 'task1.txt'
task2_map = maps / 'task2.txt'

output_env_var = 'RESERVOIRCROWD_OUTPUT'


def output_root() -> pathlib.Path:
    return pathlib.Path(os.environ.get(output_env_var, root / 'runs'))


def trial_dir(run_dir, trial_index: int) -> pathlib.Path:
    return pathlib.Path(run_dir) / f'trial_{trial_index:03d}'


def trajectory_file(trial_path, episode_index: int) -> pathlib.Path:
    return pathlib.Path(trial_path) / 'trajectories' / f'episode_{episode_index:04d}.npz'

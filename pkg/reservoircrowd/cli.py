"""Command line entry point: run, resume, metrics and validate."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

import reservoircrowd.utils as utils
from reservoircrowd import __version__
from reservoircrowd import display, metrics
from reservoircrowd.environment import Environment, Extent, Scope, default_plan, place_agents_checkerboard
from reservoircrowd.environment.gridmap import read_map
from reservoircrowd.lspi import GroupingMode, accumulator_memory_bytes
from reservoircrowd.runner import read_records, run_batch
from reservoircrowd.utils.errors import (
    ConfigValidationError,
    MapParseError,
    PlacementCapacityError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
VALIDATION_ERRORS = (ConfigValidationError, MapParseError, PlacementCapacityError)

CONFIG_NAME = 'config.json'
MANIFEST_NAME = 'manifest.json'
AGGREGATE_NAME = 'aggregate.csv'
METRICS = ('curves', 'colormap', 'diagram', 'snapshot')


@dataclass
class RunManifest:
    config_hash: str
    seeds: Dict[str, str]
    output_paths: Dict[str, str]
    tool_version: str
    started: str
    finished: Optional[str] = None
    status: str = 'running'
    failures: Dict[str, str] = field(default_factory=dict)

    def save(self, run_dir) -> Path:
        file_path = Path(run_dir) / MANIFEST_NAME
        utils.files.write_json(asdict(self), file_path)
        return file_path

    @classmethod
    def load(cls, run_dir) -> RunManifest:
        return cls(**utils.files.read_json(Path(run_dir) / MANIFEST_NAME))


@dataclass
class Check:
    name: str
    status: str
    message: str


@dataclass
class ValidationReport:
    checks: List[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(check.status != 'fail' for check in self.checks)

    @property
    def failures(self) -> List[Check]:
        return [check for check in self.checks if check.status == 'fail']

    @property
    def warnings(self) -> List[Check]:
        return [check for check in self.checks if check.status == 'warn']

    def add(self, name, status, message) -> None:
        self.checks.append(Check(name, status, message))

    def lines(self) -> List[str]:
        return [f"[{check.status.upper():4}] {check.name}: {check.message}" for check in self.checks]


def load_config(config_path=None, overrides: Sequence[str] = ()) -> utils.config.CrowdConfig:
    return utils.config.CrowdConfig(config_path, dict(utils.config.parse_override(o) for o in overrides))


def run_directory(settings: dict, output_root=None) -> Path:
    root = Path(output_root) if output_root is not None else utils.paths.output_root()
    task = settings['task']
    name = f"{task['name']}_n{task['n_agent']}_{utils.helper.config_hash(settings)}_s{settings['run']['master_seed']}"
    return root / name


def count_accumulators(settings: dict, n_groups: int) -> int:
    mode = GroupingMode(settings['lspi']['group_mode'])
    if mode is GroupingMode.INDEPENDENT:
        return settings['task']['n_agent']
    if mode is GroupingMode.SHARED_ACROSS_GROUPS:
        return 1
    return n_groups


def cmd_validate(config_path=None, overrides: Sequence[str] = ()) -> ValidationReport:
    """Check configuration, map, placement capacity and accumulator memory without running."""
    report = ValidationReport()
    try:
        settings = load_config(config_path, overrides).settings
    except (ConfigValidationError, OSError) as error:
        report.add('config', 'fail', str(error))
        return report
    report.add('config', 'pass', f"schema version {settings['schema_version']}, hash "
                                 f"{utils.helper.config_hash(settings)}")

    map_path = utils.config.resolve_map_path(settings)
    try:
        grid = read_map(map_path)
    except (MapParseError, OSError) as error:
        report.add('map', 'fail', str(error))
        return report
    report.add('map', 'pass', f"{map_path.name}: {grid.width}x{grid.height}, {grid.walkable_count} walkable cells")

    task = settings['task']
    plan = default_plan(task['name'], task['n_agent'])
    try:
        place_agents_checkerboard(grid, task['n_agent'], plan, Extent(utils.config.resolve_region(settings)))
        report.add('placement', 'pass', f"{task['n_agent']} agents placed in {len(plan)} group(s)")
    except (PlacementCapacityError, ConfigValidationError) as error:
        report.add('placement', 'fail', str(error))

    n_accumulators = count_accumulators(settings, len(plan))
    estimate = accumulator_memory_bytes(n_accumulators, settings['esn']['n_res'])
    budget = settings['lspi']['memory_budget_bytes']
    message = (f"{n_accumulators} accumulator(s) of size {settings['esn']['n_res'] + 1}^2 "
               f"need {estimate / 1e9:.2f} GB (budget {budget / 1e9:.2f} GB)")
    report.add('memory', 'warn' if estimate > budget else 'pass', message)
    return report


def _finish(manifest: RunManifest, result, run_dir: Path) -> None:
    manifest.failures = {str(i): message for i, message in result.failures.items()}
    if result.trials:
        curve = result.aggregate()
        metrics.emit(curve, run_dir / AGGREGATE_NAME, sidecar=_sidecar(manifest))
        manifest.output_paths['aggregate'] = str(run_dir / AGGREGATE_NAME)
    manifest.status = 'complete' if not result.failures else 'partial'
    manifest.finished = utils.helper.getTimeStamp()
    manifest.save(run_dir)


def _sidecar(manifest: RunManifest, **extra) -> dict:
    return dict(extra, config_hash=manifest.config_hash, seeds=manifest.seeds, tool_version=manifest.tool_version)


def cmd_run(config_path=None, overrides: Sequence[str] = (), output_root=None, jobs: Optional[int] = None,
            log_trajectories: bool = False) -> Path:
    config = load_config(config_path, overrides)
    if log_trajectories:
        config.override(log_trajectories=True)
    settings = config.settings
    # Fails early on unreadable maps and on too many agents for the region.
    Environment(Scope(settings))

    run_dir = run_directory(settings, output_root)
    run_settings = settings['run']
    utils.files.build_directory_structure(run_dir, run_settings['n_trials'], run_settings['log_trajectories'])
    utils.files.write_json(settings, run_dir / CONFIG_NAME)

    seeds = {str(i): utils.helper.trial_seed_label(utils.helper.trial_seed(run_settings['master_seed'], i))
             for i in range(run_settings['n_trials'])}
    manifest = RunManifest(
        config_hash=utils.helper.config_hash(settings),
        seeds=seeds,
        output_paths={'run_dir': str(run_dir), 'config': str(run_dir / CONFIG_NAME),
                      **{f'trial_{i}': str(utils.paths.trial_dir(run_dir, int(i))) for i in seeds}},
        tool_version=__version__,
        started=utils.helper.getTimeStamp(),
    )
    manifest.save(run_dir)
    logger.info(f"Running {run_settings['n_trials']} trial(s) into {run_dir}")

    result = run_batch(settings, run_dir, jobs)
    _finish(manifest, result, run_dir)
    return run_dir


def cmd_resume(run_dir, jobs: Optional[int] = None) -> Path:
    run_dir = Path(run_dir)
    settings = read_run_settings(run_dir)
    manifest = RunManifest.load(run_dir)
    if manifest.config_hash != utils.helper.config_hash(settings):
        raise ConfigValidationError(CONFIG_NAME, f"settings in {run_dir} do not match the manifest hash")
    manifest.status = 'running'
    manifest.save(run_dir)
    logger.info(f"Resuming {run_dir}")
    result = run_batch(settings, run_dir, jobs, resume=True)
    _finish(manifest, result, run_dir)
    return run_dir


def read_run_settings(run_dir) -> dict:
    return utils.config.CrowdConfig(Path(run_dir) / CONFIG_NAME).settings


def read_trials(run_dir, settings: dict, trial: Optional[int] = None) -> Dict[int, list]:
    indices = range(settings['run']['n_trials']) if trial is None else [trial]
    trials = {}
    for i in indices:
        trial_path = utils.paths.trial_dir(run_dir, i)
        if (trial_path / 'records.json').exists():
            trials[i] = read_records(trial_path)
        else:
            logger.warning(f"Trial {i} of {run_dir} has no records")
    if not trials:
        raise FileNotFoundError(f"No trial records found in {run_dir}; run or resume it first")
    return trials


def _curves(run_dir: Path, settings: dict, out: Path, trial: Optional[int]) -> List[Path]:
    trials = read_trials(run_dir, settings, trial)
    records = [trials[i] for i in sorted(trials)]
    manifest = RunManifest.load(run_dir)
    t_max = settings['task']['t_max']
    curve = metrics.learning_curve(records)
    written = metrics.emit(curve, out / 'curves.csv', _sidecar(manifest, trials=sorted(trials)))
    written += metrics.emit(curve.as_velocity(t_max), out / 'curves_velocity.csv',
                            _sidecar(manifest, trials=sorted(trials), t_max=t_max))
    group_ids = Environment(Scope(settings)).group_ids
    groups = np.unique(group_ids)
    if len(groups) > 1:
        for group in groups:
            group_curve = metrics.learning_curve(records, group_ids, int(group)).as_velocity(t_max)
            written += metrics.emit(group_curve, out / f'curves_velocity_group{group}.csv',
                                    _sidecar(manifest, trials=sorted(trials), t_max=t_max, group=int(group)))
    return written


def _windows(settings: dict, time_window, episode_window):
    if time_window is None:
        time_window = metrics.default_time_window(settings['task']['t_max'])
    if episode_window is None:
        episode_window = metrics.default_episode_window(settings['run']['n_episodes'])
    return tuple(time_window), tuple(episode_window)


def _colormap(run_dir: Path, settings: dict, out: Path, trial: Optional[int], time_window, episode_window,
              png: bool) -> List[Path]:
    time_window, episode_window = _windows(settings, time_window, episode_window)
    indices = range(settings['run']['n_trials']) if trial is None else [trial]
    grid = Scope(settings).grid
    density = metrics.density_from_logs([utils.paths.trial_dir(run_dir, i) for i in indices], grid,
                                        time_window, episode_window)
    manifest = RunManifest.load(run_dir)
    written = metrics.emit(density, out / 'density.csv', _sidecar(manifest, trials=list(indices)))
    if png:
        written.append(display.render_density(density, grid.walls, out / 'density.png'))
    return written


def _diagram(run_dirs: Sequence[Path], out: Path, episode_window) -> List[Path]:
    points, group_points = [], {}
    runs = {}
    for run_dir in run_dirs:
        settings = read_run_settings(run_dir)
        trials = read_trials(run_dir, settings)
        records = [trials[i] for i in sorted(trials)]
        task = settings['task']
        grid = Scope(settings).grid
        if episode_window is None:
            window = metrics.default_episode_window(min((len(r) for r in records), default=0))
        else:
            window = tuple(episode_window)
        points.append(metrics.fundamental_point(records, task['n_agent'], grid, task['t_max'], window))
        plan = default_plan(task['name'], task['n_agent'])
        if len(plan) > 1:
            for group in plan:
                group_points.setdefault(group.group_id, []).append(metrics.fundamental_point(
                    records, task['n_agent'], grid, task['t_max'], window, group.group_id))
        manifest = RunManifest.load(run_dir)
        runs[str(run_dir)] = dict(config_hash=manifest.config_hash, seeds=manifest.seeds, episode_window=list(window))

    sidecar = dict(runs=runs, tool_version=__version__)
    written = metrics.emit(points, out / 'diagram.csv', sidecar)
    for group, group_list in sorted(group_points.items()):
        written += metrics.emit(group_list, out / f'diagram_group{group}.csv', sidecar)
    return written


def _snapshot(run_dir: Path, settings: dict, out: Path, trial: Optional[int], episode: Optional[int],
              t: Optional[int], png: bool) -> List[Path]:
    trial = 0 if trial is None else trial
    episode = settings['run']['n_episodes'] if episode is None else episode
    t = metrics.default_time_window(settings['task']['t_max'])[0] if t is None else t
    labels = metrics.snapshot(utils.paths.trial_dir(run_dir, trial), episode, t, Scope(settings).grid)
    stem = f'snapshot_trial{trial}_episode{episode}_t{t}'
    csv_path = out / f'{stem}.csv'
    utils.files.write_rows_to_csv(labels.tolist(), csv_path, header=[f'x{i}' for i in range(labels.shape[1])])
    written = [csv_path]
    if png:
        written.append(display.render_snapshot(labels, out / f'{stem}.png'))
    return written


def cmd_metrics(run_dirs: Sequence, which: str, time_window=None, episode_window=None, out=None,
                png: bool = False, trial: Optional[int] = None, episode: Optional[int] = None,
                t: Optional[int] = None) -> List[Path]:
    """Compute one kind of metric artifact.

    Curves, colormaps and snapshots read the first run directory; the diagram
    takes one point per directory.
    """
    if which not in METRICS:
        raise ValueError(f"Unknown metric '{which}', expected one of {METRICS}")
    run_dirs = [Path(d) for d in run_dirs]
    if not run_dirs:
        raise ValueError("At least one run directory is required")
    if out is None:
        out = (run_dirs[0].parent if which == 'diagram' and len(run_dirs) > 1 else run_dirs[0]) / 'metrics'
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)

    if which == 'diagram':
        written = _diagram(run_dirs, out, episode_window)
    else:
        run_dir = run_dirs[0]
        settings = read_run_settings(run_dir)
        if which == 'curves':
            written = _curves(run_dir, settings, out, trial)
        elif which == 'colormap':
            written = _colormap(run_dir, settings, out, trial, time_window, episode_window, png)
        else:
            written = _snapshot(run_dir, settings, out, trial, episode, t, png)
    for file_path in written:
        logger.info(f"Wrote {file_path}")
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='reservoircrowd',
                                     description="Multi-agent pedestrian grid world trained with ESN-based LSPI")
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--log-level', default=os.getenv('RESERVOIRCROWD_LOG_LEVEL', 'INFO'),
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help="Logging level (CLI > env:RESERVOIRCROWD_LOG_LEVEL > INFO)")
    commands = parser.add_subparsers(dest='command', required=True)

    def config_arguments(sub):
        sub.add_argument('--config', type=Path, default=None, help="YAML or JSON configuration file")
        sub.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                         help="Override a setting, e.g. --set n_agent=40 or --set lspi.gamma=0.9")

    run = commands.add_parser('run', help="Train every trial of a configuration")
    config_arguments(run)
    run.add_argument('--output', type=Path, default=None,
                     help=f"Output root (CLI > env:{utils.paths.output_env_var} > ./runs)")
    run.add_argument('--jobs', type=int, default=None, help="Worker processes, 0 for every core")
    run.add_argument('--log-trajectories', action='store_true', help="Record positions for colormaps")

    resume = commands.add_parser('resume', help="Continue the unfinished trials of a run")
    resume.add_argument('run_dir', type=Path)
    resume.add_argument('--jobs', type=int, default=None)

    metric = commands.add_parser('metrics', help="Compute curves, colormaps, diagrams or snapshots")
    metric.add_argument('run_dirs', type=Path, nargs='+')
    metric.add_argument('--which', choices=METRICS, default='curves')
    metric.add_argument('--time-window', type=int, nargs=2, metavar=('FIRST', 'LAST'), default=None)
    metric.add_argument('--episode-window', type=int, nargs=2, metavar=('FIRST', 'LAST'), default=None)
    metric.add_argument('--trial', type=int, default=None)
    metric.add_argument('--episode', type=int, default=None)
    metric.add_argument('--t', type=int, default=None)
    metric.add_argument('--out', type=Path, default=None)
    metric.add_argument('--png', action='store_true', help="Also render PNG images")

    validate = commands.add_parser('validate', help="Dry-run checks of a configuration")
    config_arguments(validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        if args.command == 'run':
            print(cmd_run(args.config, args.overrides, args.output, args.jobs, args.log_trajectories))
        elif args.command == 'resume':
            print(cmd_resume(args.run_dir, args.jobs))
        elif args.command == 'metrics':
            cmd_metrics(args.run_dirs, args.which, args.time_window, args.episode_window, args.out, args.png,
                        args.trial, args.episode, args.t)
        else:
            report = cmd_validate(args.config, args.overrides)
            print('\n'.join(report.lines()))
            return EXIT_OK if report.ok else EXIT_VALIDATION
    except VALIDATION_ERRORS as error:
        logger.error(str(error))
        return EXIT_VALIDATION
    except Exception as error:
        logger.error(f"{type(error).__name__}: {error}")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())

"""Writes metric artifacts as CSV, 16-bit PGM and JSON sidecars, and reads them back."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from reservoircrowd.utils import files
from reservoircrowd.utils.errors import InvalidArgumentError

from .curves import LearningCurve
from .density import DensityMap
from .diagram import FundamentalPoint

logger = logging.getLogger(__name__)

CURVE_HEADER = ['episode', 'mean', 'best', 'worst', 'se_mean', 'se_best', 'se_worst']
DIAGRAM_HEADER = ['n_agent', 'rho_bar', 'v_bar', 'se']
PGM_MAXVAL = 65535


def sidecar_path(path) -> Path:
    return Path(path).with_suffix('.json')


def write_sidecar(path, sidecar: Optional[dict]) -> Path:
    target = sidecar_path(path)
    files.write_json(sidecar or {}, target)
    return target


def emit(artifact, path, sidecar: Optional[dict] = None) -> List[Path]:
    if isinstance(artifact, LearningCurve):
        return emit_curve(artifact, path, sidecar)
    if isinstance(artifact, DensityMap):
        return emit_density(artifact, path, sidecar)
    if isinstance(artifact, Sequence) and all(isinstance(p, FundamentalPoint) for p in artifact):
        return emit_diagram(artifact, path, sidecar)
    raise InvalidArgumentError(f"Cannot emit an artifact of type {type(artifact).__name__}")


def emit_curve(curve: LearningCurve, path, sidecar: Optional[dict] = None) -> List[Path]:
    path = Path(path)
    files.write_rows_to_csv(curve.rows(), path, header=CURVE_HEADER)
    meta = dict(sidecar or {}, n_trials=curve.n_trials, single_trial=curve.single_trial, unit=curve.unit)
    logger.info(f"Wrote learning curve ({len(curve)} episodes) to {path}")
    return [path, write_sidecar(path, meta)]


def read_curve(path) -> LearningCurve:
    header, rows = files.read_csv_rows(path)
    if header != CURVE_HEADER:
        raise InvalidArgumentError(f"{path} is not a learning-curve CSV (header {header})")
    meta = files.read_json(sidecar_path(path)) if sidecar_path(path).exists() else {}
    columns = np.array([[float(v) for v in row] for row in rows], dtype=np.float64).reshape(-1, len(CURVE_HEADER))
    return LearningCurve(columns[:, 0].astype(np.int64), *columns[:, 1:].T,
                         n_trials=int(meta.get('n_trials', 0)), unit=meta.get('unit', 'reward'))


def emit_diagram(points: Sequence[FundamentalPoint], path, sidecar: Optional[dict] = None) -> List[Path]:
    path = Path(path)
    ordered = sorted(points, key=lambda p: p.n_agent)
    files.write_rows_to_csv([[p.n_agent, p.rho_bar, p.v_bar, p.se] for p in ordered], path, header=DIAGRAM_HEADER)
    meta = dict(sidecar or {})
    groups = {p.group for p in ordered}
    if groups != {None}:
        meta['group'] = groups.pop() if len(groups) == 1 else sorted(g for g in groups if g is not None)
    logger.info(f"Wrote fundamental diagram ({len(ordered)} points) to {path}")
    return [path, write_sidecar(path, meta)]


def read_diagram(path) -> List[FundamentalPoint]:
    header, rows = files.read_csv_rows(path)
    if header != DIAGRAM_HEADER:
        raise InvalidArgumentError(f"{path} is not a fundamental-diagram CSV (header {header})")
    meta = files.read_json(sidecar_path(path)) if sidecar_path(path).exists() else {}
    group = meta.get('group') if isinstance(meta.get('group'), int) else None
    return [FundamentalPoint(int(row[0]), float(row[1]), float(row[2]), float(row[3]), group) for row in rows]


def write_pgm(values: np.ndarray, path) -> Path:
    """16-bit binary PGM (P5, big-endian), scaled so the largest value maps to 65535."""
    path = Path(path)
    values = np.asarray(values, dtype=np.float64)
    peak = values.max(initial=0.0)
    if peak > 0:
        pixels = np.rint(PGM_MAXVAL * values / peak).astype('>u2')
    else:
        pixels = np.zeros(values.shape, dtype='>u2')
    height, width = values.shape
    try:
        with open(path, 'wb') as pgm:
            pgm.write(f'P5\n{width} {height}\n{PGM_MAXVAL}\n'.encode('ascii'))
            pgm.write(pixels.tobytes())
    except OSError as error:
        raise OSError(f"Could not write PGM file {path}: {error}") from error
    return path


def read_pgm(path) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as error:
        raise OSError(f"Could not read PGM file {path}: {error}") from error
    fields, offset = [], 0
    while len(fields) < 4:
        while data[offset:offset + 1].isspace():
            offset += 1
        end = offset
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[offset:end].decode('ascii'))
        offset = end
    if fields[0] != 'P5' or int(fields[3]) != PGM_MAXVAL:
        raise InvalidArgumentError(f"{path} is not a 16-bit binary PGM")
    width, height = int(fields[1]), int(fields[2])
    return np.frombuffer(data[offset + 1:], dtype='>u2', count=width * height).reshape(height, width)


def density_file(path, group: int, suffix: str) -> Path:
    path = Path(path)
    return path.with_name(f'{path.stem}_group{group}{suffix}')


def emit_density(density: DensityMap, path, sidecar: Optional[dict] = None) -> List[Path]:
    """One CSV and one PGM per group next to ``path``; the sidecar at ``path``.json."""
    written = []
    for group in density.groups:
        grid = density.group(group)
        csv_path = density_file(path, group, '.csv')
        files.write_rows_to_csv([[float(v) for v in row] for row in grid], csv_path,
                                header=[f'x{i}' for i in range(grid.shape[1])])
        written += [csv_path, write_pgm(grid, density_file(path, group, '.pgm'))]
    meta = dict(sidecar or {}, groups=list(density.groups), time_window=list(density.time_window),
                episode_window=list(density.episode_window), n_snapshots=density.n_snapshots)
    written.append(write_sidecar(path, meta))
    logger.info(f"Wrote density maps for groups {list(density.groups)} next to {path}")
    return written


def read_density(path) -> DensityMap:
    meta = files.read_json(sidecar_path(path))
    layers = []
    for group in meta['groups']:
        _, rows = files.read_csv_rows(density_file(path, group, '.csv'))
        layers.append([[float(v) for v in row] for row in rows])
    return DensityMap(np.array(layers, dtype=np.float64), tuple(meta['groups']), tuple(meta['time_window']),
                      tuple(meta['episode_window']), int(meta['n_snapshots']))

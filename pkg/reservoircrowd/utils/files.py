"""Contains file/directory related utility functions, such as functions for writing to csv files."""
import csv
import json
from pathlib import Path

import numpy as np


def build_directory_structure(run_dir, n_trials, log_trajectories=False) -> None:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    for i in range(n_trials):
        trial = run_dir / f'trial_{i:03d}'
        trial.mkdir(exist_ok=True)
        if log_trajectories:
            (trial / 'trajectories').mkdir(exist_ok=True)


def write_rows_to_csv(rows, file_path, header=None) -> None:
    try:
        with open(file_path, 'w', newline='') as csv_file:
            writer = csv.writer(csv_file, delimiter=',', lineterminator='\n')
            if header is not None:
                writer.writerow(header)
            writer.writerows(rows)
    except OSError as error:
        raise OSError(f"Could not write csv file {file_path}: {error}") from error


def read_csv_rows(file_path):
    try:
        with open(file_path, newline='') as csv_file:
            reader = csv.reader(csv_file, delimiter=',')
            header = next(reader, None)
            rows = [row for row in reader if row]
    except OSError as error:
        raise OSError(f"Could not read csv file {file_path}: {error}") from error
    return header, rows


def _to_builtin(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json(data, file_path) -> None:
    try:
        with open(file_path, 'w', encoding='utf-8') as json_file:
            json.dump(data, json_file, indent=2, sort_keys=True, default=_to_builtin)
            json_file.write('\n')
    except OSError as error:
        raise OSError(f"Could not write json file {file_path}: {error}") from error


def read_json(file_path):
    try:
        with open(file_path, encoding='utf-8') as json_file:
            return json.load(json_file)
    except OSError as error:
        raise OSError(f"Could not read json file {file_path}: {error}") from error

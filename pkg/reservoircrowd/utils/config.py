"""Contains functionality for reading, processing and validating reservoircrowd configuration settings."""
import copy
import logging
from pathlib import Path
from typing import Dict, List

import yaml
from cerberus import Validator

from . import paths as dcp  # default configuration paths
from .errors import ConfigValidationError

logger = logging.getLogger(__name__)

# Placement regions (x0, x1, y0, y1), inclusive, of the shipped maps.
DEFAULT_REGIONS = {
    'task1': [0, 19, 1, 4],
    'task2': [0, 19, 0, 7],
}
DEFAULT_MAPS = {
    'task1': dcp.task1_map,
    'task2': dcp.task2_map,
}


class _CrowdValidator(Validator):
    """Validator registering the named coercers referenced by config_schema.yaml."""

    def _normalize_coerce_float(self, value):
        return float(value)


class CrowdConfig:
    """Class for maintaining experiment configuration settings.

    Defaults are read from the packaged config.yaml, a user file (YAML or JSON)
    is merged over them section by section, and keyword overrides are applied
    last. Every stage is validated against config_schema.yaml.
    """

    def __init__(self, config_file_name: Path = None, overrides: Dict[str, object] = None):

        self._schema = read_yaml_into_dict(dcp.config_schema)
        self.validator = _CrowdValidator(self._schema)
        self._valid_sections = self.extract_valid_sections()

        self.parse(config_file_name)
        self.override(**(overrides or {}))

    @property
    def settings(self):
        return self._settings

    @settings.setter
    def settings(self, new_settings: dict):
        self._settings = new_settings

    def extract_valid_sections(self) -> List[str]:
        if self._schema is None:
            raise ValueError("No configuration schema provided!")

        return [section for section, rules in self._schema.items() if rules.get('type') == 'dict']

    def validate(self, settings: dict) -> dict:
        if not settings:
            raise ValueError("Empty settings!")

        if not self._schema:
            raise ValueError("Empty schema!")

        if not self.validator.validate(settings):
            key, message = _first_error(self.validator.errors)
            raise ConfigValidationError(key, message)

        settings = self.validator.document
        check_cross_field_rules(settings)
        return settings

    def parse(self, file_name=None) -> None:
        settings = read_yaml_into_dict(dcp.config)
        if file_name is not None:
            user = read_yaml_into_dict(file_name) or {}
            settings = merge_settings(settings, user)
        self._settings = self.validate(settings)

    def override(self, **kwargs) -> None:
        if not kwargs:
            return

        new_settings = copy.deepcopy(self._settings)
        for key, value in kwargs.items():
            section, name = self.locate_key(key)
            new_settings[section][name] = value
            logger.debug(f"Override {section}.{name} = {value!r}")

        self._settings = self.validate(new_settings)

    def locate_key(self, key: str):
        if '.' in key:
            section, name = key.split('.', 1)
            if section not in self._valid_sections:
                raise ConfigValidationError(key, "override in non-existing section")
            if name not in self._schema[section]['schema']:
                raise ConfigValidationError(key, "unknown key")
            return section, name

        sections = [s for s in self._valid_sections if key in self._schema[s]['schema']]
        if not sections:
            raise ConfigValidationError(key, "unknown key")
        if len(sections) > 1:
            raise ConfigValidationError(key, f"ambiguous key, prefix one of {sections}")
        return sections[0], key

    @property
    def map_path(self) -> Path:
        return resolve_map_path(self._settings)

    @property
    def region(self) -> List[int]:
        return resolve_region(self._settings)


def check_cross_field_rules(settings: dict) -> None:
    esn, lspi, task = settings['esn'], settings['lspi'], settings['task']
    if task['region'] is not None:
        x0, x1, y0, y1 = task['region']
        if x1 < x0 or y1 < y0:
            raise ConfigValidationError('region', f"empty placement region {task['region']}")
    if not esn['p_s1_in'] <= esn['p_s2_in'] <= esn['p_s3_in']:
        raise ConfigValidationError('p_s2_in', "sparsities must satisfy p_s1_in <= p_s2_in <= p_s3_in")
    if not 0.0 < esn['rho'] < 1.0:
        raise ConfigValidationError('rho', "spectral radius must lie in (0, 1)")
    if not 0.0 < esn['alpha'] <= 1.0:
        raise ConfigValidationError('alpha', "leaking rate must lie in (0, 1]")
    for key in ('sigma_in_o', 'sigma_in_a', 'sigma_in_b', 'sigma_res_0'):
        if not esn[key] > 0.0:
            raise ConfigValidationError(key, "standard deviation must be positive")
    if not 0.0 < lspi['gamma'] < 1.0:
        raise ConfigValidationError('gamma', "discount factor must lie in (0, 1)")
    if not 0.0 < lspi['lambda_'] <= 1.0:
        raise ConfigValidationError('lambda_', "forgetting factor must lie in (0, 1]")
    if not lspi['beta'] > 0.0:
        raise ConfigValidationError('beta', "must be positive")


def merge_settings(defaults: dict, user: dict) -> dict:
    merged = copy.deepcopy(defaults)
    for key, value in user.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key].update(value)
        else:
            merged[key] = value
    return merged


def _first_error(errors, prefix=''):
    for key in sorted(errors, key=str):
        for item in errors[key]:
            if isinstance(item, dict):
                return _first_error(item, f"{prefix}{key}.")
            return f"{prefix}{key}", item
    return prefix.rstrip('.'), "invalid value"


def read_yaml_into_dict(file_name=dcp.config) -> dict:
    try:
        with open(file_name, encoding="utf-8") as config_file:
            output_dict = yaml.safe_load(config_file)
    except OSError as error:
        raise OSError(f"Could not read configuration file {file_name}: {error}") from error
    return output_dict


def parse_override(text: str):
    """Split a 'key=value' override, typing the value with the YAML parser.

    Raises:
        ConfigValidationError: On a missing '=' sign.
    """
    if '=' not in text:
        raise ConfigValidationError(text, "override must have the form key=value")
    key, value = text.split('=', 1)
    return key.strip(), yaml.safe_load(value)


def resolve_map_path(settings: dict) -> Path:
    task = settings['task']
    if task['map'] is not None:
        return Path(task['map'])
    return DEFAULT_MAPS[task['name']]


def resolve_region(settings: dict) -> List[int]:
    task = settings['task']
    if task['region'] is not None:
        return list(task['region'])
    return list(DEFAULT_REGIONS[task['name']])

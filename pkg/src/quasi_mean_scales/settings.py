from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from loguru import logger
import yaml

from quasi_mean_scales import core, families
from quasi_mean_scales.errors import ValidationError
from quasi_mean_scales.utils import ATOL, RTOL, DEFAULT_SEED, MIN_GRID_SIZE

COMMANDS = ('eval', 'solve', 'compare', 'verify', 'curve', 'bound')
FORMATS = ('json', 'csv')


@dataclass(frozen=True)
class FamilySpec:
    """A built-in family name with an optional parameter, written ``name[:param]``."""
    name: str
    param: Optional[float] = None

    def __post_init__(self):
        if self.name not in families.FAMILIES:
            raise ValidationError(f'Unknown family {self.name!r}; built-ins are {", ".join(families.FAMILIES)}.')

    @classmethod
    def parse(cls, text: str) -> 'FamilySpec':
        name, _, param = str(text).strip().partition(':')
        if not param:
            return cls(name)
        try:
            return cls(name, float(param))
        except ValueError:
            raise ValidationError(f'Family parameter in {text!r} is not a number.')

    def family(self, window: Tuple[float, float] = None) -> families.ParametricFamily:
        fam = families.get_family(self.name)
        if window is not None:
            fam = fam.with_window(*window)
        return fam

    def generator(self) -> core.Generator:
        if self.param is None:
            raise ValidationError(f'{self.name} needs a parameter here, e.g. {self.name}:2.')
        fam = self.family()
        if not fam.param_interval.contains(self.param):
            raise ValidationError(f'Parameter {self.param} is outside {fam.param_interval} for {self.name}.')
        return fam.make(self.param)

    def __str__(self):
        return self.name if self.param is None else f'{self.name}:{self.param:g}'


@dataclass(frozen=True)
class RunConfig:
    command: str
    family: Optional[FamilySpec] = None
    f: Optional[FamilySpec] = None
    g: Optional[FamilySpec] = None
    k: Optional[FamilySpec] = None
    data_path: Optional[str] = None
    output_format: str = 'json'
    target: Optional[float] = None
    atol: float = ATOL
    rtol: float = RTOL
    window: Optional[Tuple[float, float]] = None
    interval: Optional[Tuple[float, float]] = None
    x_grid: int = 32
    t_grid: int = 32
    grid_size: int = 64
    n_points: int = 50
    n_samples: int = 1000
    seed: int = DEFAULT_SEED
    n_workers: int = 1
    progress: bool = False

    def validate(self) -> 'RunConfig':
        if self.command not in COMMANDS:
            raise ValidationError(f'Unknown command {self.command!r}; expected one of {COMMANDS}.')
        if self.output_format not in FORMATS:
            raise ValidationError(f'Unknown output format {self.output_format!r}; expected one of {FORMATS}.')
        for name in ('atol', 'rtol'):
            if not getattr(self, name) > 0:
                raise ValidationError(f'{name} must be positive, got {getattr(self, name)}.')
        for name in ('x_grid', 't_grid', 'grid_size'):
            if getattr(self, name) < MIN_GRID_SIZE:
                raise ValidationError(f'{name} must be at least {MIN_GRID_SIZE}, got {getattr(self, name)}.')
        if self.n_points < 2 or self.n_samples < 1:
            raise ValidationError('n_points must be at least 2 and n_samples at least 1.')
        for name in ('window', 'interval'):
            pair = getattr(self, name)
            if pair is not None and not pair[0] < pair[1]:
                raise ValidationError(f'{name} needs lo < hi, got {pair}.')

        required = {
            'eval': ('family', 'data_path'),
            'solve': ('family', 'data_path', 'target'),
            'compare': ('f', 'g'),
            'verify': ('family',),
            'curve': ('family', 'data_path'),
            'bound': ('f', 'k', 'interval'),
        }[self.command]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValidationError(f'{self.command} needs {", ".join(missing)}.')
        return self


def load_settings(path: Union[str, Path]) -> Dict:
    """Settings from a yaml file; keys are RunConfig field names."""
    with Path(path).open() as settings_file:
        settings = yaml.safe_load(settings_file) or {}
    if not isinstance(settings, dict):
        raise ValidationError(f'{path} must hold a mapping of settings.')
    known = {f.name for f in fields(RunConfig)} - {'command'}
    unknown = set(settings) - known
    if unknown:
        raise ValidationError(f'Unknown settings in {path}: {", ".join(sorted(unknown))}.')
    logger.debug(f'Loaded settings {sorted(settings)} from {path}.')
    return settings


def _coerce(name: str, value):
    if name in ('family', 'f', 'g', 'k') and not isinstance(value, FamilySpec):
        return FamilySpec.parse(value)
    if name in ('window', 'interval'):
        if isinstance(value, str):
            value = value.split(',')
        if len(value) != 2:
            raise ValidationError(f'{name} needs two numbers, got {value}.')
        return float(value[0]), float(value[1])
    if name == 'data_path':
        return str(value)
    return value


def build_config(command: str, settings_path: Union[str, Path] = None, **options) -> RunConfig:
    """Defaults, overridden by the settings file, overridden by explicit options."""
    config = RunConfig(command)
    settings = load_settings(settings_path) if settings_path else {}
    settings.update({name: value for name, value in options.items() if value is not None})
    config = replace(config, **{name: _coerce(name, value) for name, value in settings.items()})
    return config.validate()

"""This module loads model specs and experiment configs from TOML files.

Every problem found in a file is raised as a :class:`ConfigError` naming the
dotted key path of the offending field, e.g. ``grid.deltas`` or ``theta[1]``.

A model spec file looks like::

    T = 100
    n1 = 50
    n2 = 50
    symmetric = true
    dependence = "independent"
    change_points = [51]
    theta = [0.1, "post.csv"]

where each ``theta`` entry is a constant or the path, relative to the file, of a
dense CSV matrix. See ``configs/`` for experiment files.
"""

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import tomli_w

from .constants import (DEFAULT_CAP, DEFAULT_INTERVALS, DEFAULT_REPETITIONS, DEPENDENCE, MECHANISM,
                        METHOD, SHRINK_FRACTION, TAURULE)
from .netgen import ModelSpec, ProbMatrix, validate_spec
from .simlab import ExperimentConfig

LOGGER = logging.getLogger(__name__)

PathLike = Union[str, Path]

_MISSING = object()

MODEL_SPEC_KEYS = ('T', 'n1', 'n2', 'symmetric', 'dependence', 'change_points', 'theta')
"""Tuple[str]: Keys allowed in a model spec file."""

EXPERIMENT_SECTIONS = {
    '': ('seed', 'threads', 'model', 'grid', 'detector', 'output'),
    'model': ('n', 'n1', 'n2', 'symmetric', 'dependence', 'theta_pre', 'theta_post'),
    'grid': ('deltas', 'alphas', 'scenarios', 'repetitions'),
    'detector': ('method', 'intervals', 'cap', 'shrink', 'tau_rule'),
    'output': ('raw_csv', 'summary_csv', 'plot_dir', 'record_runtime'),
}
"""Dict(str, Tuple[str]): Keys allowed in each section of an experiment file."""


class ConfigError(ValueError):
    """A bad or missing field in a configuration file.

    Attributes:
        key_path (str): Dotted path of the field, e.g. ``model.n1``.
        message (str): What is wrong with it.

    """

    def __init__(self, key_path: str, message: str) -> None:
        super().__init__(f'{key_path}: {message}')
        self.key_path = key_path
        self.message = message


def _join(prefix: str, key: str) -> str:
    return f'{prefix}.{key}' if prefix else key


def _kind_names(kinds: Tuple[type, ...]) -> str:
    return ' or '.join(kind.__name__ for kind in kinds)


def _take(table: Dict[str, Any], key: str, kinds: Tuple[type, ...], prefix: str = '',
          default: Any = _MISSING) -> Any:
    """Fetch ``table[key]`` checking its type; ``bool`` only matches when listed explicitly."""
    key_path = _join(prefix, key)
    if key not in table:
        if default is _MISSING:
            raise ConfigError(key_path, 'missing required key')
        return default
    value = table[key]
    if isinstance(value, bool) and bool not in kinds:
        raise ConfigError(key_path, f'expected {_kind_names(kinds)}, got bool')
    if not isinstance(value, kinds):
        raise ConfigError(key_path, f'expected {_kind_names(kinds)}, got {type(value).__name__}')
    return value


def _take_list(table: Dict[str, Any], key: str, kinds: Tuple[type, ...], prefix: str = '',
               default: Any = _MISSING) -> List[Any]:
    values = _take(table, key, (list,), prefix, default)
    for i, value in enumerate(values):
        if isinstance(value, bool) or not isinstance(value, kinds):
            raise ConfigError(f'{_join(prefix, key)}[{i}]',
                              f'expected {_kind_names(kinds)}, got {type(value).__name__}')
    return list(values)


def _check_keys(table: Dict[str, Any], allowed: Tuple[str, ...], prefix: str = '') -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError(_join(prefix, key), 'unknown key')


def _positive_int(table: Dict[str, Any], key: str, prefix: str = '', default: Any = _MISSING) -> int:
    value = _take(table, key, (int,), prefix, default)
    if value < 1:
        raise ConfigError(_join(prefix, key), f'must be a positive integer, got {value}')
    return value


def _enum(enum_cls: Any, value: Any, key_path: str) -> Any:
    try:
        return enum_cls(value)
    except ValueError:
        choices = ', '.join(repr(member.value) for member in enum_cls)
        raise ConfigError(key_path, f'{value!r} is not one of {choices}') from None


def load_toml(path: PathLike) -> Dict[str, Any]:
    """Parse a TOML file.

    Raises:
        OSError: If the file cannot be read.
        ConfigError: If it is not valid TOML; the key path is the file name.

    """
    with open(path, 'rb') as handle:
        try:
            return tomllib.load(handle)
        except tomllib.TOMLDecodeError as err:
            raise ConfigError(str(path), f'invalid TOML: {err}') from err


def _load_theta(entry: Any, key_path: str, base_dir: Path, shape: Tuple[int, int], symmetric: bool) -> ProbMatrix:
    if isinstance(entry, bool) or not isinstance(entry, (int, float, str)):
        raise ConfigError(key_path, f'expected a number or a CSV path, got {type(entry).__name__}')
    try:
        if isinstance(entry, str):
            csv_path = base_dir / entry
            try:
                values = np.loadtxt(csv_path, delimiter=',', ndmin=2)
            except OSError as err:
                raise ConfigError(key_path, f'cannot read {csv_path}: {err}') from err
            if values.shape != shape:
                raise ConfigError(key_path, f'{csv_path} has shape {values.shape}, expected {shape}')
            return ProbMatrix(values, symmetric=symmetric)
        return ProbMatrix.constant(shape[0], shape[1], float(entry), symmetric=symmetric)
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(key_path, str(err)) from err


def model_spec_from_dict(data: Dict[str, Any], base_dir: PathLike = '.') -> ModelSpec:
    """Build and validate a :class:`~privnet_cpd.netgen.ModelSpec` from parsed TOML.

    Raises:
        ConfigError: For the first bad or missing field.

    """
    _check_keys(data, MODEL_SPEC_KEYS)
    horizon = _positive_int(data, 'T')
    n1 = _positive_int(data, 'n1')
    n2 = _positive_int(data, 'n2')
    symmetric = _take(data, 'symmetric', (bool,), default=False)
    dependence = _enum(DEPENDENCE, _take(data, 'dependence', (str,), default='independent'), 'dependence')
    change_points = _take_list(data, 'change_points', (int,), default=[])
    thetas = _take(data, 'theta', (list,))

    if symmetric and n1 != n2:
        raise ConfigError('n2', f'symmetric models need n1 == n2, got {n1} and {n2}')
    if symmetric and dependence is DEPENDENCE.identical_rows:
        raise ConfigError('dependence', 'identical_rows is only valid for bipartite models')
    previous = 1
    for i, eta in enumerate(change_points):
        if not 2 <= eta <= horizon:
            raise ConfigError(f'change_points[{i}]', f'{eta} outside 2 .. {horizon}')
        if eta <= previous:
            raise ConfigError(f'change_points[{i}]', 'change points must be strictly increasing')
        previous = eta
    if len(thetas) != len(change_points) + 1:
        raise ConfigError('theta', f'expected {len(change_points) + 1} entries, got {len(thetas)}')

    base = Path(base_dir)
    segments = tuple(_load_theta(entry, f'theta[{k}]', base, (n1, n2), symmetric) for k, entry in enumerate(thetas))
    spec = ModelSpec(T=horizon, n1=n1, n2=n2, change_points=tuple(change_points), segment_thetas=segments,
                     dependence=dependence, symmetric=symmetric)
    try:
        validate_spec(spec)
    except ValueError as err:
        raise ConfigError('theta', str(err)) from err
    return spec


def load_model_spec(path: PathLike) -> ModelSpec:
    """Load a model spec file; CSV paths inside it are relative to the file."""
    spec = model_spec_from_dict(load_toml(path), Path(path).parent)
    LOGGER.debug(f'Loaded model spec from {path}: T={spec.T} n1={spec.n1} n2={spec.n2} K={spec.K}')
    return spec


def dump_model_spec(spec: ModelSpec, path: PathLike) -> Path:
    """Write a model spec file.

    Constant segment matrices are written as numbers; any other matrix goes to
    ``<stem>_theta<k>.csv`` next to the file.

    Returns:
        pathlib.Path: The spec file written.

    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    thetas: List[Union[float, str]] = []
    for k, theta in enumerate(spec.segment_thetas):
        values = theta.values
        if values.size and np.all(values == values.flat[0]):
            thetas.append(float(values.flat[0]))
        else:
            name = f'{target.stem}_theta{k}.csv'
            np.savetxt(target.parent / name, values, fmt='%.17g', delimiter=',')
            thetas.append(name)
    data = {
        'T': spec.T,
        'n1': spec.n1,
        'n2': spec.n2,
        'symmetric': spec.symmetric,
        'dependence': spec.dependence.value,
        'change_points': list(spec.change_points),
        'theta': thetas,
    }
    with open(target, 'wb') as handle:
        tomli_w.dump(data, handle)
    LOGGER.debug(f'Wrote model spec to {target}.')
    return target


def _tau_rules(table: Dict[str, Any]) -> Dict[MECHANISM, Union[TAURULE, float]]:
    rules: Dict[MECHANISM, Union[TAURULE, float]] = {}
    for name, value in table.items():
        key_path = f'detector.tau_rule.{name}'
        scenario = _enum(MECHANISM, name, key_path)
        if isinstance(value, bool) or not isinstance(value, (str, int, float)):
            raise ConfigError(key_path, 'expected a rule name or a positive number')
        if isinstance(value, str):
            rules[scenario] = _enum(TAURULE, value, key_path)
        elif value <= 0:
            raise ConfigError(key_path, f'a fixed tau must be positive, got {value}')
        else:
            rules[scenario] = float(value)
    return rules


def _output_path(table: Dict[str, Any], key: str, base_dir: Path) -> Optional[Path]:
    value = _take(table, key, (str,), 'output', None)
    return None if value is None else base_dir / value


def experiment_from_dict(data: Dict[str, Any],  # pylint: disable=too-many-locals
                         base_dir: PathLike = '.',
                         ) -> ExperimentConfig:
    """Build an :class:`~privnet_cpd.simlab.ExperimentConfig` from parsed TOML.

    Output paths are relative to ``base_dir``.

    Raises:
        ConfigError: For the first bad or missing field.

    """
    _check_keys(data, EXPERIMENT_SECTIONS[''])
    sections = {}
    for name in ('model', 'grid', 'detector', 'output'):
        sections[name] = _take(data, name, (dict,), default={})
        _check_keys(sections[name], EXPERIMENT_SECTIONS[name], name)
    model, grid, detector, output = (sections[name] for name in ('model', 'grid', 'detector', 'output'))

    seed = _take(data, 'seed', (int,), default=0)
    if seed < 0:
        raise ConfigError('seed', f'must be non-negative, got {seed}')
    threads = _positive_int(data, 'threads') if 'threads' in data else None

    if 'n' in model and ('n1' in model or 'n2' in model):
        raise ConfigError('model.n', 'give either n or n1/n2, not both')
    if 'n' in model:
        n1 = n2 = _positive_int(model, 'n', 'model')
    else:
        n1 = _positive_int(model, 'n1', 'model', 50)
        n2 = _positive_int(model, 'n2', 'model', n1)
    symmetric = _take(model, 'symmetric', (bool,), 'model', True)
    if symmetric and n1 != n2:
        raise ConfigError('model.n2', f'symmetric models need n1 == n2, got {n1} and {n2}')
    dependence = _enum(DEPENDENCE, _take(model, 'dependence', (str,), 'model', 'independent'), 'model.dependence')
    theta_pre = float(_take(model, 'theta_pre', (int, float), 'model', 0.1))
    theta_post = float(_take(model, 'theta_post', (int, float), 'model', 0.4))
    for key, value in (('theta_pre', theta_pre), ('theta_post', theta_post)):
        if not 0 <= value <= 1:
            raise ConfigError(f'model.{key}', f'must lie in [0, 1], got {value}')

    deltas = _take_list(grid, 'deltas', (int,), 'grid')
    if not deltas:
        raise ConfigError('grid.deltas', 'the grid is empty')
    for i, delta in enumerate(deltas):
        if delta < 2:
            raise ConfigError(f'grid.deltas[{i}]', f'must be at least 2, got {delta}')
    alphas = [float(alpha) for alpha in _take_list(grid, 'alphas', (int, float), 'grid', [])]
    for i, alpha in enumerate(alphas):
        if not alpha > 0:
            raise ConfigError(f'grid.alphas[{i}]', f'must be positive, got {alpha}')
    scenarios = [_enum(MECHANISM, name, f'grid.scenarios[{i}]')
                 for i, name in enumerate(_take_list(grid, 'scenarios', (str,), 'grid', ['none']))]
    if not scenarios:
        raise ConfigError('grid.scenarios', 'no scenarios given')
    if any(s is not MECHANISM.none for s in scenarios) and not alphas:
        raise ConfigError('grid.alphas', 'private scenarios need a nonempty alpha grid')
    if MECHANISM.node in scenarios and symmetric:
        raise ConfigError('model.symmetric', 'the node scenario needs a bipartite model (symmetric = false)')
    repetitions = _positive_int(grid, 'repetitions', 'grid', DEFAULT_REPETITIONS)

    method = _enum(METHOD, _take(detector, 'method', (str,), 'detector', 'bs'), 'detector.method')
    intervals = _positive_int(detector, 'intervals', 'detector', DEFAULT_INTERVALS)
    cap_value = _take(detector, 'cap', (int, float, bool), 'detector', DEFAULT_CAP)
    if cap_value is True:
        raise ConfigError('detector.cap', 'expected a number, or false for no cap')
    cap = None if cap_value is False else float(cap_value)
    if cap is not None and not cap > 0:
        raise ConfigError('detector.cap', f'must be positive, got {cap}')
    if cap is not None and method is METHOD.nbs and cap * min(deltas) / 2 < 2:
        raise ConfigError('detector.cap',
                          f'seed intervals need cap * min(deltas) / 2 >= 2, got {cap} * {min(deltas)} / 2')
    shrink = float(_take(detector, 'shrink', (int, float), 'detector', SHRINK_FRACTION))
    if not 0 <= shrink < 0.5:
        raise ConfigError('detector.shrink', f'must lie in [0, 1/2), got {shrink}')
    tau_rules = _tau_rules(_take(detector, 'tau_rule', (dict,), 'detector', {}))

    base = Path(base_dir)
    raw_csv, summary_csv, plot_dir = (_output_path(output, key, base) for key in ('raw_csv', 'summary_csv', 'plot_dir'))
    record_runtime = _take(output, 'record_runtime', (bool,), 'output', False)
    try:
        return ExperimentConfig(deltas=tuple(deltas),
                                alphas=tuple(alphas),
                                scenarios=tuple(scenarios),
                                n1=n1,
                                n2=n2,
                                theta_pre=theta_pre,
                                theta_post=theta_post,
                                symmetric=symmetric,
                                dependence=dependence,
                                repetitions=repetitions,
                                method=method,
                                intervals=intervals,
                                cap=cap,
                                shrink=shrink,
                                tau_rules=tau_rules,
                                seed=seed,
                                threads=threads,
                                raw_csv=raw_csv,
                                summary_csv=summary_csv,
                                plot_dir=plot_dir,
                                record_runtime=record_runtime,
                                )
    except ValueError as err:
        raise ConfigError('experiment', str(err)) from err


def load_experiment(path: PathLike) -> ExperimentConfig:
    """Load an experiment file; output paths inside it are relative to the file."""
    cfg = experiment_from_dict(load_toml(path), Path(path).parent)
    LOGGER.debug(f'Loaded experiment from {path}: {len(list(cfg.cells()))} cell(s), seed {cfg.seed}.')
    return cfg

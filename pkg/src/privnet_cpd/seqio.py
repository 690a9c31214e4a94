"""This module reads and writes network sequences and estimates on disk.

A sequence lives in a directory holding a ``manifest.toml`` with its shape,
entry domain and symmetry, plus one gzip-compressed dense CSV matrix per time
step named ``t00001.csv.gz``, ``t00002.csv.gz`` and so on. Estimates are plain
CSV tables with one row per estimated point.
"""

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
import pandas as pd
import tomli_w

from .constants import DOMAIN, MANIFEST_NAME
from .detector import Detection, Estimate
from .netgen import NetworkSequence

LOGGER = logging.getLogger(__name__)

PathLike = Union[str, Path]

ESTIMATE_COLUMNS = ('point', 'score', 'interval', 'depth')
"""Tuple[str]: Column order of an estimate CSV."""


def step_name(t: int) -> str:
    """Return the file name of the matrix at 1-based time ``t``."""
    return f't{t:05d}.csv.gz'


def write_sequence(seq: NetworkSequence, path: PathLike) -> Path:
    """Write a sequence to the directory ``path``, creating it if needed.

    Returns:
        pathlib.Path: The directory written.

    Raises:
        OSError: If ``path`` exists and is not a directory, or cannot be written.

    """
    directory = Path(path)
    if directory.exists() and not directory.is_dir():
        raise OSError(f'{directory} exists and is not a directory.')
    directory.mkdir(parents=True, exist_ok=True)
    manifest: Dict[str, Any] = {
        'T': seq.T,
        'n1': seq.rows,
        'n2': seq.cols,
        'domain': seq.domain.value,
        'symmetric': seq.symmetric,
    }
    if seq.B is not None:
        manifest['B'] = seq.B
    fmt = '%d' if seq.domain is DOMAIN.binary01 else '%.17g'
    with open(directory / MANIFEST_NAME, 'wb') as handle:
        tomli_w.dump(manifest, handle)
    for t in range(1, seq.T + 1):
        np.savetxt(directory / step_name(t), seq.matrix(t), fmt=fmt, delimiter=',')
    LOGGER.debug(f'Wrote {seq.T} matrices of shape {seq.rows}x{seq.cols} to {directory}.')
    return directory


def read_manifest(path: PathLike) -> Dict[str, Any]:
    """Read and check the manifest of a sequence directory.

    Raises:
        OSError: If the manifest is missing.
        ValueError: If a key is missing or malformed.

    """
    manifest_path = Path(path) / MANIFEST_NAME
    if not manifest_path.is_file():
        raise OSError(f'No {MANIFEST_NAME} in {path}.')
    with open(manifest_path, 'rb') as handle:
        try:
            manifest = tomllib.load(handle)
        except tomllib.TOMLDecodeError as err:
            raise ValueError(f'{manifest_path}: {err}') from err
    for key in ('T', 'n1', 'n2'):
        if not isinstance(manifest.get(key), int) or manifest[key] < 1:
            raise ValueError(f'{manifest_path}: {key} must be a positive integer.')
    try:
        manifest['domain'] = DOMAIN(manifest.get('domain'))
    except ValueError:
        raise ValueError(f'{manifest_path}: unknown domain {manifest.get("domain")!r}.') from None
    manifest.setdefault('symmetric', False)
    return manifest


def read_sequence(path: PathLike) -> NetworkSequence:
    """Read a sequence directory written by :func:`write_sequence`.

    Raises:
        OSError: If the manifest or a matrix file is missing.
        ValueError: If a matrix does not match the manifest.

    """
    directory = Path(path)
    manifest = read_manifest(directory)
    shape = (manifest['n1'], manifest['n2'])
    data = np.empty((manifest['T'],) + shape, dtype=float)
    for t in range(1, manifest['T'] + 1):
        step = directory / step_name(t)
        if not step.is_file():
            raise OSError(f'Missing matrix file {step}.')
        matrix = np.loadtxt(step, delimiter=',', ndmin=2)
        if matrix.shape != shape:
            raise ValueError(f'{step} has shape {matrix.shape}, manifest says {shape}.')
        data[t - 1] = matrix
    LOGGER.debug(f'Read {manifest["T"]} matrices from {directory}.')
    return NetworkSequence(data, domain=manifest['domain'], symmetric=manifest['symmetric'], B=manifest.get('B'))


def estimate_frame(estimate: Estimate) -> pd.DataFrame:
    """Return an estimate as a table with columns :data:`ESTIMATE_COLUMNS`."""
    return pd.DataFrame([(d.point, d.score, d.interval, d.depth) for d in estimate.detections],
                        columns=list(ESTIMATE_COLUMNS))


def write_estimate(estimate: Estimate, path: PathLike) -> Path:
    """Write an estimate as CSV."""
    target = Path(path)
    estimate_frame(estimate).to_csv(target, index=False)
    return target


def read_estimate(path: PathLike, T: int) -> Estimate:  # pylint: disable=invalid-name
    """Read an estimate written by :func:`write_estimate` for a sequence of length ``T``."""
    frame = pd.read_csv(path)
    missing = set(ESTIMATE_COLUMNS) - set(frame.columns)
    if missing:
        raise ValueError(f'{path}: missing column(s) {sorted(missing)}.')
    estimate = Estimate(T)
    for row in frame.itertuples(index=False):
        estimate.add(Detection(point=int(row.point), score=float(row.score),
                               interval=int(row.interval), depth=int(row.depth)))
    return estimate

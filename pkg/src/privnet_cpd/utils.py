"""Misc util functions."""

import hashlib
import logging
import os
from typing import Any, List, Mapping, Optional, Union

import numpy as np
from scipy.special import gammaln

from .constants import THREADS_ENV

LOGGER = logging.getLogger(__name__)

SeedLike = Union[int, np.random.Generator]


def _stream_words(tag: str, *indices: Any) -> List[int]:
    """Hash a purpose tag and its indices into 32-bit words for a seed sequence."""
    payload = repr((tag,) + tuple(indices)).encode('utf8')
    digest = hashlib.sha256(payload).digest()
    return [int.from_bytes(digest[i:i + 4], 'big') for i in range(0, len(digest), 4)]


def derive_rng(seed: int, tag: str, *indices: Any) -> np.random.Generator:
    """Return an independent random stream for ``(seed, tag, indices)``.

    Streams come from a counter-based :class:`numpy.random.Philox` bit generator
    keyed by a :class:`numpy.random.SeedSequence` built from the master seed and a
    hash of the purpose tag and indices, so the same coordinates always give the same
    stream no matter which thread or in which order it is requested.

    Args:
        seed (int): The master seed. Must be non-negative.
        tag (str): What the stream is for, e.g. ``'sample'`` or ``'privatize'``.
        *indices: Any further coordinates (scenario, alpha, repetition, ...).

    Returns:
        numpy.random.Generator: A fresh generator.

    Raises:
        TypeError: If ``seed`` is not an integer.
        ValueError: If ``seed`` is negative.

    """
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f'seed must be an integer, got {type(seed).__name__}.')
    if seed < 0:
        raise ValueError(f'seed must be non-negative, got {seed}.')
    seq = np.random.SeedSequence([int(seed)] + _stream_words(tag, *indices))
    return np.random.Generator(np.random.Philox(seq))


def as_generator(seed: SeedLike, tag: str, *indices: Any) -> np.random.Generator:
    """Pass a generator straight through or derive one from an integer seed."""
    if isinstance(seed, np.random.Generator):
        return seed
    return derive_rng(seed, tag, *indices)


def log_binom(n: Union[int, np.ndarray], k: Union[int, np.ndarray]) -> Union[float, np.ndarray]:
    """Return ``log(binom(n, k))`` evaluated through log-gamma functions."""
    return gammaln(np.asarray(n) + 1) - gammaln(np.asarray(k) + 1) - gammaln(np.asarray(n) - np.asarray(k) + 1)


def default_threads(environ: Optional[Mapping[str, str]] = None) -> int:
    """Return the worker-thread cap.

    Reads :data:`~privnet_cpd.constants.THREADS_ENV` from ``environ`` if given,
    otherwise falls back to the number of cores.

    Raises:
        ValueError: If the variable is set to something other than a positive integer.

    """
    cores = os.cpu_count() or 1
    if environ is None or not environ.get(THREADS_ENV):
        return cores
    raw = environ[THREADS_ENV]
    try:
        threads = int(raw)
    except ValueError:
        raise ValueError(f'{THREADS_ENV} must be a positive integer, got {raw!r}.') from None
    if threads < 1:
        raise ValueError(f'{THREADS_ENV} must be a positive integer, got {raw!r}.')
    LOGGER.debug(f'Thread cap taken from {THREADS_ENV}={threads}.')
    return threads

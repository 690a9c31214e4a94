"""This module implements the matrix CUSUM statistic and its inner-product scan.

Windows use the half-open convention of the detection recursion: ``(s, e]``
covers times ``s + 1 .. e`` and a split at ``t`` compares ``s + 1 .. t`` with
``t + 1 .. e``. All sums come from :attr:`NetworkSequence.prefix_sums`, so one
statistic costs a single pass over a matrix.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .constants import MIN_SCAN
from .netgen import NetworkSequence

LOGGER = logging.getLogger(__name__)

TIE_TOLERANCE: float = 1e-10
"""float: Scan values within this relative distance of the maximum count as ties."""


@dataclass(frozen=True, eq=False)
class CusumMatrix:
    """A CUSUM matrix together with the window it was computed on.

    Attributes:
        values (numpy.ndarray): ``rows x cols`` real matrix.
        s (int): Window start (exclusive).
        t (int): Split point.
        e (int): Window end (inclusive).

    """

    values: np.ndarray
    s: int
    t: int
    e: int

    def inner(self, other: 'CusumMatrix') -> float:
        """Return the Frobenius inner product with another CUSUM matrix."""
        if self.values.shape != other.values.shape:
            raise ValueError(f'Shape mismatch: {self.values.shape} vs {other.values.shape}.')
        return float(np.vdot(self.values, other.values))


def _check_window(seq: NetworkSequence, s: int, t: int, e: int) -> None:
    if not 0 <= s < t < e <= seq.T:
        raise ValueError(f'Invalid CUSUM window s={s}, t={t}, e={e} for T={seq.T}; need 0 <= s < t < e <= T.')


def _check_pair(seq_u: NetworkSequence, seq_v: NetworkSequence) -> None:
    if seq_u.data.shape != seq_v.data.shape:
        raise ValueError(f'Sequences differ in shape: {seq_u.data.shape} vs {seq_v.data.shape}.')


def _cusum_block(seq: NetworkSequence, s: int, ts: np.ndarray, e: int) -> np.ndarray:
    """CUSUM matrices for every split in ``ts``, stacked along the first axis."""
    sums = seq.prefix_sums
    left = (sums[ts] - sums[s]) / (ts - s)[:, None, None]
    right = (sums[e] - sums[ts]) / (e - ts)[:, None, None]
    weight = np.sqrt((ts - s) * (e - ts) / (e - s))
    return weight[:, None, None] * (left - right)


def cusum_at(seq: NetworkSequence, s: int, t: int, e: int) -> CusumMatrix:
    """Return the CUSUM matrix of ``seq`` on the window ``(s, e]`` split at ``t``.

    This is ``sqrt((e-t) / ((e-s)(t-s))) * sum(X_{s+1..t}) - sqrt((t-s) / ((e-s)(e-t))) * sum(X_{t+1..e})``.

    Raises:
        ValueError: If ``0 <= s < t < e <= T`` does not hold.

    """
    _check_window(seq, s, t, e)
    values = _cusum_block(seq, s, np.array([t]), e)[0]
    return CusumMatrix(values=values, s=s, t=t, e=e)


def cusum_inner(seq_u: NetworkSequence, seq_v: NetworkSequence, s: int, t: int, e: int) -> float:
    """Return the Frobenius inner product of the CUSUM matrices of two sequences."""
    _check_pair(seq_u, seq_v)
    return cusum_at(seq_u, s, t, e).inner(cusum_at(seq_v, s, t, e))


def scan_inner(seq_u: NetworkSequence, seq_v: NetworkSequence, s: int, e: int) -> np.ndarray:
    """Return :func:`cusum_inner` for every split ``t = s + 1 .. e - 1``."""
    _check_pair(seq_u, seq_v)
    if not (0 <= s and e <= seq_u.T and e - s >= MIN_SCAN):
        raise ValueError(f'Empty scan range for s={s}, e={e}, T={seq_u.T}.')
    ts = np.arange(s + 1, e)
    block_u = _cusum_block(seq_u, s, ts, e)
    block_v = block_u if seq_v is seq_u else _cusum_block(seq_v, s, ts, e)
    return np.einsum('tij,tij->t', block_u, block_v)


def scan_argmax(seq_u: NetworkSequence, seq_v: NetworkSequence, s: int, e: int) -> Tuple[int, float]:
    """Find the split maximising the CUSUM inner product on ``(s, e]``.

    Ties, taken up to a relative tolerance of :data:`TIE_TOLERANCE`, go to the
    smallest split.

    Returns:
        tuple: ``(b, a)`` with ``b`` in ``s + 1 .. e - 1`` and ``a`` the maximum.

    Raises:
        ValueError: If the scan range is empty, i.e. ``e - s < 2``.

    """
    values = scan_inner(seq_u, seq_v, s, e)
    best = float(values.max())
    first = int(np.flatnonzero(values >= best - TIE_TOLERANCE * max(1.0, abs(best)))[0])
    LOGGER.debug(f'Scan on ({s}, {e}]: best split {s + 1 + first} with value {best:.6g}.')
    return s + 1 + first, best

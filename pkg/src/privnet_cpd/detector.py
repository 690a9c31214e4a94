"""This module implements network binary segmentation.

Detection works on a pair of independent sequences ``U`` and ``V`` with the same
mean, usually the odd and even time steps of one sequence (see
:func:`split_even_odd`). Every candidate split is scored by the inner product of
the CUSUM matrices of ``U`` and ``V``, which is unbiased for the squared signal
even when the noise is heavy.

Two procedures are provided. :func:`nbs_detect` scans a set of random intervals
clipped to the current segment, shrinking each a little at both ends, and
:func:`bs_detect` scans the whole current segment. Both recurse on the two sides
of every accepted split.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Callable, Deque, Iterator, Optional, Tuple, Union

from sortedcontainers import SortedDict

from .constants import DEFAULT_INTERVALS, DEPTH_SLACK, METHOD, MIN_SCAN, SHRINK_FRACTION, TAURULE
from .cusum import scan_argmax
from .netgen import NetworkSequence
from .utils import SeedLike, as_generator

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntervalSet:
    """Seed intervals ``(a_m, b_m]`` for network binary segmentation.

    Attributes:
        pairs (tuple): Ordered pairs ``(a, b)`` with ``0 <= a < b <= T``.
        T (int): Length of the sequence the intervals are drawn for.

    """

    pairs: Tuple[Tuple[int, int], ...]
    T: int  # pylint: disable=invalid-name

    def __post_init__(self) -> None:
        pairs = tuple((int(a), int(b)) for a, b in self.pairs)
        for a, b in pairs:
            if not 0 <= a < b <= self.T:
                raise ValueError(f'Interval ({a}, {b}) is not ordered within 0 .. {self.T}.')
        object.__setattr__(self, 'pairs', pairs)

    @classmethod
    def full(cls, T: int) -> 'IntervalSet':  # pylint: disable=invalid-name
        """Return the set holding only the whole range ``(0, T]``."""
        return cls(pairs=((0, T),), T=T)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        return iter(self.pairs)

    @property
    def max_length(self) -> int:
        """int: Length of the longest interval, 0 if there are none."""
        return max((b - a for a, b in self.pairs), default=0)


@dataclass(frozen=True)
class DetectorConfig:
    """Thresholding and shrinking parameters of the detectors.

    Attributes:
        tau (float): A split is accepted when its score is strictly above ``tau``.
        shrink (float): Fraction of a clipped interval trimmed from each end.
        min_scan (int): Smallest window for which a scan is attempted.

    """

    tau: float
    shrink: float = SHRINK_FRACTION
    min_scan: int = MIN_SCAN

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ValueError(f'tau must be positive, got {self.tau}.')
        if not 0 <= self.shrink < 0.5:
            raise ValueError(f'shrink must lie in [0, 1/2), got {self.shrink}.')
        if self.min_scan < MIN_SCAN:
            raise ValueError(f'min_scan must be at least {MIN_SCAN}, got {self.min_scan}.')


@dataclass(frozen=True)
class Detection:
    """One accepted split.

    Attributes:
        point (int): The split, the last time index before the change.
        score (float): The CUSUM inner product at the split.
        interval (int): Index of the seed interval that produced it, -1 for plain binary segmentation.
        depth (int): Recursion depth at which it was found.

    """

    point: int
    score: float
    interval: int = -1
    depth: int = 0


class Estimate:
    """Estimated change points in increasing order, each with its detection details.

    Args:
        T (int): Length of the sequence the points refer to.

    """

    def __init__(self, T: int) -> None:  # pylint: disable=invalid-name
        self.T = T  # pylint: disable=invalid-name
        self._detections: SortedDict = SortedDict()

    def add(self, detection: Detection) -> None:
        """Record a detection.

        Raises:
            ValueError: If the point is outside ``1 .. T - 1`` or already recorded.

        """
        if not 0 < detection.point < self.T:
            raise ValueError(f'Estimated change point {detection.point} outside (0, {self.T}).')
        if detection.point in self._detections:
            raise ValueError(f'Change point {detection.point} already estimated.')
        self._detections[detection.point] = detection

    @property
    def points(self) -> Tuple[int, ...]:
        """tuple of int: The estimated points, increasing."""
        return tuple(self._detections.keys())

    @property
    def detections(self) -> Tuple[Detection, ...]:
        """tuple of Detection: The detections, ordered by point."""
        return tuple(self._detections.values())

    def __len__(self) -> int:
        return len(self._detections)

    def __iter__(self) -> Iterator[int]:
        return iter(self._detections)

    def __contains__(self, point: object) -> bool:
        return point in self._detections

    def __repr__(self) -> str:
        return f'<Estimate T={self.T} points={list(self.points)}>'

    def mapped(self, index_map: Callable[[int], int], T: int) -> 'Estimate':  # pylint: disable=invalid-name
        """Return a copy with every point sent through ``index_map`` into a sequence of length ``T``."""
        other = Estimate(T)
        for detection in self.detections:
            other.add(replace(detection, point=int(index_map(detection.point))))
        return other


def gen_random_intervals(T: int,  # pylint: disable=invalid-name
                         M: int,  # pylint: disable=invalid-name
                         cap: Optional[float] = None,
                         seed: SeedLike = 0,
                         ) -> IntervalSet:
    """Draw ``M`` random seed intervals.

    Both endpoints are drawn independently and uniformly from ``1 .. T`` and put
    in order. Pairs with equal endpoints, or longer than ``cap`` when one is given,
    are redrawn.

    Args:
        T (int): Sequence length, at least 2.
        M (int): Number of intervals, at least 1.
        cap (float): Optional longest allowed ``b - a``, at least 2.
        seed (int or numpy.random.Generator): Seed or generator.

    Returns:
        IntervalSet: The intervals, in the order they were accepted.

    Raises:
        ValueError: For ``M < 1``, ``T < 2`` or ``cap < 2``.

    """
    if M < 1:
        raise ValueError(f'M must be at least 1, got {M}.')
    if T < 2:
        raise ValueError(f'T must be at least 2 to hold an interval, got {T}.')
    if cap is not None and not cap >= 2:
        raise ValueError(f'cap must be at least 2, got {cap}.')
    rng = as_generator(seed, 'gen_random_intervals')
    accepted: Deque[Tuple[int, int]] = deque()
    draws = 0
    while len(accepted) < M:
        needed = M - len(accepted)
        ends = rng.integers(1, T + 1, size=(2 * needed, 2))
        draws += ends.shape[0]
        lows, highs = ends.min(axis=1), ends.max(axis=1)
        keep = lows < highs
        if cap is not None:
            keep &= (highs - lows) <= cap
        for a, b in zip(lows[keep], highs[keep]):
            if len(accepted) == M:
                break
            accepted.append((int(a), int(b)))
    LOGGER.debug(f'Drew {M} intervals for T={T} (cap={cap}) from {draws} candidate pairs.')
    return IntervalSet(pairs=tuple(accepted), T=T)


def half_to_original(t: int) -> int:
    """Map an index of a half-length sequence back to the original time axis."""
    return 2 * t


def split_even_odd(seq: NetworkSequence) -> Tuple[NetworkSequence, NetworkSequence, Callable[[int], int]]:
    """Split a sequence into its odd and even time steps.

    The first half holds times ``1, 3, 5, ...`` and the second ``2, 4, 6, ...``.
    When ``T`` is odd the last time step is dropped so both halves are
    ``T // 2`` long. Half-scale index ``t'`` corresponds to original time ``2 t'``.

    Raises:
        ValueError: If ``T < 2``.

    """
    if seq.T < 2:
        raise ValueError(f'Need at least 2 time steps to split, got {seq.T}.')
    half = seq.T // 2
    if seq.T % 2:
        LOGGER.debug(f'Odd length {seq.T}: dropping time {seq.T} from the split.')
    odd = seq.subsequence(range(1, 2 * half, 2))
    even = seq.subsequence(range(2, 2 * half + 1, 2))
    return odd, even, half_to_original


def _clip_and_shrink(pair: Tuple[int, int], s: int, e: int, shrink: float) -> Tuple[int, int]:
    lo, hi = max(pair[0], s), min(pair[1], e)
    width = hi - lo
    return math.ceil(lo + width * shrink), math.floor(hi - width * shrink)


def nbs_detect(seq_u: NetworkSequence,
               seq_v: NetworkSequence,
               intervals: IntervalSet,
               cfg: DetectorConfig,
               ) -> Estimate:
    """Run network binary segmentation.

    Starting from ``(s, e) = (0, T)``, every seed interval is clipped to the
    current segment and shrunk by ``cfg.shrink`` of its length at both ends. Each
    interval whose shrunk window admits a scan is scanned with
    :func:`~privnet_cpd.cusum.scan_argmax`; the rest score -1. If the best score
    is above ``cfg.tau`` its split ``b`` is recorded and the procedure recurses
    on ``(s, b)`` and ``(b + 1, e)``.

    Recursion stops at depth ``floor(log2(T)) + DEPTH_SLACK`` with a warning.

    Args:
        seq_u (NetworkSequence): First sequence.
        seq_v (NetworkSequence): Second sequence, same shape.
        intervals (IntervalSet): Seed intervals.
        cfg (DetectorConfig): Threshold and shrink settings.

    Returns:
        Estimate: The accepted splits.

    Raises:
        ValueError: If the interval set is empty or the sequences differ in shape.

    """
    if len(intervals) == 0:
        raise ValueError('At least one seed interval is required.')
    if seq_u.data.shape != seq_v.data.shape:
        raise ValueError(f'Sequences differ in shape: {seq_u.data.shape} vs {seq_v.data.shape}.')
    T = seq_u.T  # pylint: disable=invalid-name
    guard = int(math.floor(math.log2(max(T, 1)))) + DEPTH_SLACK
    estimate = Estimate(T)
    segments: Deque[Tuple[int, int, int]] = deque([(0, T, 0)])
    while segments:
        s, e, depth = segments.popleft()
        if e - s < cfg.min_scan:
            continue
        if depth > guard:
            LOGGER.warning(f'Recursion depth guard {guard} hit on segment ({s}, {e}]; not splitting further.')
            continue
        best_score, best_point, best_m = -1.0, -1, -1
        for m, pair in enumerate(intervals):
            lo, hi = _clip_and_shrink(pair, s, e, cfg.shrink)
            if hi - lo < cfg.min_scan:
                continue
            point, score = scan_argmax(seq_u, seq_v, lo, hi)
            if score > best_score:
                best_score, best_point, best_m = score, point, m
        if best_m >= 0 and best_score > cfg.tau:
            LOGGER.debug(f'Accepted split {best_point} on ({s}, {e}] with score {best_score:.6g} > {cfg.tau:.6g}.')
            estimate.add(Detection(point=best_point, score=best_score, interval=best_m, depth=depth))
            segments.append((s, best_point, depth + 1))
            segments.append((best_point + 1, e, depth + 1))
    return estimate


def bs_detect(seq_u: NetworkSequence, seq_v: NetworkSequence, cfg: DetectorConfig) -> Estimate:
    """Run plain binary segmentation, scanning each whole segment without shrinking."""
    estimate = nbs_detect(seq_u, seq_v, IntervalSet.full(seq_u.T), replace(cfg, shrink=0.0))
    plain = Estimate(estimate.T)
    for detection in estimate.detections:
        plain.add(replace(detection, interval=-1))
    return plain


def tau_from_rule(rule: Union[TAURULE, str], n1: int, n2: int, T: int) -> float:  # pylint: disable=invalid-name
    """Evaluate one of the thresholds of the simulation study.

    With ``n = sqrt(n1 n2)``: ``paper-none`` is ``n log(T)^1.5 / 10``,
    ``paper-edge`` is ``n log(T)^1.5 / 30`` and ``paper-node`` is
    ``n1 n2 log(n1 n2 T)^2 / 10``. ``T`` is the length of the sequence before it
    is split.

    ``calibrated-edge`` keeps the ``paper-none`` constant for edge-private data.
    Randomised response leaves every entry with variance close to 1/4 at any
    budget, so the null fluctuations of the scan match the dense non-private
    case, and ``paper-edge`` sits inside them and over-segments.
    """
    rule = TAURULE(rule)
    if T < 2:
        raise ValueError(f'Threshold rules need T >= 2, got {T}.')
    n = math.sqrt(n1 * n2)
    if rule in (TAURULE.paper_none, TAURULE.calibrated_edge):
        return n * math.log(T) ** 1.5 / 10
    if rule is TAURULE.paper_edge:
        return n * math.log(T) ** 1.5 / 30
    return n1 * n2 * math.log(n1 * n2 * T) ** 2 / 10


def detect_split(seq: NetworkSequence,  # pylint: disable=too-many-arguments
                 cfg: DetectorConfig,
                 method: Union[METHOD, str] = METHOD.bs,
                 intervals: int = DEFAULT_INTERVALS,
                 cap: Optional[float] = None,
                 seed: SeedLike = 0,
                 ) -> Estimate:
    """Split a sequence into odd and even steps, detect, and map the result back.

    Args:
        seq (NetworkSequence): The (possibly privatised) sequence.
        cfg (DetectorConfig): Detector settings.
        method (METHOD): ``bs`` or ``nbs``.
        intervals (int): Number of seed intervals for ``nbs``.
        cap (float): Longest seed interval in original time steps, for ``nbs``.
        seed (int or numpy.random.Generator): Seed for the seed intervals.

    Returns:
        Estimate: Points on the original time axis.

    """
    method = METHOD(method)
    seq_u, seq_v, index_map = split_even_odd(seq)
    if method is METHOD.nbs:
        half_cap = None if cap is None else cap / 2
        pairs = gen_random_intervals(seq_u.T, intervals, half_cap, as_generator(seed, 'intervals'))
        estimate = nbs_detect(seq_u, seq_v, pairs, cfg)
    else:
        estimate = bs_detect(seq_u, seq_v, cfg)
    return estimate.mapped(index_map, seq.T)


"""Evaluation metrics for change-point estimates."""

import logging
from dataclasses import dataclass
from typing import Collection, Iterable, Union

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from .detector import Estimate

LOGGER = logging.getLogger(__name__)

Points = Union[Estimate, Iterable[int]]


@dataclass(frozen=True)
class EvalResult:
    """Localisation error of one estimate.

    Attributes:
        hausdorff (float): Two-sided Hausdorff distance to the truth.
        scaled (float): ``min(hausdorff / delta, 1)``, or 1 for an empty estimate.
        k_hat (int): Number of estimated change points.
        k_true (int): Number of true change points.

    """

    hausdorff: float
    scaled: float
    k_hat: int
    k_true: int


def _as_column(points: Points) -> np.ndarray:
    values = points.points if isinstance(points, Estimate) else tuple(points)
    return np.asarray(values, dtype=float).reshape(-1, 1)


def hausdorff(s1: Points, s2: Points, delta: float) -> float:
    """Return the two-sided Hausdorff distance between two point sets.

    If either set is empty the distance is ``delta``.

    Raises:
        ValueError: If ``delta`` is not positive.

    """
    if not delta > 0:
        raise ValueError(f'delta must be positive, got {delta}.')
    first, second = _as_column(s1), _as_column(s2)
    if first.size == 0 or second.size == 0:
        return float(delta)
    return float(max(directed_hausdorff(first, second)[0], directed_hausdorff(second, first)[0]))


def scaled_error(est: Points, truth: Collection[int], delta: float) -> float:
    """Return the Hausdorff distance divided by ``delta``, clipped to ``[0, 1]``.

    An empty estimate scores 1.
    """
    if _as_column(est).size == 0:
        return 1.0
    return min(hausdorff(est, truth, delta) / delta, 1.0)


def evaluate(est: Points, truth: Collection[int], delta: float) -> EvalResult:
    """Score an estimate against the true split points."""
    points = _as_column(est)
    result = EvalResult(hausdorff=hausdorff(est, truth, delta),
                        scaled=scaled_error(est, truth, delta),
                        k_hat=int(points.size),
                        k_true=len(truth),
                        )
    LOGGER.debug(f'Estimate {points.ravel().tolist()} vs truth {list(truth)}: {result}')
    return result

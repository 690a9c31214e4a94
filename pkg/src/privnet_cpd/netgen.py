"""This module implements dynamic network models with change points.

A model is described by a :class:`ModelSpec`, which holds one probability matrix
per segment, and is turned into a :class:`NetworkSequence` by
:func:`sample_sequence`. Time indices are 1-based as in the change-point model: a
change point ``eta`` is the first time index of a new segment, so it lies in
``2 .. T``.

The CUSUM detectors report the *last* index of each pre-change segment, which is
``eta - 1``. :attr:`ModelSpec.split_points` gives these values and is what any
estimate should be compared against.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .constants import DEPENDENCE, DOMAIN, MECHANISM
from .utils import SeedLike, as_generator

LOGGER = logging.getLogger(__name__)

Dims = Union[int, Tuple[int, int]]


@dataclass(frozen=True, eq=False)
class ProbMatrix:
    """An immutable matrix of Bernoulli parameters.

    Attributes:
        values (numpy.ndarray): Read-only ``rows x cols`` float array with entries in ``[0, 1]``.
        symmetric (bool): Whether the matrix is the mean of an undirected network.

    Raises:
        ValueError: If the array is not 2-D, has entries outside ``[0, 1]``, or is
            flagged symmetric without being square and symmetric.

    """

    values: np.ndarray
    symmetric: bool = False

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f'A probability matrix must be 2-D, got {arr.ndim} dimension(s).')
        if not np.all(np.isfinite(arr)) or arr.min(initial=0.0) < 0.0 or arr.max(initial=0.0) > 1.0:
            raise ValueError('Probability matrix entries must lie in [0, 1].')
        if self.symmetric:
            if arr.shape[0] != arr.shape[1]:
                raise ValueError(f'A symmetric probability matrix must be square, got {arr.shape}.')
            if not np.array_equal(arr, arr.T):
                raise ValueError('Probability matrix flagged symmetric is not symmetric.')
        arr.setflags(write=False)
        object.__setattr__(self, 'values', arr)

    @classmethod
    def constant(cls, rows: int, cols: int, p: float, symmetric: bool = False) -> 'ProbMatrix':
        """Return a ``rows x cols`` matrix with every entry equal to ``p``."""
        return cls(np.full((rows, cols), float(p)), symmetric=symmetric)

    @property
    def rows(self) -> int:
        """int: Number of rows."""
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        """int: Number of columns."""
        return self.values.shape[1]

    @property
    def max_entry(self) -> float:
        """float: The largest entry, i.e. the sparsity level of this matrix."""
        return float(self.values.max(initial=0.0))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProbMatrix):
            return NotImplemented
        return self.symmetric == other.symmetric and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash((self.values.shape, self.values.tobytes(), self.symmetric))


@dataclass(frozen=True)
class ModelSpec:  # pylint: disable=too-many-instance-attributes
    """Full generative description of a dynamic network with change points.

    Attributes:
        T (int): Number of time steps.
        n1 (int): Number of rows of each adjacency matrix.
        n2 (int): Number of columns of each adjacency matrix.
        change_points (tuple of int): Strictly increasing 1-based change points in ``2 .. T``.
        segment_thetas (tuple of ProbMatrix): One probability matrix per segment.
        dependence (DEPENDENCE): Within-row dependence of a bipartite network.
        symmetric (bool): Whether the network is undirected.

    Plain arrays or scalars passed in ``segment_thetas`` are turned into
    :class:`ProbMatrix` objects, scalars being broadcast to ``n1 x n2``.

    """

    T: int  # pylint: disable=invalid-name
    n1: int
    n2: int
    change_points: Tuple[int, ...] = field(default=())
    segment_thetas: Tuple[ProbMatrix, ...] = field(default=(), compare=True)
    dependence: DEPENDENCE = DEPENDENCE.independent
    symmetric: bool = False

    def __post_init__(self) -> None:
        for name in ('T', 'n1', 'n2'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f'{name} must be a positive integer, got {value!r}.')
        object.__setattr__(self, 'change_points', tuple(int(eta) for eta in self.change_points))
        object.__setattr__(self, 'dependence', DEPENDENCE(self.dependence))
        thetas = []
        for theta in self.segment_thetas:
            if isinstance(theta, ProbMatrix):
                thetas.append(theta)
            elif np.ndim(theta) == 0:
                thetas.append(ProbMatrix.constant(self.n1, self.n2, float(theta), symmetric=self.symmetric))
            else:
                thetas.append(ProbMatrix(np.asarray(theta, dtype=float), symmetric=self.symmetric))
        object.__setattr__(self, 'segment_thetas', tuple(thetas))
        if len(self.segment_thetas) != len(self.change_points) + 1:
            raise ValueError(f'Expected {len(self.change_points) + 1} segment matrices for '
                             f'{len(self.change_points)} change point(s), got {len(self.segment_thetas)}.')

    @property
    def K(self) -> int:  # pylint: disable=invalid-name
        """int: Number of change points."""
        return len(self.change_points)

    @property
    def boundaries(self) -> Tuple[int, ...]:
        """tuple of int: ``(1, eta_1, ..., eta_K, T + 1)``."""
        return (1,) + self.change_points + (self.T + 1,)

    @property
    def split_points(self) -> Tuple[int, ...]:
        """tuple of int: Last time index of every pre-change segment, ``eta_k - 1``."""
        return tuple(eta - 1 for eta in self.change_points)

    def segment_index(self) -> np.ndarray:
        """Return, for ``t = 1 .. T``, the 0-based segment each time step belongs to."""
        times = np.arange(1, self.T + 1)
        return np.searchsorted(np.asarray(self.change_points, dtype=int), times, side='right')

    def theta_at(self, t: int) -> ProbMatrix:
        """Return the probability matrix in force at 1-based time ``t``."""
        if not 1 <= t <= self.T:
            raise ValueError(f'Time index {t} outside 1 .. {self.T}.')
        return self.segment_thetas[int(np.searchsorted(self.change_points, t, side='right'))]

    def mean_stack(self) -> np.ndarray:
        """Return the ``T x n1 x n2`` array of means, one matrix per time step."""
        stack = np.stack([theta.values for theta in self.segment_thetas])
        return stack[self.segment_index()]


@dataclass(frozen=True)
class ModelParams:
    """Summary quantities of a change-point model.

    Attributes:
        delta (int): Minimal spacing between consecutive change points (and the ends).
        rho (float): Largest entry of any probability matrix.
        kappa (float): Smallest Frobenius jump between consecutive segments, ``inf`` if K=0.
        kappa0 (float): Normalised jump ``kappa / (sqrt(n1 n2) rho)``, ``inf`` if K=0.

    """

    delta: int
    rho: float
    kappa: float
    kappa0: float


@dataclass(frozen=True, eq=False)
class NetworkSequence:
    """A time-ordered sequence of equally shaped matrices.

    Attributes:
        data (numpy.ndarray): Read-only ``T x rows x cols`` array; ``data[t - 1]`` is the matrix at time ``t``.
        domain (DOMAIN): Which values the entries may take.
        symmetric (bool): Whether every matrix is symmetric.
        B (float): Entry magnitude for the ``plus_minus_b`` domain, otherwise ``None``.

    Raises:
        ValueError: If any entry is outside the declared domain, the array is not
            3-D, or a symmetric sequence holds an asymmetric matrix.

    """

    data: np.ndarray
    domain: DOMAIN = DOMAIN.binary01
    symmetric: bool = False
    B: Optional[float] = None  # pylint: disable=invalid-name

    def __post_init__(self) -> None:
        domain = DOMAIN(self.domain)
        object.__setattr__(self, 'domain', domain)
        if domain is DOMAIN.binary01:
            arr = np.array(self.data)
            if arr.ndim == 3 and not np.all((arr == 0) | (arr == 1)):
                raise ValueError('binary01 sequences may only hold 0 and 1.')
            arr = arr.astype(np.int8)
        else:
            arr = np.array(self.data, dtype=float)
            if not np.all(np.isfinite(arr)):
                raise ValueError('Sequence entries must be finite.')
        if arr.ndim != 3:
            raise ValueError(f'A network sequence must be a T x rows x cols array, got {arr.ndim} dimension(s).')
        if domain is DOMAIN.plus_minus_b:
            if self.B is None or not self.B > 0:
                raise ValueError(f'plusMinusB sequences need a positive B, got {self.B!r}.')
            if not np.all(np.abs(arr) == self.B):
                raise ValueError(f'plusMinusB entries must equal -B or +B with B={self.B}.')
        elif self.B is not None:
            raise ValueError(f'B only applies to plusMinusB sequences, not {domain.value}.')
        if self.symmetric and (arr.shape[1] != arr.shape[2]
                               or not np.array_equal(arr, np.swapaxes(arr, 1, 2))):
            raise ValueError('Sequence flagged symmetric holds an asymmetric matrix.')
        arr.setflags(write=False)
        object.__setattr__(self, 'data', arr)

    @property
    def T(self) -> int:  # pylint: disable=invalid-name
        """int: Number of time steps."""
        return self.data.shape[0]

    @property
    def rows(self) -> int:
        """int: Rows per matrix."""
        return self.data.shape[1]

    @property
    def cols(self) -> int:
        """int: Columns per matrix."""
        return self.data.shape[2]

    def __len__(self) -> int:
        return self.T

    def matrix(self, t: int) -> np.ndarray:
        """Return the matrix at 1-based time ``t``."""
        if not 1 <= t <= self.T:
            raise ValueError(f'Time index {t} outside 1 .. {self.T}.')
        return self.data[t - 1]

    @cached_property
    def prefix_sums(self) -> np.ndarray:
        """numpy.ndarray: ``(T + 1) x rows x cols`` cumulative sums, ``prefix_sums[t]`` summing times ``1 .. t``."""
        sums = np.zeros((self.T + 1, self.rows, self.cols), dtype=float)
        np.cumsum(self.data, axis=0, dtype=float, out=sums[1:])
        sums.setflags(write=False)
        return sums

    def subsequence(self, times: Iterable[int]) -> 'NetworkSequence':
        """Return a new sequence made of the given 1-based time steps, in the given order."""
        idx = np.asarray(list(times), dtype=int) - 1
        if idx.size and (idx.min() < 0 or idx.max() >= self.T):
            raise ValueError(f'Time indices must lie in 1 .. {self.T}.')
        return NetworkSequence(self.data[idx], domain=self.domain, symmetric=self.symmetric, B=self.B)

    def combine(self, other: 'NetworkSequence', a: float = 1.0, b: float = 1.0) -> 'NetworkSequence':
        """Return the real-valued sequence ``a * self + b * other``."""
        if self.data.shape != other.data.shape:
            raise ValueError(f'Cannot combine sequences of shapes {self.data.shape} and {other.data.shape}.')
        return NetworkSequence(a * self.data.astype(float) + b * other.data.astype(float),
                               domain=DOMAIN.real,
                               symmetric=self.symmetric and other.symmetric)


def validate_spec(spec: ModelSpec) -> ModelParams:
    """Check a model spec and compute its summary quantities.

    Args:
        spec (ModelSpec): The model to check.

    Returns:
        ModelParams: Minimal spacing, sparsity and jump sizes, computed exactly.

    Raises:
        ValueError: If the spec breaks any of the model's constraints.

    """
    if spec.symmetric and spec.n1 != spec.n2:
        raise ValueError(f'Symmetric specs need n1 == n2, got {spec.n1} and {spec.n2}.')
    if spec.symmetric and spec.dependence is DEPENDENCE.identical_rows:
        raise ValueError('identical_rows dependence is only valid for bipartite specs.')
    previous = 1
    for eta in spec.change_points:
        if not 2 <= eta <= spec.T:
            raise ValueError(f'Change point {eta} outside 2 .. {spec.T}.')
        if eta <= previous:
            raise ValueError(f'Change points must be strictly increasing, got {spec.change_points}.')
        previous = eta
    for k, theta in enumerate(spec.segment_thetas):
        values = theta.values
        if values.shape != (spec.n1, spec.n2):
            raise ValueError(f'Segment {k} matrix has shape {values.shape}, expected {(spec.n1, spec.n2)}.')
        if values.min(initial=0.0) < 0.0 or values.max(initial=0.0) > 1.0:
            raise ValueError(f'Segment {k} matrix has entries outside [0, 1].')
        if spec.symmetric and not np.array_equal(values, values.T):
            raise ValueError(f'Segment {k} matrix is not symmetric.')
        if spec.dependence is DEPENDENCE.identical_rows and not np.all(values == values[:, :1]):
            raise ValueError(f'Segment {k} matrix must be constant along rows for identical_rows dependence.')

    jumps = []
    for k in range(spec.K):
        jump = float(np.linalg.norm(spec.segment_thetas[k + 1].values - spec.segment_thetas[k].values))
        if jump == 0.0:
            raise ValueError(f'Segments {k} and {k + 1} share the same probability matrix.')
        jumps.append(jump)

    delta = int(min(np.diff(spec.boundaries)))
    rho = max(theta.max_entry for theta in spec.segment_thetas)
    if jumps:
        kappa = min(jumps)
        kappa0 = kappa / (math.sqrt(spec.n1 * spec.n2) * rho)
    else:
        kappa = kappa0 = math.inf
    params = ModelParams(delta=delta, rho=rho, kappa=kappa, kappa0=kappa0)
    LOGGER.debug(f'Validated spec T={spec.T} n1={spec.n1} n2={spec.n2} K={spec.K}: {params}')
    return params


def sample_sequence(spec: ModelSpec, seed: SeedLike) -> NetworkSequence:
    """Draw one network sequence from a model.

    Symmetric specs draw the upper triangle, diagonal included, and mirror it.
    ``identical_rows`` specs draw one value per row and time step and copy it
    across the row.

    Args:
        spec (ModelSpec): The model.
        seed (int or numpy.random.Generator): Master seed, or a generator to draw from.

    Returns:
        NetworkSequence: A ``binary01`` sequence.

    """
    validate_spec(spec)
    rng = as_generator(seed, 'sample_sequence')
    means = spec.mean_stack()
    if spec.dependence is DEPENDENCE.identical_rows:
        draws = rng.random((spec.T, spec.n1, 1)) < means[:, :, :1]
        data = np.repeat(draws, spec.n2, axis=2)
    elif spec.symmetric:
        draws = rng.random(means.shape) < means
        data = np.triu(draws) | np.swapaxes(np.triu(draws, 1), 1, 2)
    else:
        data = rng.random(means.shape) < means
    LOGGER.debug(f'Sampled sequence of shape {data.shape} with {int(data.sum())} ones.')
    return NetworkSequence(data, domain=DOMAIN.binary01, symmetric=spec.symmetric)


def population_sequence(spec: ModelSpec) -> NetworkSequence:
    """Return the noiseless sequence of mean matrices of a model."""
    validate_spec(spec)
    return NetworkSequence(spec.mean_stack(), domain=DOMAIN.real, symmetric=spec.symmetric)


def balanced_spec(delta: int,
                 n: int = 50,
                 theta_pre: float = 0.1,
                 theta_post: float = 0.4,
                 symmetric: bool = True,
                 n2: Optional[int] = None,
                 dependence: DEPENDENCE = DEPENDENCE.independent,
                 ) -> ModelSpec:
    """Build the balanced single-change instance of the simulation study.

    The horizon is ``T = 2 * delta`` and the change point is ``delta + 1``, so
    both segments are ``delta`` long and the split point is ``delta``.

    Args:
        delta (int): Segment length.
        n (int): Number of nodes, or rows of a bipartite network.
        theta_pre (float): Constant edge probability before the change.
        theta_post (float): Constant edge probability after the change.
        symmetric (bool): Undirected network if True.
        n2 (int): Columns of a bipartite network. Defaults to ``n``.
        dependence (DEPENDENCE): Within-row dependence, bipartite only.

    """
    if delta < 1:
        raise ValueError(f'delta must be at least 1, got {delta}.')
    cols = n if n2 is None else n2
    return ModelSpec(T=2 * delta,
                     n1=n,
                     n2=cols,
                     change_points=(delta + 1,),
                     segment_thetas=(ProbMatrix.constant(n, cols, theta_pre, symmetric=symmetric),
                                     ProbMatrix.constant(n, cols, theta_post, symmetric=symmetric)),
                     dependence=dependence,
                     symmetric=symmetric,
                     )


def worst_case_instance(kind: Union[MECHANISM, str],  # pylint: disable=too-many-arguments,too-many-locals
                        dims: Dims,
                        delta: int,
                        T: int,  # pylint: disable=invalid-name
                        rho: float,
                        alpha: float,
                        seed: SeedLike,
                        mirrored: bool = False,
                        signs: Optional[Sequence[int]] = None,
                        ) -> ModelSpec:
    """Build a hard single-change instance for a privacy level.

    The ``edge`` kind is an undirected network whose first ``delta`` matrices carry
    the rank-one bump ``(kappa / n) v v^T`` on top of ``rho / 2`` with
    ``kappa^2 = n / (68 (e^alpha - 1)^2 delta)``. The ``node`` kind is a bipartite
    network with identical rows whose row means are ``rho / 2 + kappa v_i / sqrt(n1 n2)``
    with ``kappa^2 = sqrt(n1) n2 / (20 (e^alpha - 1)^2 delta)``. In both cases ``v``
    is drawn uniformly from ``{-1, +1}`` unless ``signs`` is given.

    With ``mirrored`` set, the elevated segment is the last ``delta`` steps
    instead of the first.

    Args:
        kind (MECHANISM or str): ``'edge'`` or ``'node'``.
        dims (int or tuple): ``n`` for the edge kind, ``(n1, n2)`` for the node kind.
        delta (int): Length of the elevated segment.
        T (int): Horizon.
        rho (float): Sparsity level.
        alpha (float): Privacy budget, positive.
        seed (int or numpy.random.Generator): Seed for the sign vector.
        mirrored (bool): Put the elevated segment at the end.
        signs (sequence of int): Explicit sign vector, overrides the seeded draw.

    Returns:
        ModelSpec: A spec with one change point.

    Raises:
        ValueError: If the bump would push entries outside ``[0, rho]``, i.e.
            ``kappa0^2 > 1/4``, or the arguments are out of range.

    """
    kind = MECHANISM(kind)
    if kind is MECHANISM.none:
        raise ValueError('Worst-case instances exist for the edge and node kinds only.')
    if not alpha > 0:
        raise ValueError(f'alpha must be positive for a worst-case instance, got {alpha}.')
    if not 0 < rho <= 1:
        raise ValueError(f'rho must lie in (0, 1], got {rho}.')
    if not 1 <= delta <= T - 1:
        raise ValueError(f'delta must lie in 1 .. T-1 = {T - 1}, got {delta}.')
    if 3 * delta > T:
        LOGGER.warning(f'delta={delta} exceeds T/3={T / 3:.4g}; the lower-bound construction assumes it does not.')

    if kind is MECHANISM.edge:
        if not isinstance(dims, (int, np.integer)):
            raise ValueError(f'The edge kind takes a single node count, got {dims!r}.')
        n1 = n2 = int(dims)
        kappa = math.sqrt(n1 / (68 * math.expm1(alpha) ** 2 * delta))
        step = kappa / n1
        alpha_cap = min(1.0, 1 / (2 * rho))
    else:
        if isinstance(dims, (int, np.integer)) or len(dims) != 2:
            raise ValueError(f'The node kind takes (n1, n2), got {dims!r}.')
        n1, n2 = (int(dim) for dim in dims)
        kappa = math.sqrt(math.sqrt(n1) * n2 / (20 * math.expm1(alpha) ** 2 * delta))
        step = kappa / math.sqrt(n1 * n2)
        alpha_cap = min(1.0, 1 / (4 * rho))
    if step >= rho / 2:
        raise ValueError(f'kappa0^2 = {(step / rho) ** 2:.4g} exceeds 1/4 for kind={kind.value}, '
                         f'alpha={alpha}, delta={delta}, rho={rho}.')
    if alpha >= alpha_cap:
        LOGGER.warning(f'alpha={alpha} is not below {alpha_cap:.4g}; the lower bound is only claimed there.')

    if signs is None:
        rng = as_generator(seed, 'worst_case_instance', kind.value)
        v = rng.choice(np.array([-1, 1]), size=n1)
    else:
        v = np.asarray(signs, dtype=int)
        if v.shape != (n1,) or not np.all(np.abs(v) == 1):
            raise ValueError(f'signs must be {n1} values from {{-1, +1}}.')

    if kind is MECHANISM.edge:
        elevated = ProbMatrix(rho / 2 + step * np.outer(v, v), symmetric=True)
        base = ProbMatrix.constant(n1, n2, rho / 2, symmetric=True)
        dependence, symmetric = DEPENDENCE.independent, True
    else:
        elevated = ProbMatrix(np.repeat((rho / 2 + step * v)[:, None], n2, axis=1))
        base = ProbMatrix.constant(n1, n2, rho / 2)
        dependence, symmetric = DEPENDENCE.identical_rows, False

    if mirrored:
        thetas, eta = (base, elevated), T - delta + 1
    else:
        thetas, eta = (elevated, base), delta + 1
    LOGGER.debug(f'Worst-case {kind.value} instance: kappa^2={kappa ** 2:.6g}, change at {eta}.')
    return ModelSpec(T=T, n1=n1, n2=n2, change_points=(eta,), segment_thetas=thetas,
                     dependence=dependence, symmetric=symmetric)


def snr_none(params: ModelParams, n: float) -> float:
    """Return ``kappa0^2 rho n delta``, the signal-to-noise quantity without privacy."""
    return params.kappa0 ** 2 * params.rho * n * params.delta


def snr_edge(params: ModelParams, n: float, alpha: float) -> float:
    """Return ``kappa0^2 rho^2 n delta alpha^2``, the signal-to-noise quantity under edge privacy."""
    return params.kappa0 ** 2 * params.rho ** 2 * n * params.delta * alpha ** 2


def snr_node(params: ModelParams, n1: int, n2: int, alpha: float) -> float:
    """Return the signal-to-noise quantity under node privacy.

    This is ``kappa0^2 rho^2 min(sqrt(n1 / n2), n1 / n2) delta alpha^2``.
    """
    ratio = n1 / n2
    return params.kappa0 ** 2 * params.rho ** 2 * min(math.sqrt(ratio), ratio) * params.delta * alpha ** 2

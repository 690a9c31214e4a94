"""This module implements the edge and node local privacy channels.

Edge privacy is plain randomised response on every adjacency entry. Node
privacy privatises each row of a bipartite network as a whole: the row is first
randomly rounded to a sign vector and then replaced by a uniformly drawn corner
of the cube ``{-B, +B}^d`` lying in the closed halfspace that agrees with it
(with probability ``e^alpha / (1 + e^alpha)``) or disagrees with it.

For small ``d`` the node channel is enumerated exactly by :func:`channel_exact`,
which is what :func:`privacy_ratio`, :func:`moments_exact` and
:func:`verify_mechanism` are built on.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import expit, logsumexp

from .constants import CHANNEL, CHANNEL_MAX_D, DOMAIN, INPUTS
from .netgen import NetworkSequence, ProbMatrix
from .utils import SeedLike, as_generator, log_binom

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class EdgeRRParams:
    """Randomised response parameters.

    Attributes:
        alpha (float): Privacy budget.
        q (float): Flip probability ``1 / (1 + e^alpha)``.

    """

    alpha: float
    q: float

    @classmethod
    def from_alpha(cls, alpha: float) -> 'EdgeRRParams':
        """Build the parameters for a privacy budget.

        Raises:
            ValueError: If ``alpha`` is negative.

        """
        if not alpha >= 0:
            raise ValueError(f'alpha must be non-negative, got {alpha}.')
        return cls(alpha=float(alpha), q=float(expit(-alpha)))


@dataclass(frozen=True)
class NodeMechParams:
    """Node mechanism parameters.

    Attributes:
        alpha (float): Privacy budget.
        d (int): Row length.
        C (float): Normalising constant ``C_d``.
        B (float): Output magnitude ``C_d (e^alpha + 1) / (e^alpha - 1)``.
        pi (float): Probability of sampling from the agreeing halfspace.

    """

    alpha: float
    d: int
    C: float  # pylint: disable=invalid-name
    B: float  # pylint: disable=invalid-name
    pi: float


@dataclass(frozen=True, eq=False)
class ChannelTable:
    """Exact conditional distribution of the node channel.

    Attributes:
        d (int): Row length.
        alpha (float): Privacy budget.
        B (float): Output magnitude.
        inputs (numpy.ndarray): ``n_in x d`` array of raw rows.
        outputs (numpy.ndarray): ``2^d x d`` array of output rows in ``{-B, +B}^d``.
        pmf (numpy.ndarray): ``n_in x 2^d`` array, ``pmf[i, k] = P(outputs[k] | inputs[i])``.

    """

    d: int
    alpha: float
    B: float  # pylint: disable=invalid-name
    inputs: np.ndarray
    outputs: np.ndarray
    pmf: np.ndarray

    def __post_init__(self) -> None:
        if np.any(self.pmf < 0):
            raise ValueError('Channel probabilities must be non-negative.')
        worst = float(np.max(np.abs(self.pmf.sum(axis=1) - 1.0)))
        if worst > 1e-12:
            raise ValueError(f'Channel rows must sum to one, worst deviation {worst:.3g}.')
        for arr in (self.inputs, self.outputs, self.pmf):
            arr.setflags(write=False)

    def row(self, v: Sequence[float]) -> np.ndarray:
        """Return the output distribution for the raw row ``v``."""
        matches = np.flatnonzero(np.all(self.inputs == np.asarray(v, dtype=float), axis=1))
        if matches.size == 0:
            raise ValueError(f'{list(v)} is not one of the enumerated inputs.')
        return self.pmf[matches[0]]

    def probability(self, v: Sequence[float], z: Sequence[float]) -> float:
        """Return ``P(Z = z | V = v)``."""
        matches = np.flatnonzero(np.all(np.isclose(self.outputs, np.asarray(z, dtype=float)), axis=1))
        if matches.size == 0:
            raise ValueError(f'{list(z)} is not an output of this channel.')
        return float(self.row(v)[matches[0]])


def edge_rr_params(alpha: float) -> EdgeRRParams:
    """Return the randomised response parameters for ``alpha``."""
    return EdgeRRParams.from_alpha(alpha)


def rr_privatize(seq: NetworkSequence, alpha: float, seed: SeedLike) -> NetworkSequence:
    """Apply randomised response to every entry of a binary sequence.

    Each entry is kept with probability ``e^alpha / (1 + e^alpha)`` and flipped
    otherwise. On a symmetric sequence only the upper triangle, diagonal
    included, is privatised and then mirrored, so each edge is privatised once.

    Args:
        seq (NetworkSequence): A ``binary01`` sequence, symmetric or bipartite.
        alpha (float): Privacy budget, non-negative.
        seed (int or numpy.random.Generator): Seed or generator for the flips.

    Returns:
        NetworkSequence: A ``binary01`` sequence with the same symmetry.

    Raises:
        ValueError: If ``alpha`` is negative or the input is not binary.

    """
    params = EdgeRRParams.from_alpha(alpha)
    if seq.domain is not DOMAIN.binary01:
        raise ValueError(f'Randomised response needs a binary01 sequence, got {seq.domain.value}.')
    rng = as_generator(seed, 'rr_privatize')
    flips = rng.random(seq.data.shape) < params.q
    if seq.symmetric:
        flips = np.triu(flips) | np.swapaxes(np.triu(flips, 1), 1, 2)
    LOGGER.debug(f'Randomised response with q={params.q:.6g} flipped {int(flips.sum())} entries.')
    return NetworkSequence(seq.data ^ flips, domain=DOMAIN.binary01, symmetric=seq.symmetric)


def rr_closure(theta: ProbMatrix, alpha: float) -> ProbMatrix:
    """Return the entrywise mean ``q + (1 - 2q) theta`` of a randomised-response output."""
    q = EdgeRRParams.from_alpha(alpha).q
    return ProbMatrix(np.clip(q + (1 - 2 * q) * theta.values, 0.0, 1.0), symmetric=theta.symmetric)


def node_constant_exact(d: int) -> Fraction:
    """Return ``C_d`` as an exact fraction.

    ``1 / C_d`` is ``binom(d-1, (d-1)/2) / 2^(d-1)`` for odd ``d`` and
    ``binom(d-1, d/2) / (2^(d-1) + binom(d, d/2) / 2)`` for even ``d``.
    """
    if d < 1:
        raise ValueError(f'd must be at least 1, got {d}.')
    if d % 2:
        return Fraction(2 ** (d - 1), math.comb(d - 1, (d - 1) // 2))
    return (Fraction(2 ** (d - 1)) + Fraction(math.comb(d, d // 2), 2)) / math.comb(d - 1, d // 2)


def log_node_constant(d: int) -> float:
    """Return ``log(C_d)`` computed from log-binomials."""
    if d < 1:
        raise ValueError(f'd must be at least 1, got {d}.')
    if d % 2:
        return float((d - 1) * math.log(2) - log_binom(d - 1, (d - 1) // 2))
    return float(np.logaddexp((d - 1) * math.log(2), log_binom(d, d // 2) - math.log(2))
                 - log_binom(d - 1, d // 2))


def node_constants(d: int, alpha: float) -> NodeMechParams:
    """Return the node mechanism constants for rows of length ``d``.

    Args:
        d (int): Row length, at least 1.
        alpha (float): Privacy budget, positive.

    Raises:
        ValueError: If ``d < 1`` or ``alpha <= 0``.

    """
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < 1:
        raise ValueError(f'd must be a positive integer, got {d!r}.')
    if not alpha > 0:
        raise ValueError(f'alpha must be positive for the node mechanism, got {alpha}.')
    const = math.exp(log_node_constant(int(d)))
    big_b = const / math.tanh(alpha / 2)
    return NodeMechParams(alpha=float(alpha), d=int(d), C=const, B=big_b, pi=float(expit(alpha)))


def halfspace_sizes(d: int) -> Tuple[int, int]:
    """Return the number of cube corners in the agreeing and disagreeing closed halfspaces."""
    sizes = [math.comb(d, k) for k in range(d + 1)]
    upper = sum(size for k, size in enumerate(sizes) if 2 * k >= d)
    lower = sum(size for k, size in enumerate(sizes) if 2 * k <= d)
    return upper, lower


def _agreement_cdfs(d: int) -> Tuple[np.ndarray, np.ndarray]:
    """CDFs of the number of agreeing coordinates in each halfspace."""
    ks = np.arange(d + 1)
    logw = np.asarray(log_binom(d, ks), dtype=float)
    cdfs = []
    for mask in (2 * ks >= d, 2 * ks <= d):
        weights = np.where(mask, logw, -np.inf)
        cdf = np.cumsum(np.exp(weights - logsumexp(weights)))
        cdfs.append(cdf / cdf[-1])
    return cdfs[0], cdfs[1]


def node_privatize(seq: NetworkSequence, alpha: float, seed: SeedLike) -> NetworkSequence:
    """Privatise every row of a bipartite binary sequence with the node mechanism.

    Rows and time steps are privatised independently. The halfspace draw is
    exact: the number of coordinates agreeing with the rounded row is drawn in
    proportion to ``binom(d, k)`` over the admissible ``k`` and the agreeing
    coordinates are then placed uniformly at random.

    Args:
        seq (NetworkSequence): A bipartite ``binary01`` sequence; ``d`` is its column count.
        alpha (float): Privacy budget, positive.
        seed (int or numpy.random.Generator): Seed or generator.

    Returns:
        NetworkSequence: A ``plus_minus_b`` sequence.

    Raises:
        ValueError: For symmetric or non-binary input, or a bad ``alpha``.

    """
    if seq.domain is not DOMAIN.binary01:
        raise ValueError(f'The node mechanism needs a binary01 sequence, got {seq.domain.value}.')
    if seq.symmetric:
        raise ValueError('The node mechanism privatises rows of bipartite sequences, got a symmetric one.')
    params = node_constants(seq.cols, alpha)
    rng = as_generator(seed, 'node_privatize')
    d = params.d
    rows = seq.data.reshape(-1, d)
    count = rows.shape[0]

    signs = np.where(rng.random((count, d)) < (1 + rows) / 2, 1, -1).astype(np.int8)
    agreeing = rng.random(count) < params.pi
    upper_cdf, lower_cdf = _agreement_cdfs(d)
    u = rng.random(count)
    k = np.where(agreeing,
                 np.searchsorted(upper_cdf, u, side='right'),
                 np.searchsorted(lower_cdf, u, side='right'))
    ranks = np.argsort(np.argsort(rng.random((count, d)), axis=1), axis=1)
    pattern = np.where(ranks < k[:, None], 1, -1).astype(np.int8)
    z = params.B * (signs * pattern).astype(float)
    LOGGER.debug(f'Node mechanism on {count} rows of length {d} with B={params.B:.6g}.')
    return NetworkSequence(z.reshape(seq.data.shape), domain=DOMAIN.plus_minus_b, B=params.B)


def _sign_vectors(d: int) -> np.ndarray:
    return np.array(list(product((1, -1), repeat=d)), dtype=float)


def _input_rows(d: int, inputs: INPUTS) -> np.ndarray:
    values = (0, 1) if INPUTS(inputs) is INPUTS.binary else (-1, 1)
    return np.array(list(product(values, repeat=d)), dtype=float)


def _rounding_weights(rows: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """``P(rounded = signs[b] | row a)`` with ``P(+1) = (1 + v_j) / 2`` per coordinate."""
    weights = np.ones((rows.shape[0], signs.shape[0]))
    for j in range(signs.shape[1]):
        weights *= (1 + np.outer(rows[:, j], signs[:, j])) / 2
    return weights


def _halfspace_kernel(params: NodeMechParams, signs: np.ndarray) -> np.ndarray:
    """``P(Z = B signs[c] | rounded = signs[b])`` as a ``2^d x 2^d`` matrix."""
    d = params.d
    agreements = (signs @ signs.T + d) / 2
    upper, lower = halfspace_sizes(d)
    return (params.pi * (2 * agreements >= d) / upper
            + (1 - params.pi) * (2 * agreements <= d) / lower)


def _check_enumerable(d: int) -> None:
    if not 1 <= d <= CHANNEL_MAX_D:
        raise ValueError(f'Exact enumeration supports 1 <= d <= {CHANNEL_MAX_D}, got d={d}.')


def channel_exact(d: int, alpha: float, inputs: Union[INPUTS, str] = INPUTS.binary) -> ChannelTable:
    """Enumerate the node channel exactly.

    Args:
        d (int): Row length, at most :data:`~privnet_cpd.constants.CHANNEL_MAX_D`.
        alpha (float): Privacy budget, positive.
        inputs (INPUTS): Enumerate rows from ``{0, 1}^d`` or from ``{-1, +1}^d``.

    Returns:
        ChannelTable: ``P(Z = z | V = v)`` for every enumerated ``v`` and every ``z``.

    Raises:
        ValueError: If ``d`` is too large to enumerate.

    """
    _check_enumerable(d)
    params = node_constants(d, alpha)
    signs = _sign_vectors(d)
    rows = _input_rows(d, INPUTS(inputs))
    pmf = _rounding_weights(rows, signs) @ _halfspace_kernel(params, signs)
    LOGGER.debug(f'Enumerated node channel for d={d}, alpha={alpha}: {pmf.shape[0]} x {pmf.shape[1]} cells.')
    return ChannelTable(d=d, alpha=float(alpha), B=params.B, inputs=rows, outputs=params.B * signs, pmf=pmf)


def privacy_ratio(mechanism: Union[CHANNEL, str],
                  d: int,
                  alpha: float,
                  inputs: Union[INPUTS, str] = INPUTS.binary,
                  ) -> float:
    """Return the largest likelihood ratio ``P(z | v) / P(z | v')`` of a channel.

    For randomised response this is ``(1 - q) / q``. For the node mechanism it
    is the maximum over every pair of enumerated inputs and every output.
    """
    mechanism = CHANNEL(mechanism)
    if mechanism is CHANNEL.edge_rr:
        params = EdgeRRParams.from_alpha(alpha)
        return (1 - params.q) / params.q
    pmf = channel_exact(d, alpha, inputs).pmf
    return float(np.max(pmf.max(axis=0) / pmf.min(axis=0)))


def moments_exact(d: int, alpha: float, v: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Return the exact mean and covariance of the node channel output for the row ``v``.

    ``v`` may be any vector in ``[-1, 1]^d``; binary adjacency rows are the usual case.
    """
    _check_enumerable(d)
    row = np.asarray(v, dtype=float).reshape(1, -1)
    if row.shape[1] != d:
        raise ValueError(f'v must have length {d}, got {row.shape[1]}.')
    if np.any(np.abs(row) > 1):
        raise ValueError('v must lie in [-1, 1]^d.')
    params = node_constants(d, alpha)
    signs = _sign_vectors(d)
    pmf = (_rounding_weights(row, signs) @ _halfspace_kernel(params, signs))[0]
    z = params.B * signs
    mean = pmf @ z
    second = z.T @ (pmf[:, None] * z)
    return mean, second - np.outer(mean, mean)


def covariance_constant_closed_form(d: int, alpha: float) -> float:
    """Return the covariance constant for rows of length ``d``.

    For even ``d`` this is ``2 B^2 binom(d-2, d/2-1) sqrt(d) alpha^2 / (d M)`` with
    ``M = 2^(d-1) + binom(d, d/2) / 2``, so that for ``i != j``
    ``Cov(Z_i, Z_j) = -E(V_i) E(V_j) - C E(V_i V_j) / (sqrt(d) alpha^2)``. For odd
    ``d`` the second term vanishes and the constant is zero.
    """
    params = node_constants(d, alpha)
    if d % 2:
        return 0.0
    size = 2 ** (d - 1) + math.comb(d, d // 2) / 2
    return 2 * params.B ** 2 * math.comb(d - 2, d // 2 - 1) * math.sqrt(d) * alpha ** 2 / (d * size)


def implied_covariance_constant(d: int, alpha: float, v: Optional[Sequence[float]] = None,
                                i: int = 0, j: int = 1) -> float:
    """Back out the covariance constant from an exactly enumerated covariance.

    Uses ``-(Cov(Z_i, Z_j) + v_i v_j) sqrt(d) alpha^2 / (v_i v_j)``; ``v``
    defaults to the all-ones row.
    """
    if d < 2 or i == j:
        raise ValueError('The covariance constant needs two distinct coordinates and d >= 2.')
    row = np.ones(d) if v is None else np.asarray(v, dtype=float)
    product_ij = row[i] * row[j]
    if product_ij == 0:
        raise ValueError(f'v[{i}] * v[{j}] must be non-zero.')
    _, cov = moments_exact(d, alpha, row)
    return float(-(cov[i, j] + product_ij) * math.sqrt(d) * alpha ** 2 / product_ij)


def sampler_max_zscore(d: int, alpha: float, samples: int, seed: SeedLike) -> float:
    """Compare :func:`node_privatize` against :func:`channel_exact` by Monte Carlo.

    Every binary input row is privatised ``samples`` times and the empirical
    frequency of each output is standardised by ``sqrt(p (1 - p) / samples)``.

    Returns:
        float: The largest absolute z-score over all inputs and outputs.

    """
    table = channel_exact(d, alpha, INPUTS.binary)
    rng = as_generator(seed, 'sampler_max_zscore', d, alpha)
    worst = 0.0
    powers = 2 ** np.arange(d - 1, -1, -1)
    for v, probs in zip(table.inputs, table.pmf):
        seq = NetworkSequence(np.broadcast_to(v.astype(np.int8), (1, samples, d)), domain=DOMAIN.binary01)
        z = node_privatize(seq, alpha, rng).data[0]
        # row index of each output in the product((1, -1)) ordering
        codes = ((z < 0).astype(int) @ powers)
        freq = np.bincount(codes, minlength=2 ** d) / samples
        scale = np.sqrt(probs * (1 - probs) / samples)
        worst = max(worst, float(np.max(np.abs(freq - probs) / scale)))
    return worst


def verify_mechanism(ds: Iterable[int],
                     alphas: Iterable[float],
                     samples: int = 0,
                     seed: SeedLike = 0,
                     inputs: Union[INPUTS, str] = INPUTS.binary,
                     ) -> pd.DataFrame:
    """Build the mechanism verification report.

    One row per ``(d, alpha)`` with the node channel's largest likelihood ratio,
    the bound ``e^alpha`` it must respect, the largest unbiasedness error
    ``|E Z - v|``, the largest variance residual ``|Var Z_i - (B^2 - v_i^2)|`` and
    the largest off-diagonal covariance residual
    ``|Cov(Z_i, Z_j) + v_i v_j + c v_i v_j|`` where ``c`` is the closed-form
    covariance constant divided by ``sqrt(d) alpha^2``. With ``samples > 0`` a
    ``max_zscore`` column compares the sampler to the exact table.

    Returns:
        pandas.DataFrame: The report.

    """
    records = []
    for d in ds:
        for alpha in alphas:
            table = channel_exact(d, alpha, inputs)
            z = table.outputs
            means = table.pmf @ z
            seconds = np.einsum('vk,ki,kj->vij', table.pmf, z, z, optimize=True)
            covs = seconds - np.einsum('vi,vj->vij', means, means)
            coupling = covariance_constant_closed_form(d, alpha) / (math.sqrt(d) * alpha ** 2)
            outer = np.einsum('vi,vj->vij', table.inputs, table.inputs)
            offdiag = ~np.eye(d, dtype=bool)
            variances = np.diagonal(covs, axis1=1, axis2=2)
            record = {
                'd': d,
                'alpha': alpha,
                'max_ratio': float(np.max(table.pmf.max(axis=0) / table.pmf.min(axis=0))),
                'ratio_bound': math.exp(alpha),
                'max_unbiasedness_error': float(np.max(np.abs(means - table.inputs))),
                'max_variance_residual': float(np.max(np.abs(variances - (table.B ** 2 - table.inputs ** 2)))),
                'max_covariance_residual': float(np.max(np.abs((covs + outer + coupling * outer)[:, offdiag]),
                                                        initial=0.0)),
            }
            if samples > 0:
                record['max_zscore'] = sampler_max_zscore(d, alpha, samples, seed)
            LOGGER.info(f'Verified node channel d={d} alpha={alpha}: ratio {record["max_ratio"]:.6g}')
            records.append(record)
    return pd.DataFrame.from_records(records)

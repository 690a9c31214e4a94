"""Constants for entry domains, mechanisms, scenarios, defaults and so on."""

from enum import Enum


class DEPENDENCE(Enum):
    """Enumeration of within-row dependence modes of a bipartite network."""

    independent = 'independent'  # every entry its own Bernoulli draw
    identical_rows = 'identical_rows'  # one draw per row, copied across it


class DOMAIN(Enum):
    """Enumeration of entry domains of a network sequence."""

    binary01 = 'binary01'  # raw or edge-privatised adjacency matrices
    plus_minus_b = 'plusMinusB'  # node-privatised rows with entries in {-B, +B}
    real = 'real'  # noiseless mean matrices and other real-valued sequences


class MECHANISM(Enum):
    """Enumeration of privacy channels."""

    none = 'none'
    edge = 'edge'
    node = 'node'


class CHANNEL(Enum):
    """Enumeration of channels whose likelihood ratio can be certified."""

    edge_rr = 'edge_rr'
    node = 'node'


class INPUTS(Enum):
    """Enumeration of raw-input sets enumerated by the exact channel oracle."""

    binary = 'binary'  # adjacency rows, {0, 1}^d
    signed = 'signed'  # extreme points of the l-infinity ball, {-1, +1}^d


class TAURULE(Enum):
    """Enumeration of the thresholding rules used in the simulation study."""

    paper_none = 'paper-none'
    paper_edge = 'paper-edge'
    paper_node = 'paper-node'
    calibrated_edge = 'calibrated-edge'  # n log(T)^1.5 / 10 on raw randomised-response output


class METHOD(Enum):
    """Enumeration of detection procedures."""

    bs = 'bs'  # plain binary segmentation over the whole segment
    nbs = 'nbs'  # network binary segmentation over random intervals


SHRINK_FRACTION: float = 1 / 64
"""float: Fraction of an intersected interval trimmed from each end before scanning."""

MIN_SCAN: int = 2
"""int: Smallest ``e - s`` for which the scan range ``s+1 .. e-1`` is nonempty."""

DEPTH_SLACK: int = 5
"""int: Recursion depth guard is ``floor(log2(T)) + DEPTH_SLACK``."""

CHANNEL_MAX_D: int = 12
"""int: Largest row length for which the node channel is enumerated exactly."""

CONSECUTIVE_FAILURE_LIMIT: int = 3
"""int: A simulation cell is aborted after this many failed repetitions in a row."""

DEFAULT_REPETITIONS: int = 100
"""int: Repetitions per simulation cell."""

DEFAULT_INTERVALS: int = 100
"""int: Number of random intervals drawn for network binary segmentation."""

DEFAULT_CAP: float = 2.0
"""float: Default ``C_R``; random intervals are at most ``C_R * Delta`` long."""

THREADS_ENV: str = 'PRIVNET_THREADS'
"""str: Environment variable capping the number of worker threads."""

MANIFEST_NAME: str = 'manifest.toml'
"""str: File name of the manifest inside a sequence directory."""

RAW_COLUMNS = ('scenario', 'alpha', 'delta', 'rep', 'scaled_error', 'k_hat', 'runtime_ms')
"""Tuple[str]: Column order of the raw simulation CSV."""

SUMMARY_COLUMNS = ('scenario', 'alpha', 'delta', 'median')
"""Tuple[str]: Column order of the summary simulation CSV."""

DEFAULT_TAU_RULES = {
    MECHANISM.none: TAURULE.paper_none,
    MECHANISM.edge: TAURULE.calibrated_edge,
    MECHANISM.node: TAURULE.paper_node,
}
"""Dict(MECHANISM, TAURULE): Threshold rule used for each privacy scenario unless overridden."""

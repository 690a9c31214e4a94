"""This module runs simulation studies over grids of privacy levels and segment lengths.

Every cell of the grid is one ``(scenario, alpha, delta)`` triple. For each cell a
balanced single-change network of length ``T = 2 delta`` is sampled,
privatised as the scenario demands, split into odd and even steps, segmented
and scored, once per repetition. Repetitions run as worker-thread jobs inside a
:mod:`trio` nursery. Each draws from random streams keyed by its own
coordinates, so results do not depend on scheduling.

The no-privacy scenario has a single ``alpha`` of ``inf``.
"""

import logging
import math
import os
import time
from dataclasses import astuple, dataclass, field
from functools import partial
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Set, Tuple, Union

import matplotlib
import pandas as pd
import trio

from .constants import (CONSECUTIVE_FAILURE_LIMIT, DEFAULT_CAP, DEFAULT_INTERVALS,
                        DEFAULT_REPETITIONS, DEFAULT_TAU_RULES, DEPENDENCE, MECHANISM,
                        METHOD, RAW_COLUMNS, SHRINK_FRACTION, SUMMARY_COLUMNS, TAURULE)
from .detector import DetectorConfig, detect_split, tau_from_rule
from .ldp_mech import node_privatize, rr_privatize
from .metrics import evaluate
from .netgen import (ModelSpec, NetworkSequence, balanced_spec, sample_sequence, snr_edge,
                     snr_node, snr_none, validate_spec)
from .utils import derive_rng

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402  pylint: disable=wrong-import-position

LOGGER = logging.getLogger(__name__)

Cell = Tuple[MECHANISM, float, int]
TauSetting = Union[TAURULE, float]

SVG_HASH_SALT = 'privnet-cpd'
"""str: Fixed salt for SVG element ids so repeated runs write identical plots."""


class CellAborted(RuntimeError):
    """Raised for a grid cell whose repetitions failed too many times in a row."""

    def __init__(self, scenario: str, alpha: float, delta: int, failures: int) -> None:
        super().__init__(f'Cell scenario={scenario} alpha={alpha} delta={delta} aborted '
                         f'after {failures} consecutive failed repetitions.')
        self.scenario = scenario
        self.alpha = alpha
        self.delta = delta
        self.failures = failures


@dataclass(frozen=True)
class ResultRow:  # pylint: disable=too-many-instance-attributes
    """Outcome of one repetition, in the column order of the raw CSV."""

    scenario: str
    alpha: float
    delta: int
    rep: int
    scaled_error: float
    k_hat: int
    runtime_ms: float


@dataclass(frozen=True)
class RepetitionFailure:
    """A repetition that raised instead of producing a :class:`ResultRow`."""

    scenario: str
    alpha: float
    delta: int
    rep: int
    error: str


@dataclass(frozen=True)
class ExperimentConfig:  # pylint: disable=too-many-instance-attributes
    """A simulation study.

    Attributes:
        deltas (tuple of int): Segment lengths, each at least 2.
        alphas (tuple of float): Privacy budgets for the private scenarios.
        scenarios (tuple of MECHANISM): Privacy scenarios to run.
        n1 (int): Nodes, or rows of a bipartite network.
        n2 (int): Columns of a bipartite network; equal to ``n1`` when symmetric.
        theta_pre (float): Edge probability before the change.
        theta_post (float): Edge probability after the change.
        symmetric (bool): Undirected networks if True.
        dependence (DEPENDENCE): Within-row dependence of bipartite networks.
        repetitions (int): Repetitions per cell.
        method (METHOD): ``bs`` or ``nbs``.
        intervals (int): Seed intervals per ``nbs`` run.
        cap (float): Seed intervals are at most ``cap * delta`` long; ``None`` for no cap.
        shrink (float): Interval shrink fraction for ``nbs``.
        tau_rules (dict): Threshold rule name or fixed value per scenario.
        seed (int): Master seed.
        threads (int): Worker thread cap, ``None`` for all cores.
        raw_csv (Path): Where to write the raw table.
        summary_csv (Path): Where to write the summary table.
        plot_dir (Path): Where to write one SVG per scenario.
        record_runtime (bool): Record wall-clock time per repetition instead of 0.

    """

    deltas: Tuple[int, ...]
    alphas: Tuple[float, ...] = ()
    scenarios: Tuple[MECHANISM, ...] = (MECHANISM.none,)
    n1: int = 50
    n2: int = 50
    theta_pre: float = 0.1
    theta_post: float = 0.4
    symmetric: bool = True
    dependence: DEPENDENCE = DEPENDENCE.independent
    repetitions: int = DEFAULT_REPETITIONS
    method: METHOD = METHOD.bs
    intervals: int = DEFAULT_INTERVALS
    cap: Optional[float] = DEFAULT_CAP
    shrink: float = SHRINK_FRACTION
    tau_rules: Mapping[MECHANISM, TauSetting] = field(default_factory=lambda: dict(DEFAULT_TAU_RULES))
    seed: int = 0
    threads: Optional[int] = None
    raw_csv: Optional[Path] = None
    summary_csv: Optional[Path] = None
    plot_dir: Optional[Path] = None
    record_runtime: bool = False

    def __post_init__(self) -> None:  # pylint: disable=too-many-branches
        object.__setattr__(self, 'deltas', tuple(int(delta) for delta in self.deltas))
        object.__setattr__(self, 'alphas', tuple(float(alpha) for alpha in self.alphas))
        object.__setattr__(self, 'scenarios', tuple(MECHANISM(s) for s in self.scenarios))
        object.__setattr__(self, 'method', METHOD(self.method))
        object.__setattr__(self, 'dependence', DEPENDENCE(self.dependence))
        rules = dict(DEFAULT_TAU_RULES)
        for scenario, rule in self.tau_rules.items():
            rules[MECHANISM(scenario)] = float(rule) if isinstance(rule, (int, float)) else TAURULE(rule)
        object.__setattr__(self, 'tau_rules', rules)
        if self.repetitions < 1:
            raise ValueError(f'repetitions must be at least 1, got {self.repetitions}.')
        if not self.deltas:
            raise ValueError('The delta grid is empty.')
        if min(self.deltas) < 2:
            raise ValueError(f'Every delta must be at least 2, got {min(self.deltas)}.')
        if not self.scenarios:
            raise ValueError('No scenarios given.')
        private = [s for s in self.scenarios if s is not MECHANISM.none]
        if private and not self.alphas:
            raise ValueError(f'Scenario(s) {[s.value for s in private]} need a nonempty alpha grid.')
        if private and min(self.alphas) <= 0:
            raise ValueError(f'Every alpha must be positive, got {min(self.alphas)}.')
        if MECHANISM.node in self.scenarios and self.symmetric:
            raise ValueError('The node scenario needs a bipartite model (symmetric = false).')
        if self.symmetric and self.n1 != self.n2:
            raise ValueError(f'Symmetric models need n1 == n2, got {self.n1} and {self.n2}.')
        for scenario, rule in self.tau_rules.items():
            if isinstance(rule, float) and not rule > 0:
                raise ValueError(f'Fixed tau for {scenario.value} must be positive, got {rule}.')
        if self.cap is not None and not self.cap > 0:
            raise ValueError(f'cap must be positive, got {self.cap}.')
        if self.cap is not None and self.method is METHOD.nbs and self.cap * min(self.deltas) / 2 < 2:
            raise ValueError(f'Seed intervals need cap * min(deltas) / 2 >= 2, '
                             f'got {self.cap} * {min(self.deltas)} / 2.')
        if self.threads is not None and self.threads < 1:
            raise ValueError(f'threads must be at least 1, got {self.threads}.')

    def cells(self) -> Iterator[Cell]:
        """Yield every ``(scenario, alpha, delta)`` cell in grid order."""
        for scenario in self.scenarios:
            alphas = (math.inf,) if scenario is MECHANISM.none else self.alphas
            for alpha in alphas:
                for delta in self.deltas:
                    yield scenario, alpha, delta

    def spec_for(self, delta: int) -> ModelSpec:
        """Return the balanced single-change model for a segment length.

        Equal pre- and post-change probabilities give a model of the same length
        without a change point.
        """
        if self.theta_pre == self.theta_post:
            return ModelSpec(T=2 * delta, n1=self.n1, n2=self.n2, segment_thetas=(self.theta_pre,),
                             dependence=self.dependence, symmetric=self.symmetric)
        return balanced_spec(delta, n=self.n1, theta_pre=self.theta_pre, theta_post=self.theta_post,
                            symmetric=self.symmetric, n2=self.n2, dependence=self.dependence)

    def tau_for(self, scenario: MECHANISM, delta: int) -> float:
        """Return the detection threshold of a scenario at a segment length."""
        rule = self.tau_rules[MECHANISM(scenario)]
        if isinstance(rule, float):
            return rule
        return tau_from_rule(rule, self.n1, self.n2, 2 * delta)


@dataclass
class ExperimentResult:
    """Tables and failures collected by :func:`run_experiment`.

    Attributes:
        raw (pandas.DataFrame): One row per successful repetition, columns :data:`RAW_COLUMNS`.
        summary (pandas.DataFrame): Median scaled error per cell, columns :data:`SUMMARY_COLUMNS`.
        failures (list): Every :class:`RepetitionFailure`.
        aborted (list): A :class:`CellAborted` for every cell left out of the tables.

    """

    raw: pd.DataFrame
    summary: pd.DataFrame
    failures: List[RepetitionFailure] = field(default_factory=list)
    aborted: List[CellAborted] = field(default_factory=list)


def privatize(seq: NetworkSequence, scenario: Union[MECHANISM, str], alpha: float, seed: int,
              *indices: object) -> NetworkSequence:
    """Apply a scenario's privacy channel, drawing from the ``privatize`` stream of ``indices``."""
    scenario = MECHANISM(scenario)
    if scenario is MECHANISM.none:
        return seq
    rng = derive_rng(seed, 'privatize', *indices)
    if scenario is MECHANISM.edge:
        return rr_privatize(seq, alpha, rng)
    return node_privatize(seq, alpha, rng)


def run_repetition(cfg: ExperimentConfig, cell: Cell, rep: int) -> ResultRow:
    """Run one repetition of one cell."""
    scenario, alpha, delta = cell
    coords = (scenario.value, alpha, delta, rep)
    start = time.perf_counter()
    spec = cfg.spec_for(delta)
    raw = sample_sequence(spec, derive_rng(cfg.seed, 'sample', *coords))
    seq = privatize(raw, scenario, alpha, cfg.seed, *coords)
    detector_cfg = DetectorConfig(tau=cfg.tau_for(scenario, delta), shrink=cfg.shrink)
    estimate = detect_split(seq,
                            detector_cfg,
                            method=cfg.method,
                            intervals=cfg.intervals,
                            cap=None if cfg.cap is None else cfg.cap * delta,
                            seed=derive_rng(cfg.seed, 'intervals', *coords),
                            )
    result = evaluate(estimate, spec.split_points, delta)
    runtime = (time.perf_counter() - start) * 1000 if cfg.record_runtime else 0.0
    return ResultRow(scenario=scenario.value, alpha=alpha, delta=delta, rep=rep,
                     scaled_error=result.scaled, k_hat=result.k_hat, runtime_ms=runtime)


def _guarded_repetition(cfg: ExperimentConfig, cell: Cell, rep: int) -> Union[ResultRow, RepetitionFailure]:
    scenario, alpha, delta = cell
    try:
        return run_repetition(cfg, cell, rep)
    except Exception as err:  # pylint: disable=broad-except
        LOGGER.warning(f'Repetition failed: scenario={scenario.value} alpha={alpha} delta={delta} '
                       f'rep={rep}: {type(err).__name__}: {err}')
        return RepetitionFailure(scenario=scenario.value, alpha=alpha, delta=delta, rep=rep,
                                 error=f'{type(err).__name__}: {err}')


def _log_cell_regime(cfg: ExperimentConfig, cell: Cell) -> None:
    scenario, alpha, delta = cell
    params = validate_spec(cfg.spec_for(delta))
    n = math.sqrt(cfg.n1 * cfg.n2)
    if scenario is MECHANISM.none:
        snr = snr_none(params, n)
    elif scenario is MECHANISM.edge:
        snr = snr_edge(params, n, alpha)
    else:
        snr = snr_node(params, cfg.n1, cfg.n2, alpha)
    LOGGER.info(f'Cell scenario={scenario.value} alpha={alpha} delta={delta}: '
                f'tau={cfg.tau_for(scenario, delta):.6g}, signal-to-noise {snr:.6g}')


def _closes_failure_run(done: Mapping[int, Union[ResultRow, RepetitionFailure]], rep: int) -> bool:
    """Whether the failed ``rep`` completes a run of consecutive failures long enough to abort."""
    streak = 0
    for other in range(rep - CONSECUTIVE_FAILURE_LIMIT + 1, rep + CONSECUTIVE_FAILURE_LIMIT):
        streak = streak + 1 if isinstance(done.get(other), RepetitionFailure) else 0
        if streak >= CONSECUTIVE_FAILURE_LIMIT:
            return True
    return False


def summarise(raw: pd.DataFrame) -> pd.DataFrame:
    """Return the median scaled error per cell, cells in order of first appearance."""
    summary = (raw.groupby(['scenario', 'alpha', 'delta'], sort=False)['scaled_error']
               .median()
               .reset_index(name='median'))
    return summary[list(SUMMARY_COLUMNS)]


async def run_experiment_async(cfg: ExperimentConfig, threads: Optional[int] = None) -> ExperimentResult:
    """Run every repetition of every cell concurrently and collect the tables.

    Each cell runs in its own cancel scope. Once a cell has failed
    ``CONSECUTIVE_FAILURE_LIMIT`` repetitions in a row, the repetitions of that
    cell that have not started yet are cancelled.

    Args:
        cfg (ExperimentConfig): The study.
        threads (int): Worker thread cap; falls back to ``cfg.threads`` and then to the core count.

    Returns:
        ExperimentResult: Tables in grid order, repetitions in order within each cell.

    """
    cap = threads or cfg.threads or os.cpu_count() or 1
    limiter = trio.CapacityLimiter(cap)
    cells = list(cfg.cells())
    outcomes: Dict[int, Dict[int, Union[ResultRow, RepetitionFailure]]] = {i: {} for i in range(len(cells))}
    aborted_cells: Set[int] = set()
    LOGGER.info(f'Running {len(cells)} cell(s) x {cfg.repetitions} repetition(s) on up to {cap} thread(s).')

    async def _run_job(index: int, rep: int, scope: trio.CancelScope) -> None:
        job = partial(_guarded_repetition, cfg, cells[index], rep)
        outcome = await trio.to_thread.run_sync(job, limiter=limiter)
        outcomes[index][rep] = outcome
        if isinstance(outcome, RepetitionFailure) and _closes_failure_run(outcomes[index], rep):
            aborted_cells.add(index)
            LOGGER.debug(f'Cancelling the remaining repetitions of cell {index}.')
            scope.cancel()

    async def _run_cell(index: int) -> None:
        with trio.CancelScope() as scope:
            async with trio.open_nursery() as cell_nursery:
                for rep in range(cfg.repetitions):
                    cell_nursery.start_soon(_run_job, index, rep, scope)

    async with trio.open_nursery() as nursery:
        for index, cell in enumerate(cells):
            _log_cell_regime(cfg, cell)
            nursery.start_soon(_run_cell, index)

    rows: List[ResultRow] = []
    failures: List[RepetitionFailure] = []
    aborted: List[CellAborted] = []
    for index, (scenario, alpha, delta) in enumerate(cells):
        done = outcomes[index]
        cell_outcomes = [done[rep] for rep in sorted(done)]
        failures.extend(o for o in cell_outcomes if isinstance(o, RepetitionFailure))
        if index in aborted_cells:
            abort = CellAborted(scenario.value, alpha, delta, CONSECUTIVE_FAILURE_LIMIT)
            LOGGER.error(str(abort))
            aborted.append(abort)
            continue
        rows.extend(o for o in cell_outcomes if isinstance(o, ResultRow))

    raw = pd.DataFrame([astuple(row) for row in rows], columns=list(RAW_COLUMNS))
    raw = raw.astype({'scenario': str, 'alpha': float, 'delta': int, 'rep': int,
                      'scaled_error': float, 'k_hat': int, 'runtime_ms': float})
    return ExperimentResult(raw=raw, summary=summarise(raw), failures=failures, aborted=aborted)


def run_experiment(cfg: ExperimentConfig, threads: Optional[int] = None) -> ExperimentResult:
    """Run a study to completion; see :func:`run_experiment_async`."""
    return trio.run(run_experiment_async, cfg, threads)


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)
    except OSError as err:
        raise OSError(f'Cannot write {path}: {err.strerror or err}') from err
    LOGGER.info(f'Wrote {len(frame)} row(s) to {path}.')
    return path


def _alpha_label(alpha: float) -> str:
    return 'no privacy' if math.isinf(alpha) else f'alpha = {alpha:g}'


def plot_scenario(summary: pd.DataFrame, scenario: str, path: Path) -> Path:
    """Draw median scaled error against delta, one line per alpha, as a standalone SVG."""
    panel = summary[summary['scenario'] == scenario]
    with plt.rc_context({'svg.hashsalt': SVG_HASH_SALT}):
        fig, ax = plt.subplots(figsize=(5, 4))
        for alpha, group in panel.groupby('alpha', sort=False):
            group = group.sort_values('delta')
            ax.plot(group['delta'], group['median'], marker='o', label=_alpha_label(alpha))
        ax.set_title(f'{scenario}')
        ax.set_xlabel('Delta')
        ax.set_ylabel('median scaled Hausdorff error')
        ax.set_ylim(-0.05, 1.05)
        ax.legend()
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(path, format='svg', metadata={'Date': None})
        except OSError as err:
            raise OSError(f'Cannot write {path}: {err.strerror or err}') from err
        finally:
            plt.close(fig)
    return path


def emit_outputs(raw: pd.DataFrame,
                 summary: pd.DataFrame,
                 raw_csv: Optional[Path] = None,
                 summary_csv: Optional[Path] = None,
                 plot_dir: Optional[Path] = None,
                 ) -> List[Path]:
    """Write the raw table, the summary table and one SVG per scenario.

    Returns:
        list of pathlib.Path: Every file written.

    Raises:
        ValueError: If there are no results; nothing is written then.
        OSError: If a file cannot be written, naming the path.

    """
    if raw.empty or summary.empty:
        raise ValueError('No results to write.')
    written = []
    if raw_csv is not None:
        written.append(_write_csv(raw[list(RAW_COLUMNS)], Path(raw_csv)))
    if summary_csv is not None:
        written.append(_write_csv(summary[list(SUMMARY_COLUMNS)], Path(summary_csv)))
    if plot_dir is not None:
        for scenario in summary['scenario'].unique():
            written.append(plot_scenario(summary, scenario, Path(plot_dir) / f'{scenario}.svg'))
    return written


def load_raw_table(path: Union[str, Path]) -> pd.DataFrame:
    """Parse a raw CSV written by :func:`emit_outputs`.

    Raises:
        ValueError: If a column is missing.

    """
    frame = pd.read_csv(path, dtype={'scenario': str, 'alpha': float, 'delta': int, 'rep': int,
                                     'scaled_error': float, 'k_hat': int, 'runtime_ms': float},
                        float_precision='round_trip')
    missing = set(RAW_COLUMNS) - set(frame.columns)
    if missing:
        raise ValueError(f'{path}: missing column(s) {sorted(missing)}.')
    return frame[list(RAW_COLUMNS)]


def smallest_delta_reaching(summary: pd.DataFrame, scenario: str, alpha: float, level: float) -> Optional[int]:
    """Return the smallest delta whose median scaled error is at most ``level``, or ``None``."""
    panel = summary[(summary['scenario'] == scenario) & (summary['alpha'] == alpha)].sort_values('delta')
    hits = panel[panel['median'] <= level]
    return None if hits.empty else int(hits['delta'].iloc[0])


def count_inversions(summary: pd.DataFrame, scenario: str, alpha: float) -> int:
    """Count adjacent pairs, in increasing delta, where the median error goes up."""
    panel = summary[(summary['scenario'] == scenario) & (summary['alpha'] == alpha)].sort_values('delta')
    return int((panel['median'].diff() > 0).sum())


def alpha_trend_violations(summary: pd.DataFrame, scenario: str, delta: int) -> int:
    """Count adjacent pairs, in decreasing alpha, where the median error goes down."""
    panel = summary[(summary['scenario'] == scenario) & (summary['delta'] == delta)]
    medians = panel.sort_values('alpha', ascending=False)['median']
    return int((medians.diff() < 0).sum())

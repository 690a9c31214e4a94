"""Command line entry point: ``privnet-cpd <subcommand> ...``.

Subcommands:

    generate          sample a network sequence from a model spec or a worst-case instance
    privatize         apply edge or node local privacy to a sequence
    detect            estimate change points of a sequence
    simulate          run a simulation study from an experiment config
    verify-mechanism  certify the node mechanism by exact enumeration

Errors are reported on one line of stderr as ``error: config: <key path>: <message>``
for configuration problems and ``error: <kind>: <message>`` otherwise, with exit
status 1. Usage errors exit with status 2.
"""

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path
from typing import Callable, List, Optional

import pandas as pd

from ._version import __version__
from .config import ConfigError, dump_model_spec, load_experiment, load_model_spec
from .constants import CHANNEL, DEFAULT_CAP, DEFAULT_INTERVALS, DEFAULT_TAU_RULES, INPUTS, MECHANISM, METHOD, TAURULE
from .detector import DetectorConfig, bs_detect, detect_split, gen_random_intervals, nbs_detect, tau_from_rule
from .ldp_mech import node_privatize, privacy_ratio, rr_privatize, verify_mechanism
from .netgen import sample_sequence, validate_spec, worst_case_instance
from .seqio import estimate_frame, read_sequence, write_sequence
from .simlab import emit_outputs, run_experiment
from .utils import default_threads, derive_rng

LOGGER = logging.getLogger(__name__)

logformat = "[%(asctime)s] %(levelname)s:%(name)s:%(message)s"  # pylint: disable=invalid-name

SPEC_FILE_NAME = 'model.toml'
"""str: Name of the model spec written next to a generated sequence."""


def _add_common(parser: argparse.ArgumentParser, out_help: str) -> None:
    parser.add_argument('--seed', type=int, default=None, help='master seed (default: 0, or the config seed)')
    parser.add_argument('--out', type=Path, default=None, help=out_help)
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='log INFO with -v, DEBUG with -vv')


def parse_args(args: List[str]) -> argparse.Namespace:
    """Parse command line parameters."""
    parser = argparse.ArgumentParser(
        prog='privnet-cpd',
        description='Change point localisation on privatised dynamic networks')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND', required=True)

    gen = subparsers.add_parser('generate', help='sample a network sequence')
    source = gen.add_mutually_exclusive_group(required=True)
    source.add_argument('--config', type=Path, help='model spec TOML file')
    source.add_argument('--worst-case', choices=['edge', 'node'], help='build a worst-case instance')
    gen.add_argument('--n', type=int, help='nodes of an edge worst-case instance')
    gen.add_argument('--n1', type=int, help='rows of a node worst-case instance')
    gen.add_argument('--n2', type=int, help='columns of a node worst-case instance')
    gen.add_argument('--delta', type=int, help='length of the elevated segment')
    gen.add_argument('--T', dest='horizon', type=int, help='horizon of a worst-case instance')
    gen.add_argument('--rho', type=float, default=0.4, help='sparsity (default: %(default)s)')
    gen.add_argument('--alpha', type=float, default=1.0, help='privacy budget (default: %(default)s)')
    gen.add_argument('--mirrored', action='store_true', help='put the elevated segment at the end')
    _add_common(gen, 'sequence directory to write')
    gen.set_defaults(func=cmd_generate)

    priv = subparsers.add_parser('privatize', help='privatise a sequence')
    priv.add_argument('--input', type=Path, required=True, help='sequence directory')
    priv.add_argument('--mechanism', choices=['edge', 'node'], required=True)
    priv.add_argument('--alpha', type=float, required=True, help='privacy budget')
    _add_common(priv, 'sequence directory to write')
    priv.set_defaults(func=cmd_privatize)

    det = subparsers.add_parser('detect', help='estimate change points')
    inputs = det.add_mutually_exclusive_group(required=True)
    inputs.add_argument('--input', type=Path, help='sequence directory, split into odd and even steps')
    inputs.add_argument('--pair', type=Path, nargs=2, metavar=('U', 'V'),
                        help='two independent sequence directories of equal shape')
    det.add_argument('--mechanism', choices=[m.value for m in MECHANISM], default='none',
                     help='privacy scenario, picks the default threshold rule (default: %(default)s)')
    det.add_argument('--alpha', type=float, default=None, help='privacy budget the input was produced with')
    threshold = det.add_mutually_exclusive_group()
    threshold.add_argument('--tau', type=float, help='detection threshold')
    threshold.add_argument('--tau-rule', choices=[r.value for r in TAURULE], help='threshold rule')
    det.add_argument('--method', choices=[m.value for m in METHOD], default='bs')
    det.add_argument('--intervals', type=int, default=DEFAULT_INTERVALS, help='seed intervals M for nbs')
    det.add_argument('--cap', type=float, default=None,
                     help=f'seed intervals are at most C_R * delta long, e.g. {DEFAULT_CAP}; needs --delta')
    det.add_argument('--delta', type=int, default=None, help='assumed minimal spacing for --cap')
    _add_common(det, 'CSV file for the estimate (default: stdout)')
    det.set_defaults(func=cmd_detect)

    sim = subparsers.add_parser('simulate', help='run a simulation study')
    sim.add_argument('--config', type=Path, required=True, help='experiment TOML file')
    sim.add_argument('--threads', type=int, default=None, help='worker threads')
    _add_common(sim, 'directory for raw.csv, summary.csv and plots/')
    sim.set_defaults(func=cmd_simulate)

    ver = subparsers.add_parser('verify-mechanism', help='certify the node mechanism exactly')
    ver.add_argument('--d', type=int, nargs='+', required=True, help='row lengths')
    ver.add_argument('--alpha', type=float, nargs='+', required=True, help='privacy budgets')
    ver.add_argument('--samples', type=int, default=0, help='Monte Carlo draws per input for a z-score column')
    ver.add_argument('--inputs', choices=[i.value for i in INPUTS], default='binary')
    _add_common(ver, 'CSV file for the report (default: stdout)')
    ver.set_defaults(func=cmd_verify_mechanism)

    return parser.parse_args(args)


def setup_logging(verbosity: int) -> None:
    """Log to stderr at WARNING, INFO with one ``-v``, DEBUG with two."""
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format=logformat)


def _seed(pargs: argparse.Namespace) -> int:
    return 0 if pargs.seed is None else pargs.seed


def _require_out(pargs: argparse.Namespace) -> Path:
    if pargs.out is None:
        raise ValueError(f'{pargs.command} needs --out.')
    return pargs.out


def cmd_generate(pargs: argparse.Namespace) -> int:
    """Sample a sequence and write it, with its model spec, to ``--out``."""
    out = _require_out(pargs)
    if pargs.config is not None:
        spec = load_model_spec(pargs.config)
    else:
        if pargs.delta is None or pargs.horizon is None:
            raise ValueError('--worst-case needs --delta and --T.')
        if pargs.worst_case == 'edge':
            if pargs.n is None:
                raise ValueError('--worst-case edge needs --n.')
            dims = pargs.n
        else:
            if pargs.n1 is None or pargs.n2 is None:
                raise ValueError('--worst-case node needs --n1 and --n2.')
            dims = (pargs.n1, pargs.n2)
        spec = worst_case_instance(pargs.worst_case, dims, pargs.delta, pargs.horizon, pargs.rho,
                                   pargs.alpha, derive_rng(_seed(pargs), 'worst_case'), mirrored=pargs.mirrored)
    params = validate_spec(spec)
    LOGGER.info(f'Model: T={spec.T} n1={spec.n1} n2={spec.n2} change points {list(spec.change_points)}; {params}')
    seq = sample_sequence(spec, derive_rng(_seed(pargs), 'sample'))
    write_sequence(seq, out)
    dump_model_spec(spec, out / SPEC_FILE_NAME)
    print(out)
    return 0


def cmd_privatize(pargs: argparse.Namespace) -> int:
    """Privatise the sequence at ``--input`` and write it to ``--out``."""
    out = _require_out(pargs)
    seq = read_sequence(pargs.input)
    rng = derive_rng(_seed(pargs), 'privatize')
    if pargs.mechanism == 'edge':
        private = rr_privatize(seq, pargs.alpha, rng)
    else:
        private = node_privatize(seq, pargs.alpha, rng)
    write_sequence(private, out)
    print(out)
    return 0


def cmd_detect(pargs: argparse.Namespace) -> int:
    """Estimate change points and print or write them as CSV."""
    if pargs.cap is not None and pargs.delta is None:
        raise ValueError('--cap needs --delta.')
    cap = None if pargs.cap is None else pargs.cap * pargs.delta
    if pargs.input is not None:
        seq = read_sequence(pargs.input)
        n1, n2, length = seq.rows, seq.cols, seq.T
    else:
        seq_u, seq_v = (read_sequence(path) for path in pargs.pair)
        n1, n2, length = seq_u.rows, seq_u.cols, 2 * seq_u.T
    if pargs.tau is not None:
        tau = pargs.tau
    else:
        rule = pargs.tau_rule or DEFAULT_TAU_RULES[MECHANISM(pargs.mechanism)]
        tau = tau_from_rule(rule, n1, n2, length)
    LOGGER.info(f'Detecting with tau={tau:.6g} (mechanism={pargs.mechanism}, alpha={pargs.alpha}).')
    cfg = DetectorConfig(tau=tau)
    if pargs.input is not None:
        estimate = detect_split(seq, cfg, method=pargs.method, intervals=pargs.intervals, cap=cap,
                                seed=derive_rng(_seed(pargs), 'intervals'))
    elif pargs.method == METHOD.nbs.value:
        half_cap = None if cap is None else cap / 2
        pairs = gen_random_intervals(seq_u.T, pargs.intervals, half_cap, derive_rng(_seed(pargs), 'intervals'))
        estimate = nbs_detect(seq_u, seq_v, pairs, cfg)
    else:
        estimate = bs_detect(seq_u, seq_v, cfg)
    _write_table(estimate_frame(estimate), pargs.out)
    return 0


def cmd_simulate(pargs: argparse.Namespace) -> int:
    """Run the study in ``--config`` and write its tables and plots."""
    cfg = load_experiment(pargs.config)
    if pargs.seed is not None:
        cfg = dataclasses.replace(cfg, seed=pargs.seed)
    if pargs.out is not None:
        cfg = dataclasses.replace(cfg,
                                  raw_csv=pargs.out / 'raw.csv',
                                  summary_csv=pargs.out / 'summary.csv',
                                  plot_dir=pargs.out / 'plots')
    if cfg.raw_csv is None and cfg.summary_csv is None and cfg.plot_dir is None:
        raise ValueError('simulate needs --out or an [output] section.')
    threads = pargs.threads or cfg.threads or default_threads(os.environ)
    result = run_experiment(cfg, threads=threads)
    for aborted in result.aborted:
        print(f'warning: {aborted}', file=sys.stderr)
    for path in emit_outputs(result.raw, result.summary, cfg.raw_csv, cfg.summary_csv, cfg.plot_dir):
        print(path)
    return 0


def cmd_verify_mechanism(pargs: argparse.Namespace) -> int:
    """Print or write the mechanism verification report."""
    report = verify_mechanism(pargs.d, pargs.alpha, samples=pargs.samples,
                              seed=derive_rng(_seed(pargs), 'verify'), inputs=pargs.inputs)
    report.insert(2, 'edge_rr_ratio', [privacy_ratio(CHANNEL.edge_rr, 1, alpha) for alpha in report['alpha']])
    _write_table(report, pargs.out)
    return 0


def _write_table(frame: pd.DataFrame, out: Optional[Path]) -> None:
    if out is None:
        frame.to_csv(sys.stdout, index=False)
        return
    try:
        frame.to_csv(out, index=False)
    except OSError as err:
        raise OSError(f'Cannot write {out}: {err.strerror or err}') from err
    print(out)


def dispatch(argv: List[str]) -> int:
    """Run one command line and return its exit status."""
    try:
        pargs = parse_args(argv)
    except SystemExit as exc:  # argparse exits on --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else 2
    setup_logging(pargs.verbose)
    func: Callable[[argparse.Namespace], int] = pargs.func
    try:
        return func(pargs)
    except ConfigError as err:
        print(f'error: config: {err.key_path}: {err.message}', file=sys.stderr)
    except (ValueError, OSError) as err:
        print(f'error: {type(err).__name__}: {err}', file=sys.stderr)
    return 1


def main() -> None:
    """Provide main entry point."""
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()

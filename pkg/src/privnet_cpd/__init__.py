"""This package localises change points in dynamic networks under local privacy.

It covers the whole pipeline:

    - sampling dynamic Bernoulli networks with change points, including hard
      instances for a given privacy level (:mod:`~privnet_cpd.netgen`),
    - privatising them under edge or node local differential privacy, with exact
      enumeration of the node channel for small rows (:mod:`~privnet_cpd.ldp_mech`),
    - scoring splits with matrix CUSUM inner products (:mod:`~privnet_cpd.cusum`)
      and segmenting recursively (:mod:`~privnet_cpd.detector`),
    - measuring localisation error (:mod:`~privnet_cpd.metrics`) and running
      seeded, parallel simulation studies (:mod:`~privnet_cpd.simlab`).

A command line tool, ``privnet-cpd``, wraps all of the above.
"""

import logging

from .constants import (CHANNEL, DEPENDENCE, DOMAIN, INPUTS, MECHANISM, METHOD, TAURULE)
from ._version import __version__
from .netgen import (ModelParams, ModelSpec, NetworkSequence, ProbMatrix, balanced_spec,
                     population_sequence, sample_sequence, validate_spec, worst_case_instance)
from .ldp_mech import (ChannelTable, EdgeRRParams, NodeMechParams, channel_exact, moments_exact,
                       node_constants, node_privatize, privacy_ratio, rr_closure, rr_privatize,
                       verify_mechanism)
from .cusum import CusumMatrix, cusum_at, cusum_inner, scan_argmax
from .detector import (DetectorConfig, Estimate, IntervalSet, bs_detect, detect_split,
                       gen_random_intervals, nbs_detect, split_even_odd, tau_from_rule)
from .metrics import EvalResult, hausdorff, scaled_error
from .simlab import CellAborted, ExperimentConfig, emit_outputs, run_experiment
from .config import ConfigError, load_experiment, load_model_spec

logging.getLogger(__name__).addHandler(logging.NullHandler())

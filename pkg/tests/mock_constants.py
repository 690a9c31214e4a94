# pylint: skip-file
"""Shared fixtures data for the test-suite."""

import math

import numpy as np

BALANCED_N = 50
BALANCED_THETA_PRE = 0.1
BALANCED_THETA_POST = 0.4
BALANCED_RHO = 0.4
BALANCED_KAPPA0 = 0.75

E = math.e

# (d, alpha) -> (C_d, B)
NODE_CONSTANTS = {
    (1, 1.0): (1.0, (E + 1) / (E - 1)),
    (2, 1.0): (3.0, 3 * (E + 1) / (E - 1)),
    (3, 1.0): (2.0, 2 * (E + 1) / (E - 1)),
}

# 2 x 2 bipartite instance with a jump from all zeros to all halves.
TINY_PRE = np.zeros((2, 2))
TINY_POST = np.full((2, 2), 0.5)

MODEL_TOML = """
T = 20
n1 = 3
n2 = 3
symmetric = true
change_points = [11]
theta = [0.1, 0.4]
"""

BIPARTITE_TOML = """
T = 12
n1 = 2
n2 = 3
dependence = "identical_rows"
change_points = [5, 9]
theta = [0.2, "middle.csv", 0.2]
"""

MIDDLE_CSV = "0.7,0.7,0.7\n0.1,0.1,0.1\n"

EXPERIMENT_TOML = """
seed = 11

[model]
n = 10
theta_pre = 0.1
theta_post = 0.4

[grid]
scenarios = ["none", "edge"]
alphas = [1.0]
deltas = [10, 14]
repetitions = 4

[detector]
method = "nbs"
intervals = 20
cap = 2.0

[detector.tau_rule]
none = "paper-none"
edge = 3.5

[output]
raw_csv = "out/raw.csv"
summary_csv = "out/summary.csv"
plot_dir = "out/plots"
"""

BAD_EXPERIMENT_TOML = """
[model]
n = 10

[grid]
deltas = [10, 1]
"""

# pylint: skip-file
import logging
import math

import numpy as np
import pytest

from privnet_cpd import (DEPENDENCE, DOMAIN, ModelSpec, NetworkSequence, ProbMatrix, balanced_spec,
                         population_sequence, sample_sequence, validate_spec, worst_case_instance)
from privnet_cpd.netgen import snr_edge, snr_node, snr_none

from .mock_constants import (BALANCED_KAPPA0, BALANCED_N, BALANCED_RHO, BALANCED_THETA_POST, BALANCED_THETA_PRE,
                             TINY_POST, TINY_PRE)


def test_balanced_summary():
    spec = balanced_spec(50)

    assert spec.T == 100
    assert spec.change_points == (51,)
    assert spec.split_points == (50,)
    assert spec.boundaries == (1, 51, 101)

    params = validate_spec(spec)
    assert params.delta == 50
    assert params.rho == pytest.approx(BALANCED_RHO)
    assert params.kappa == pytest.approx(BALANCED_N * (BALANCED_THETA_POST - BALANCED_THETA_PRE))
    assert params.kappa0 == pytest.approx(BALANCED_KAPPA0)


def test_no_change_summary():
    spec = ModelSpec(T=30, n1=4, n2=4, segment_thetas=(0.3,))

    params = validate_spec(spec)
    assert spec.K == 0
    assert params.delta == 30
    assert math.isinf(params.kappa)
    assert math.isinf(params.kappa0)


def test_tiny_bipartite_summary():
    spec = ModelSpec(T=2, n1=2, n2=2, change_points=(2,), segment_thetas=(TINY_PRE, TINY_POST))

    params = validate_spec(spec)
    assert params.delta == 1
    assert params.kappa == pytest.approx(1.0)
    assert params.rho == pytest.approx(0.5)
    assert params.kappa0 == pytest.approx(1.0)


def test_segment_lookup():
    spec = ModelSpec(T=10, n1=2, n2=2, change_points=(4, 8), segment_thetas=(0.1, 0.5, 0.2))

    assert spec.segment_index().tolist() == [0, 0, 0, 1, 1, 1, 1, 2, 2, 2]
    assert spec.theta_at(3).max_entry == pytest.approx(0.1)
    assert spec.theta_at(4).max_entry == pytest.approx(0.5)
    assert spec.theta_at(10).max_entry == pytest.approx(0.2)
    assert spec.mean_stack().shape == (10, 2, 2)

    with pytest.raises(ValueError, match='outside 1 .. 10'):
        spec.theta_at(11)


def test_degenerate_probabilities():
    zeros = ModelSpec(T=5, n1=3, n2=4, segment_thetas=(0.0,))
    ones = ModelSpec(T=5, n1=3, n2=4, segment_thetas=(1.0,))

    for seed in (0, 1, 99):
        assert not sample_sequence(zeros, seed).data.any()
        assert sample_sequence(ones, seed).data.all()


def test_sampling_is_seeded():
    spec = balanced_spec(5, n=6)

    first = sample_sequence(spec, 3)
    again = sample_sequence(spec, 3)
    other = sample_sequence(spec, 4)

    assert np.array_equal(first.data, again.data)
    assert not np.array_equal(first.data, other.data)
    assert first.domain is DOMAIN.binary01
    assert first.data.dtype == np.int8


def test_symmetric_sampling():
    seq = sample_sequence(balanced_spec(4, n=8), 0)

    assert seq.symmetric
    assert np.array_equal(seq.data, np.swapaxes(seq.data, 1, 2))


def test_identical_rows_sampling():
    spec = balanced_spec(6, n=5, n2=7, symmetric=False, dependence=DEPENDENCE.identical_rows)

    seq = sample_sequence(spec, 12)
    assert seq.data.shape == (12, 5, 7)
    assert np.all(seq.data == seq.data[:, :, :1])


def test_sample_means():
    spec = ModelSpec(T=400, n1=10, n2=10, segment_thetas=(0.3,))

    seq = sample_sequence(spec, 5)
    # 40000 draws, standard error about 0.0023
    assert seq.data.mean() == pytest.approx(0.3, abs=0.012)


def test_fixed_cell_means():
    pre = np.array([[0.05, 0.2, 0.7], [0.2, 0.5, 0.35], [0.7, 0.35, 0.9]])
    draws = 100_000
    spec = ModelSpec(T=2 * draws, n1=3, n2=3, change_points=(draws + 1,),
                     segment_thetas=(ProbMatrix(pre, symmetric=True), ProbMatrix(1 - pre, symmetric=True)),
                     symmetric=True)

    seq = sample_sequence(spec, 11)

    for (i, j), expected, cell in [((0, 2), 0.7, seq.data[:draws, 0, 2]),
                                   ((1, 2), 0.65, seq.data[draws:, 1, 2]),
                                   ((1, 1), 0.5, seq.data[:draws, 1, 1])]:
        assert abs(cell.mean() - expected) <= 4 * math.sqrt(expected * (1 - expected) / draws), (i, j)
    assert np.array_equal(seq.data[:, 0, 2], seq.data[:, 2, 0])


def test_population_sequence():
    spec = balanced_spec(3, n=4)

    seq = population_sequence(spec)
    assert seq.domain is DOMAIN.real
    assert np.allclose(seq.data[:3], BALANCED_THETA_PRE)
    assert np.allclose(seq.data[3:], BALANCED_THETA_POST)


def test_spec_rejections():
    with pytest.raises(ValueError, match='Expected 2 segment matrices'):
        ModelSpec(T=10, n1=2, n2=2, change_points=(5,), segment_thetas=(0.1,))

    with pytest.raises(ValueError, match='T must be a positive integer'):
        ModelSpec(T=0, n1=2, n2=2, segment_thetas=(0.1,))

    with pytest.raises(ValueError, match='n1 == n2'):
        validate_spec(ModelSpec(T=10, n1=2, n2=3, segment_thetas=(0.1,), symmetric=True))

    with pytest.raises(ValueError, match='identical_rows'):
        validate_spec(ModelSpec(T=10, n1=2, n2=2, segment_thetas=(0.1,), symmetric=True,
                                dependence=DEPENDENCE.identical_rows))

    with pytest.raises(ValueError, match='outside 2 .. 10'):
        validate_spec(ModelSpec(T=10, n1=2, n2=2, change_points=(1,), segment_thetas=(0.1, 0.2)))

    with pytest.raises(ValueError, match='strictly increasing'):
        validate_spec(ModelSpec(T=10, n1=2, n2=2, change_points=(6, 4), segment_thetas=(0.1, 0.2, 0.1)))

    with pytest.raises(ValueError, match='share the same probability matrix'):
        validate_spec(ModelSpec(T=10, n1=2, n2=2, change_points=(5,), segment_thetas=(0.1, 0.1)))

    with pytest.raises(ValueError, match='constant along rows'):
        validate_spec(ModelSpec(T=10, n1=2, n2=2, segment_thetas=(np.array([[0.1, 0.2], [0.1, 0.1]]),),
                                dependence=DEPENDENCE.identical_rows))


def test_prob_matrix_checks():
    with pytest.raises(ValueError, match=r'lie in \[0, 1\]'):
        ProbMatrix(np.array([[0.2, 1.5]]))

    with pytest.raises(ValueError, match='not symmetric'):
        ProbMatrix(np.array([[0.2, 0.3], [0.1, 0.2]]), symmetric=True)

    p = ProbMatrix.constant(2, 3, 0.25)
    assert p == ProbMatrix(np.full((2, 3), 0.25))
    assert hash(p) == hash(ProbMatrix(np.full((2, 3), 0.25)))
    assert not p.values.flags.writeable


def test_network_sequence_checks():
    with pytest.raises(ValueError, match='may only hold 0 and 1'):
        NetworkSequence(np.full((2, 2, 2), 2))

    with pytest.raises(ValueError, match='need a positive B'):
        NetworkSequence(np.ones((2, 2, 2)), domain=DOMAIN.plus_minus_b)

    with pytest.raises(ValueError, match='must equal -B or \\+B'):
        NetworkSequence(np.ones((2, 2, 2)), domain=DOMAIN.plus_minus_b, B=2.0)

    with pytest.raises(ValueError, match='asymmetric'):
        NetworkSequence(np.array([[[0, 1], [0, 0]]]), symmetric=True)

    with pytest.raises(ValueError, match='T x rows x cols'):
        NetworkSequence(np.zeros((2, 2)), domain=DOMAIN.real)


def test_sequence_helpers():
    data = np.arange(24, dtype=float).reshape(6, 2, 2)
    seq = NetworkSequence(data, domain=DOMAIN.real)

    assert len(seq) == 6
    assert np.array_equal(seq.matrix(1), data[0])
    assert np.array_equal(seq.prefix_sums[0], np.zeros((2, 2)))
    assert np.array_equal(seq.prefix_sums[6], data.sum(axis=0))
    assert np.array_equal(seq.subsequence([2, 4]).data, data[[1, 3]])

    combined = seq.combine(seq, a=2.0, b=-1.0)
    assert np.array_equal(combined.data, data)

    with pytest.raises(ValueError, match='outside 1 .. 6'):
        seq.matrix(0)
    with pytest.raises(ValueError, match='Time indices'):
        seq.subsequence([7])


def test_worst_case_edge(caplog):
    with caplog.at_level(logging.WARNING, logger='privnet_cpd.netgen'):
        spec = worst_case_instance('edge', 50, delta=100, T=300, rho=0.4, alpha=1.0, seed=1)

    params = validate_spec(spec)
    assert spec.symmetric
    assert spec.change_points == (101,)
    assert params.delta == 100
    assert params.kappa ** 2 == pytest.approx(50 / (68 * (math.e - 1) ** 2 * 100))
    assert params.kappa ** 2 == pytest.approx(0.00249, abs=1e-5)
    # alpha = 1 is not below the claimed range
    assert 'lower bound is only claimed' in caplog.text


def test_worst_case_node_constant_signs():
    n1, n2, rho, alpha, delta = 16, 9, 0.4, 0.5, 40
    spec = worst_case_instance('node', (n1, n2), delta=delta, T=150, rho=rho, alpha=alpha, seed=0,
                               signs=[1] * n1)

    kappa = math.sqrt(math.sqrt(n1) * n2 / (20 * math.expm1(alpha) ** 2 * delta))
    elevated = spec.segment_thetas[0].values
    assert spec.dependence is DEPENDENCE.identical_rows
    assert not spec.symmetric
    assert np.allclose(elevated, rho / 2 + kappa / math.sqrt(n1 * n2))
    assert np.allclose(spec.segment_thetas[1].values, rho / 2)


def test_worst_case_mirrored():
    spec = worst_case_instance('edge', 20, delta=10, T=40, rho=0.5, alpha=0.5, seed=2, mirrored=True)

    assert spec.change_points == (31,)
    assert spec.segment_thetas[0].max_entry == pytest.approx(0.25)


def test_worst_case_rejections():
    # a tiny budget makes the bump larger than rho / 2
    with pytest.raises(ValueError, match='exceeds 1/4'):
        worst_case_instance('edge', 50, delta=2, T=10, rho=0.4, alpha=0.01, seed=0)

    with pytest.raises(ValueError, match='edge and node kinds only'):
        worst_case_instance('none', 50, delta=2, T=10, rho=0.4, alpha=1, seed=0)

    with pytest.raises(ValueError, match='takes \\(n1, n2\\)'):
        worst_case_instance('node', 50, delta=2, T=10, rho=0.4, alpha=1, seed=0)

    with pytest.raises(ValueError, match='signs must be'):
        worst_case_instance('edge', 4, delta=2, T=10, rho=0.4, alpha=1, seed=0, signs=[1, 0, 1, 1])


def test_snr_quantities():
    params = validate_spec(balanced_spec(10))

    assert snr_none(params, 50) == pytest.approx(0.75 ** 2 * 0.4 * 50 * 10)
    assert snr_edge(params, 50, 0.5) == pytest.approx(0.75 ** 2 * 0.16 * 50 * 10 * 0.25)
    assert snr_node(params, 50, 50, 1.0) == pytest.approx(0.75 ** 2 * 0.16 * 10)
    assert snr_node(params, 25, 100, 1.0) == pytest.approx(0.75 ** 2 * 0.16 * 0.25 * 10)

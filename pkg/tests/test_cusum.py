# pylint: skip-file
import math

import numpy as np
import pytest

from privnet_cpd import (DOMAIN, ModelSpec, NetworkSequence, cusum_at, cusum_inner, balanced_spec,
                         population_sequence, sample_sequence, scan_argmax)
from privnet_cpd.cusum import scan_inner


def brute_cusum(data, s, t, e):
    """CUSUM written straight from its definition, one time step at a time."""
    left = sum(data[i] for i in range(s, t))
    right = sum(data[i] for i in range(t, e))
    return (math.sqrt((e - t) / ((e - s) * (t - s))) * left
            - math.sqrt((t - s) / ((e - s) * (e - t))) * right)


def brute_argmax(data_u, data_v, s, e):
    best, where = -math.inf, None
    for t in range(s + 1, e):
        value = float(np.sum(brute_cusum(data_u, s, t, e) * brute_cusum(data_v, s, t, e)))
        if value > best + 1e-9:
            best, where = value, t
    return where, best


def real_sequence(data):
    return NetworkSequence(np.asarray(data, dtype=float), domain=DOMAIN.real)


def test_matches_definition():
    rng = np.random.default_rng(0)
    seq = real_sequence(rng.normal(size=(12, 3, 4)))

    for s, t, e in [(0, 1, 12), (0, 6, 12), (3, 7, 9), (10, 11, 12)]:
        assert np.allclose(cusum_at(seq, s, t, e).values, brute_cusum(seq.data, s, t, e))


def test_every_window_matches_definition():
    rng = np.random.default_rng(5)
    seq = real_sequence(rng.normal(size=(14, 2, 3)))

    for s in range(14):
        for e in range(s + 2, 15):
            for t in range(s + 1, e):
                assert np.allclose(cusum_at(seq, s, t, e).values, brute_cusum(seq.data, s, t, e))


def test_every_window_argmax_matches_brute_force():
    rng = np.random.default_rng(6)
    T = 30
    u = real_sequence(rng.normal(size=(T, 2, 2)))
    v = real_sequence(u.data + rng.normal(size=(T, 2, 2)))

    for s in range(T - 1):
        for e in range(s + 2, T + 1):
            point, value = scan_argmax(u, v, s, e)
            oracle_point, oracle_value = brute_argmax(u.data, v.data, s, e)
            assert point == oracle_point, (s, e)
            assert value == pytest.approx(oracle_value)


def test_constant_sequence_cancels():
    seq = real_sequence(np.broadcast_to(np.array([[0.3, 0.7], [0.1, 0.9]]), (10, 2, 2)))

    for t in range(1, 10):
        assert np.allclose(cusum_at(seq, 0, t, 10).values, 0.0, atol=1e-12)


def test_linearity():
    rng = np.random.default_rng(1)
    x = real_sequence(rng.normal(size=(9, 2, 3)))
    y = real_sequence(rng.normal(size=(9, 2, 3)))

    combined = cusum_at(x.combine(y, a=2.5, b=-0.5), 1, 4, 9).values
    expected = 2.5 * cusum_at(x, 1, 4, 9).values - 0.5 * cusum_at(y, 1, 4, 9).values
    assert np.allclose(combined, expected)


def test_window_checks():
    seq = real_sequence(np.zeros((5, 1, 1)))

    with pytest.raises(ValueError, match='Invalid CUSUM window'):
        cusum_at(seq, 2, 2, 5)
    with pytest.raises(ValueError, match='Invalid CUSUM window'):
        cusum_at(seq, 0, 3, 6)
    with pytest.raises(ValueError, match='Empty scan range'):
        scan_inner(seq, seq, 2, 3)
    with pytest.raises(ValueError, match='differ in shape'):
        cusum_inner(seq, real_sequence(np.zeros((5, 1, 2))), 0, 2, 5)


def test_population_inner_at_change():
    delta = 8
    spec = balanced_spec(delta, n=6)
    seq = population_sequence(spec)
    pre, post = spec.segment_thetas[0].values, spec.segment_thetas[1].values

    value = cusum_inner(seq, seq, 0, delta, 2 * delta)
    expected = np.sum((math.sqrt(delta / 2) * (pre - post)) ** 2)
    assert value == pytest.approx(expected)
    # which is (delta / 2) kappa^2
    assert value == pytest.approx(delta / 2 * np.sum((pre - post) ** 2))


def test_inner_symmetry_and_constant():
    rng = np.random.default_rng(2)
    u = real_sequence(rng.normal(size=(10, 3, 3)))
    v = real_sequence(rng.normal(size=(10, 3, 3)))
    flat = real_sequence(np.ones((10, 3, 3)))

    assert cusum_inner(u, v, 0, 4, 10) == pytest.approx(cusum_inner(v, u, 0, 4, 10))
    assert cusum_inner(u, flat, 0, 4, 10) == pytest.approx(0.0, abs=1e-12)


def test_scan_matches_pointwise():
    rng = np.random.default_rng(3)
    u = real_sequence(rng.normal(size=(15, 2, 2)))
    v = real_sequence(rng.normal(size=(15, 2, 2)))

    values = scan_inner(u, v, 2, 13)
    assert values.shape == (10,)
    assert np.allclose(values, [cusum_inner(u, v, 2, t, 13) for t in range(3, 13)])


@pytest.mark.parametrize('T, changes, thetas', [
    (20, (8,), (0.1, 0.4)),
    (30, (11, 21), (0.1, 0.5, 0.2)),
    (60, (16, 41), (0.1, 0.4, 0.2)),
    (45, (7, 20, 33), (0.3, 0.1, 0.6, 0.2)),
])
def test_population_argmax_matches_brute_force(T, changes, thetas):
    seq = population_sequence(ModelSpec(T=T, n1=3, n2=4, change_points=changes, segment_thetas=thetas))
    splits = {eta - 1 for eta in changes}

    for s, e in [(0, T), (0, T - 3), (2, T)]:
        point, value = scan_argmax(seq, seq, s, e)
        oracle_point, oracle_value = brute_argmax(seq.data, seq.data, s, e)
        assert point == oracle_point
        assert value == pytest.approx(oracle_value)
        assert point in splits


def test_single_change_window():
    seq = population_sequence(balanced_spec(10, n=4))

    point, value = scan_argmax(seq, seq, 3, 17)
    assert point == 10
    assert value > 0


def test_constant_scan_ties_to_start():
    seq = real_sequence(np.full((10, 2, 2), 0.4))

    point, value = scan_argmax(seq, seq, 2, 9)
    assert point == 3
    assert value == pytest.approx(0.0, abs=1e-12)


def test_two_point_scan():
    rng = np.random.default_rng(4)
    seq = real_sequence(rng.normal(size=(6, 2, 2)))

    assert scan_argmax(seq, seq, 1, 3)[0] == 2


def test_noisy_inner_product_is_unbiased():
    spec = balanced_spec(6, n=10)
    pop = population_sequence(spec)
    expected = cusum_inner(pop, pop, 0, 6, 12)

    values = []
    for rep in range(200):
        u = sample_sequence(spec, 2 * rep)
        v = sample_sequence(spec, 2 * rep + 1)
        values.append(cusum_inner(u, v, 0, 6, 12))
    values = np.array(values)
    assert abs(values.mean() - expected) <= 4 * values.std() / math.sqrt(len(values))

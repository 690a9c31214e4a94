# pylint: skip-file
import math

import numpy as np
import pytest

from privnet_cpd.constants import THREADS_ENV
from privnet_cpd.utils import as_generator, default_threads, derive_rng, log_binom


def test_streams_are_keyed():
    first = derive_rng(7, 'sample', 'edge', 1.0, 10, 0).random(5)

    assert np.array_equal(first, derive_rng(7, 'sample', 'edge', 1.0, 10, 0).random(5))
    assert not np.array_equal(first, derive_rng(7, 'sample', 'edge', 1.0, 10, 1).random(5))
    assert not np.array_equal(first, derive_rng(7, 'privatize', 'edge', 1.0, 10, 0).random(5))
    assert not np.array_equal(first, derive_rng(8, 'sample', 'edge', 1.0, 10, 0).random(5))


def test_stream_order_does_not_matter():
    a_then_b = [derive_rng(0, 'x', i).integers(1 << 30) for i in (1, 2)]
    b_then_a = [derive_rng(0, 'x', i).integers(1 << 30) for i in (2, 1)]

    assert a_then_b == b_then_a[::-1]


def test_bad_seeds():
    with pytest.raises(ValueError, match='non-negative'):
        derive_rng(-1, 'x')
    with pytest.raises(TypeError, match='integer'):
        derive_rng(1.5, 'x')
    with pytest.raises(TypeError, match='integer'):
        derive_rng(True, 'x')


def test_as_generator():
    rng = np.random.default_rng(0)

    assert as_generator(rng, 'ignored') is rng
    assert np.array_equal(as_generator(3, 'tag', 1).random(3), derive_rng(3, 'tag', 1).random(3))


def test_log_binom():
    assert log_binom(10, 3) == pytest.approx(math.log(120))
    assert np.allclose(log_binom(np.array([4, 6]), np.array([2, 3])), np.log([6, 20]))


def test_default_threads():
    assert default_threads() >= 1
    assert default_threads({}) >= 1
    assert default_threads({THREADS_ENV: '3'}) == 3

    for raw in ('0', 'many'):
        with pytest.raises(ValueError, match=THREADS_ENV):
            default_threads({THREADS_ENV: raw})

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from tandem.errors import ContractError
from tandem.numerics import affine, euclidean_distance, make_rng, sigmoid, stream_rng, uniform_draw

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def test_affine_examples():
    np.testing.assert_array_equal(affine(np.zeros((2, 2)), [3, 4], [0, 0]), [0, 0])
    np.testing.assert_array_equal(affine(np.eye(2), [3, 4], [1, -1]), [4, 3])
    np.testing.assert_array_equal(affine([[1, 2], [0, 1]], [1, 1], [0, 0]), [3, 1])


@pytest.mark.parametrize("w,x,b", [
    (np.zeros((2, 3)), [1, 2], [0, 0]),
    (np.zeros((2, 2)), [1, 2], [0, 0, 0]),
])
def test_affine_shape_mismatch(w, x, b):
    with pytest.raises(ContractError):
        affine(w, x, b)


def test_sigmoid_examples():
    assert sigmoid(np.array([0.0]))[0] == 0.5
    assert sigmoid(np.array([1000.0]))[0] == 1.0
    assert sigmoid(np.array([-1000.0]))[0] == 0.0
    assert sigmoid(np.array([1.0]))[0] == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-15)
    assert sigmoid(np.array([1.0]))[0] == pytest.approx(0.7310585786300049, abs=1e-15)


def test_distance_examples():
    assert euclidean_distance([1.5, 2], [1.5, 2]) == 0
    assert euclidean_distance([0, 0], [3, 4]) == 5
    assert euclidean_distance([1, 1, 1], [0, 0, 0]) == pytest.approx(1.7320508, abs=1e-7)
    with pytest.raises(ContractError):
        euclidean_distance([1, 2], [1, 2, 3])


def test_uniform_draw():
    v = uniform_draw(make_rng(7), 0, 1)
    assert 0 <= v < 1
    assert uniform_draw(make_rng(7), 0, 1) == v
    with pytest.raises(ContractError):
        uniform_draw(make_rng(7), 1, 1)


def test_uniform_mean_monte_carlo():
    rng = make_rng(2024)
    draws = [uniform_draw(rng, 0, 1) for _ in range(100_000)]
    assert abs(np.mean(draws) - 0.5) < 0.01


def test_stream_independent_of_other_streams():
    a = stream_rng(5, 3).uniform(size=4)
    _ = stream_rng(5, 2).uniform(size=100)
    np.testing.assert_array_equal(stream_rng(5, 3).uniform(size=4), a)
    assert not np.array_equal(stream_rng(5, 4).uniform(size=4), a)


def test_seed_range():
    make_rng(2**64 - 1)
    with pytest.raises(ContractError):
        make_rng(2**64)
    with pytest.raises(ContractError):
        make_rng(-1)


@given(
    w=arrays(np.float64, (3, 4), elements=finite),
    x=arrays(np.float64, 4, elements=finite),
    y=arrays(np.float64, 4, elements=finite),
    alpha=finite,
    beta=finite,
)
def test_affine_is_linear(w, x, y, alpha, beta):
    zero = np.zeros(3)
    lhs = affine(w, alpha * x + beta * y, zero)
    rhs = alpha * affine(w, x, zero) + beta * affine(w, y, zero)
    scale = np.abs(w).sum(axis=1) * (abs(alpha) * np.abs(x).max() + abs(beta) * np.abs(y).max()) + 1.0
    assert np.all(np.abs(lhs - rhs) <= 1e-12 * scale)


@given(st.floats(-700, 700))
def test_sigmoid_symmetry(x):
    assert abs(sigmoid(np.array([-x]))[0] - (1 - sigmoid(np.array([x]))[0])) <= 1e-12


@given(st.floats(-20, 20), st.floats(1e-3, 5))
def test_sigmoid_strictly_monotone(x, step):
    lo, hi = sigmoid(np.array([x, x + step]))
    assert hi > lo


@given(arrays(np.float64, (3, 5), elements=finite))
def test_distance_symmetry_and_triangle(pts):
    a, b, c = pts
    assert euclidean_distance(a, b) == pytest.approx(euclidean_distance(b, a), abs=1e-12)
    assert euclidean_distance(a, c) <= euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-12 * (
        1 + np.abs(pts).max())


@given(st.integers(0, 2**64 - 1))
def test_rng_reproducible(seed):
    a = make_rng(seed).uniform(size=10_000)
    b = make_rng(seed).uniform(size=10_000)
    assert np.array_equal(a, b)

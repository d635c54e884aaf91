from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from plsim.instances import psi
from plsim.numkit import (
    EvaluationError,
    InputError,
    RandomStream,
    central_difference_gradient,
    draw_bernoulli,
    draw_multinomial,
    relative_error,
    symmetric_eigenvalues,
    symmetric_eigh,
)


def test_stream_is_reproducible_and_counts_draws():
    a, b = RandomStream(42), RandomStream(42)
    assert [a.uniform() for _ in range(5)] == [b.uniform() for _ in range(5)]
    assert a.counter == 5
    assert RandomStream(1).uniform() != RandomStream(2).uniform()


def test_vector_draws_match_scalar_draws():
    a, b = RandomStream(7), RandomStream(7)
    vec = a.uniforms(17)
    assert np.array_equal(vec, [b.uniform() for _ in range(17)])
    assert a.counter == b.counter == 17


@given(st.integers(0, 2**64 - 1))
def test_uniforms_in_unit_interval(seed):
    u = RandomStream(seed).uniforms(64)
    assert np.all((u >= 0) & (u < 1))


def test_fork_is_independent_of_parent_position():
    a = RandomStream(5)
    f1 = a.fork(3).uniform()
    a.uniforms(10)
    assert a.fork(3).uniform() == f1
    assert a.fork(4).uniform() != f1


def test_normals_moments():
    z = RandomStream(0).normals(20001)
    assert z.size == 20001
    assert abs(z.mean()) < 0.03 and abs(z.std() - 1) < 0.03


def test_bernoulli_extremes_and_validation():
    rs = RandomStream(0)
    assert all(draw_bernoulli(rs, 1.0) == 1 for _ in range(50))
    assert all(draw_bernoulli(rs, 0.0) == 0 for _ in range(50))
    with pytest.raises(InputError):
        draw_bernoulli(rs, 1.5)


@given(st.integers(1, 40), st.integers(1, 30), st.integers(0, 1000))
def test_multinomial_sums_to_trials(b, n, seed):
    xi = draw_multinomial(RandomStream(seed), b, n)
    assert xi.shape == (n,) and xi.sum() == b and xi.min() >= 0


def test_multinomial_single_category_and_precondition():
    assert draw_multinomial(RandomStream(0), 4, 1).tolist() == [4]
    with pytest.raises(InputError):
        draw_multinomial(RandomStream(0), 0, 3)


def test_multinomial_two_by_two_probability():
    rs = RandomStream(11)
    hits = sum(draw_multinomial(rs, 2, 2)[0] == 2 for _ in range(100_000))
    assert abs(hits / 100_000 - 0.25) <= 0.01


def test_eigenvalues_small_cases():
    assert np.allclose(symmetric_eigenvalues(np.eye(3)), [1, 1, 1])
    assert np.allclose(symmetric_eigenvalues(np.full((2, 2), 0.5)), [1, 0], atol=1e-14)
    path3 = np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]], dtype=float)
    assert np.allclose(symmetric_eigenvalues(path3), [3, 1, 0], atol=1e-13)


def test_eigh_rejects_asymmetric():
    with pytest.raises(InputError):
        symmetric_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


@given(st.integers(1, 12), st.integers(0, 10_000))
def test_eigh_reconstructs_random_symmetric(n, seed):
    B = RandomStream(seed).normals(n * n).reshape(n, n)
    M = B + B.T
    w, V = symmetric_eigh(M)
    assert np.all(np.diff(w) <= 1e-12)
    assert np.allclose(V @ np.diag(w) @ V.T, M, atol=1e-10 * max(1, np.abs(M).max()))
    assert np.allclose(V.T @ V, np.eye(n), atol=1e-10)
    assert np.allclose(w, np.sort(np.linalg.eigvalsh(M))[::-1], atol=1e-10 * max(1, np.abs(M).max()))


def test_central_difference_examples():
    g = central_difference_gradient(lambda x: 0.5 * float(x @ x), np.array([1.0, 2.0]), 1e-6)
    assert np.allclose(g, [1, 2], atol=1e-8)
    assert np.array_equal(central_difference_gradient(lambda x: 3.0, np.array([0.3, -1.0])), [0.0, 0.0])
    d = central_difference_gradient(lambda x: psi(1.0, x[0]), np.array([0.5]), 1e-6)
    assert abs(d[0] - 0.5) < 1e-8


def test_central_difference_errors():
    with pytest.raises(InputError):
        central_difference_gradient(lambda x: 0.0, np.zeros(2), 0.0)
    with pytest.raises(EvaluationError):
        central_difference_gradient(lambda x: math.inf, np.zeros(2))


def test_relative_error_scale_floor():
    assert relative_error(np.array([1e-3]), np.array([0.0])) == pytest.approx(1e-3)
    assert relative_error(np.array([11.0]), np.array([10.0])) == pytest.approx(0.1)

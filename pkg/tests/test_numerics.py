import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from oracles import naive_dft, q_function_quadrature
from ufofdm.errors import ParameterError
from ufofdm.numerics import Polynomial, dft, idft, is_power_of_two, poly_roots, q_function

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_dft_frozen_values():
    # computed once with the naive oracle
    expected = np.array([10, -0.4142135623730949 - 7.2426406871192848j, -2 + 2j,
                         2.4142135623730954 - 1.2426406871192845j, -2,
                         2.414213562373092 + 1.2426406871192888j, -2 - 2j,
                         -0.4142135623730958 + 7.2426406871192857j])
    np.testing.assert_allclose(dft([1, 2, 3, 4], 8), expected, atol=1e-12)


@pytest.mark.parametrize("size", [1, 2, 4, 16, 64])
def test_dft_matches_naive_sum(size):
    x = np.random.default_rng(size).standard_normal(size) + 1j
    np.testing.assert_allclose(dft(x, size), naive_dft(x, size), atol=1e-10)


def test_dft_batched_rows_independent():
    x = np.random.default_rng(1).standard_normal((3, 5, 8))
    out = dft(x, 8)
    for i in range(3):
        for j in range(5):
            np.testing.assert_allclose(out[i, j], naive_dft(x[i, j], 8), atol=1e-10)


def test_dft_rejects_bad_sizes():
    with pytest.raises(ParameterError):
        dft(np.ones(4), 6)
    with pytest.raises(ParameterError):
        dft(np.ones(9), 8)


@settings(max_examples=50, deadline=None)
@given(hnp.arrays(np.float64, st.integers(1, 32), elements=finite))
def test_idft_inverts_dft(x):
    size = 1 << (x.size - 1).bit_length()
    back = idft(dft(x, size), size)
    np.testing.assert_allclose(back[: x.size], x, atol=1e-9 * (1 + np.abs(x).max()))
    np.testing.assert_allclose(back[x.size:], 0, atol=1e-9 * (1 + np.abs(x).max()))


@settings(max_examples=50, deadline=None)
@given(hnp.arrays(np.float64, 16, elements=finite))
def test_parseval(x):
    X = dft(x, 16)
    assert np.sum(np.abs(X) ** 2) == pytest.approx(16 * np.sum(x ** 2), rel=1e-10, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(hnp.arrays(np.float64, 8, elements=finite), hnp.arrays(np.float64, 8, elements=finite),
       st.floats(-10, 10))
def test_dft_linear(x, y, a):
    np.testing.assert_allclose(dft(a * x + y, 8), a * dft(x, 8) + dft(y, 8), atol=1e-8)


def test_is_power_of_two():
    assert [n for n in range(20) if is_power_of_two(n)] == [1, 2, 4, 8, 16]
    assert not is_power_of_two(8.0)


def test_polynomial_evaluation():
    p = Polynomial([1, -3, 2])  # 1 - 3z + 2z^2
    assert p.degree == 2
    assert p(1.0) == 0
    assert p(2.0) == 3


def test_roots_of_known_polynomial():
    r = np.sort_complex(poly_roots([6, -5, 1]))  # (z-2)(z-3)
    np.testing.assert_allclose(r, [2, 3], atol=1e-12)


def test_roots_with_zero_root_and_complex_pair():
    r = poly_roots([0, 1, 0, 1])  # z (1 + z^2)
    assert np.sort(np.abs(r)) == pytest.approx([0, 1, 1], abs=1e-12)
    assert np.any(np.isclose(r, 1j)) and np.any(np.isclose(r, -1j))


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(np.float64, st.integers(2, 31), elements=st.floats(-5, 5)))
def test_root_residuals_small(p):
    p = p.copy()
    p[-1] = p[-1] if abs(p[-1]) > 0.1 else 1.0
    p[0] = p[0] if abs(p[0]) > 0.1 else 0.5
    r = poly_roots(p)
    assert r.size == p.size - 1
    scale = np.abs(p) @ np.maximum(1, np.abs(r))[None, :] ** np.arange(p.size)[:, None]
    assert np.all(np.abs(Polynomial(p)(r)) <= 1e-8 * scale)


def test_palindromic_roots_come_in_reciprocal_pairs():
    # 2 + 5z + 2z^2 = (2z + 1)(z + 2)
    r = np.sort_complex(poly_roots([2.0, 5.0, 2.0]))
    np.testing.assert_allclose(r, [-2.0, -0.5], atol=1e-12)


@pytest.mark.parametrize("x", [-2.0, 0.0, 0.5, 1.0, 3.0, 6.0])
def test_q_function_matches_quadrature(x):
    assert q_function(x) == pytest.approx(q_function_quadrature(x), rel=1e-9)


def test_q_function_frozen():
    assert q_function(1.0) == pytest.approx(0.15865525393145707, rel=1e-12)
    assert q_function(3.0) == pytest.approx(0.0013498980316300944, rel=1e-12)
    np.testing.assert_allclose(q_function(np.array([0.0])), [0.5])

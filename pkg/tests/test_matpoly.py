import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kroncond.matpoly import (
    BADLY_SCALED_FACTORS,
    DegeneratePolynomialError,
    DimensionMismatchError,
    MatrixPolynomial,
    badly_scaled_poly,
    evaluate,
    evaluate_derivative,
    is_regular,
    norm_profile,
    random_poly,
    reversal,
    scale_to_unit_max,
)


def test_evaluate_scalar(scalar_quad):
    assert evaluate(scalar_quad, 1.0)[0, 0] == 0
    assert evaluate(scalar_quad, 2.0)[0, 0] == 3
    assert evaluate(scalar_quad, 0.0)[0, 0] == -1


def test_evaluate_at_zero_is_constant_term():
    P = random_poly(3, 4, seed=5)
    np.testing.assert_array_equal(evaluate(P, 0), P.coeffs[0])


def test_derivative_examples(scalar_quad):
    assert evaluate_derivative(scalar_quad, 1.0)[0, 0] == 2
    cube = MatrixPolynomial([[[0.0]], [[0.0]], [[0.0]], [[1.0]]])
    assert evaluate_derivative(cube, 2.0)[0, 0] == 12
    const = MatrixPolynomial([np.eye(2)])
    np.testing.assert_array_equal(evaluate_derivative(const, 3.7), np.zeros((2, 2)))


def test_degenerate_rejected_by_analysis_but_constructible():
    Z = MatrixPolynomial(np.zeros((3, 2, 2)))
    assert Z.is_degenerate
    with pytest.raises(DegeneratePolynomialError):
        evaluate(Z, 1.0)
    with pytest.raises(DegeneratePolynomialError):
        scale_to_unit_max(Z)


def test_grade_and_degree():
    P = MatrixPolynomial([np.eye(2), np.eye(2), np.zeros((2, 2))])
    assert P.grade == 2
    assert P.degree() == 1


def test_coefficients_are_read_only():
    P = random_poly(2, 2, seed=0)
    with pytest.raises(ValueError):
        P.coeffs[0, 0, 0] = 1


def test_mismatched_coefficients_rejected():
    with pytest.raises((DimensionMismatchError, ValueError)):
        MatrixPolynomial([np.eye(2), np.eye(3)])


def test_reversal(scalar_quad):
    R = reversal(scalar_quad)
    np.testing.assert_array_equal(R.coeffs[:, 0, 0], [1, 0, -1])
    assert reversal(R) == scalar_quad
    P = random_poly(3, 3, seed=1)
    np.testing.assert_array_equal(reversal(P).coeffs, P.coeffs[::-1])


def test_reversal_identity_at_samples():
    P = random_poly(3, 5, seed=2)
    R = reversal(P)
    rng = np.random.default_rng(0)
    for _ in range(20):
        lam = complex(*rng.standard_normal(2))
        lhs = R(lam)
        rhs = lam ** P.grade * P(1 / lam)
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)


def test_norm_profile_scalar(scalar_quad):
    prof = norm_profile(scalar_quad)
    assert prof.per_coeff == pytest.approx([1, 0, 1])
    assert prof.stacked == pytest.approx(math.sqrt(2))
    assert prof.max_norm == 1
    assert prof.min_edge == 1


def test_norm_profile_identity():
    prof = norm_profile(MatrixPolynomial([np.eye(3)]))
    assert prof.per_coeff == pytest.approx([1])
    assert prof.stacked == pytest.approx(1)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 5), d=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_norm_profile_bounds(n, d, seed):
    prof = norm_profile(random_poly(n, d, seed))
    tol = 1 + 1e-12
    assert prof.max_norm <= prof.stacked * tol
    assert prof.stacked <= math.sqrt(d + 1) * prof.max_norm * tol
    assert prof.min_edge <= prof.max_norm


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 5), d=st.integers(1, 6), seed=st.integers(0, 2**32 - 1),
       lam_re=st.floats(-3, 3), lam_im=st.floats(-3, 3))
def test_horner_matches_power_sum(n, d, seed, lam_re, lam_im):
    P = random_poly(n, d, seed)
    lam = complex(lam_re, lam_im)
    naive = sum(A * lam ** i for i, A in enumerate(P.coeffs))
    scale = sum(abs(lam) ** i * np.linalg.norm(A) for i, A in enumerate(P.coeffs))
    assert np.linalg.norm(P(lam) - naive) <= 1e-13 * scale


def test_scale_to_unit_max():
    P = MatrixPolynomial([[[-10.0]], [[10.0]]])
    Q, g = scale_to_unit_max(P)
    assert g == pytest.approx(10)
    np.testing.assert_allclose(Q.coeffs[:, 0, 0], [-1, 1])
    Q2, g2 = scale_to_unit_max(Q)
    assert g2 == pytest.approx(1)
    B = badly_scaled_poly(4, seed=3)
    assert abs(norm_profile(scale_to_unit_max(B)[0]).max_norm - 1) <= 1e-12


def test_random_poly_deterministic():
    a = random_poly(4, 3, seed=11)
    b = random_poly(4, 3, seed=11)
    np.testing.assert_array_equal(a.coeffs, b.coeffs)
    assert not np.array_equal(a.coeffs, random_poly(4, 3, seed=12).coeffs)
    assert random_poly(30, 3, seed=0).coeffs.shape == (4, 30, 30)


def test_random_poly_stream_order():
    # real block then imaginary block per coefficient, row-major
    rng = np.random.Generator(np.random.Philox(9))
    re = rng.standard_normal((2, 2))
    im = rng.standard_normal((2, 2))
    P = random_poly(2, 1, seed=9)
    np.testing.assert_array_equal(P.coeffs[0], re + 1j * im)


def test_badly_scaled_recipe():
    assert BADLY_SCALED_FACTORS == (1, 1e3, 1, 1e4, 1e4, 1e2, 1)
    B = badly_scaled_poly(10, seed=0)
    assert B.grade == 6 and B.n == 10
    prof = norm_profile(B)
    # A_3 carries the 1e4 factor
    assert 1e3 < prof.per_coeff[3] / prof.per_coeff[0] < 1e5
    assert 1e-6 < prof.min_edge / prof.max_norm < 1e-3


def test_is_regular():
    assert is_regular(random_poly(3, 2, seed=4))
    singular = MatrixPolynomial([np.diag([1.0, 0.0]), np.diag([1.0, 0.0])])
    assert not is_regular(singular)


def test_coeff_cond_invariant_under_scaling():
    from kroncond.conditioning import coeff_cond
    from kroncond.eigsolve import reference_eigentriples

    P = random_poly(3, 3, seed=8)
    Q, _ = scale_to_unit_max(P)
    for t in reference_eigentriples(P)[:5]:
        a, b = coeff_cond(P, t), coeff_cond(Q, t)
        assert abs(a - b) <= 1e-12 * a

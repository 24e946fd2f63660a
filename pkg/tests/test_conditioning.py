import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kroncond.conditioning import (
    ConditionDomainError,
    NonSimpleEigenvalueError,
    NotCompanionError,
    M_norm_floor,
    bound_companion,
    bound_cross,
    bound_general,
    coeff_cond,
    coeff_cond_form,
    companion_constant,
    condition_reports,
    cross_ratios,
    form_vectors,
    kappa,
    norm_cond,
    rho,
    write_condition_csv,
)
from kroncond.eigsolve import reference_eigentriples
from kroncond.kronecker import (
    KroneckerShape,
    assemble,
    companion_presets_for,
    general_M,
    preset,
    random_general_params,
)
from kroncond.matpoly import MatrixPolynomial, badly_scaled_poly, random_poly, scale_to_unit_max

ONE = (1.0, np.array([1.0]), np.array([1.0]))


def test_kappa_examples(scalar_quad):
    lin = MatrixPolynomial([[[-1.0]], [[1.0]]])
    assert kappa(lin, ONE, [1, 1]) == pytest.approx(2)
    assert kappa(scalar_quad, ONE, [1, 0, 1]) == pytest.approx(1)
    assert kappa(scalar_quad, ONE, [math.sqrt(2)] * 3) == pytest.approx(3 * math.sqrt(2) / 2)


def test_micro_oracles(scalar_quad):
    assert abs(coeff_cond(scalar_quad, ONE) - 1) <= 1e-12
    assert abs(norm_cond(scalar_quad, ONE) - 3 * math.sqrt(2) / 2) <= 1e-12
    f = preset(scalar_quad, "frobenius1")
    assert abs(coeff_cond_form(f, scalar_quad, ONE) - 2) <= 1e-12
    z, w = form_vectors(f, 1.0, ONE[1], ONE[2])
    np.testing.assert_array_equal(z, [1, 1])
    np.testing.assert_array_equal(w, [1, 1])
    assert np.linalg.norm(f.assembled(1.0) @ z) == 0


def test_domain_errors(scalar_quad):
    with pytest.raises(ConditionDomainError):
        kappa(scalar_quad, (0.0, np.ones(1), np.ones(1)), [1, 0, 1])
    with pytest.raises(ConditionDomainError):
        kappa(scalar_quad, (np.inf, np.ones(1), np.ones(1)), [1, 0, 1])
    with pytest.raises(ValueError):
        kappa(scalar_quad, ONE, [1, 1])
    with pytest.raises(ValueError):
        kappa(scalar_quad, ONE, [1, -1, 1])
    double = MatrixPolynomial([[[1.0]], [[-2.0]], [[1.0]]])
    with pytest.raises(NonSimpleEigenvalueError):
        kappa(double, ONE, [1, 2, 1])
    with pytest.raises(ConditionDomainError):
        form_vectors(preset(scalar_quad, "frobenius1"), 0, ONE[1], ONE[2], route="G")


@settings(max_examples=20, deadline=None)
@given(n=st.integers(1, 4), d=st.integers(1, 5), seed=st.integers(0, 2**32 - 1),
       gamma=st.floats(1e-3, 1e3))
def test_norm_dominates_and_scaling_invariance(n, d, seed, gamma):
    P = random_poly(n, d, seed)
    Pg = P.scaled(gamma)
    for t in reference_eigentriples(P)[:4]:
        if t.lam == 0:
            continue
        c = coeff_cond(P, t)
        assert norm_cond(P, t) >= c * (1 - 1e-12)
        assert abs(coeff_cond(Pg, t) - c) <= 1e-12 * c


def test_routes_agree_on_unit_circle():
    # put an eigenvalue exactly on |lam| = 1: P(lam) = A (lam - e^{i t}) + lam^2 B with B x = 0
    rng = np.random.default_rng(7)
    n = 3
    x = np.zeros(n, complex)
    x[0] = 1
    lam0 = np.exp(0.7j)
    A1 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    A2 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    A2[:, 0] = 0
    A0 = -lam0 * A1
    P = MatrixPolynomial([A0, A1, A2])
    ref = reference_eigentriples(P)
    t = min(ref, key=lambda t: abs(t.lam - lam0))
    assert abs(abs(t.lam) - 1) < 1e-13
    for name in ("frobenius1", "frobenius2", "L_eps_eta(2,0,0)"):
        f = preset(P, name)
        h = coeff_cond_form(f, P, t, route="H")
        g = coeff_cond_form(f, P, t, route="G")
        assert abs(h - g) <= 1e-8 * h


def test_backend_vectors_give_same_condition():
    from kroncond.eigsolve import eig_with_form

    P = random_poly(3, 4, seed=2)
    f = preset(P, "exp2_Q")
    ref = {round(t.lam.real, 6) + 1j * round(t.lam.imag, 6): t for t in reference_eigentriples(P)}
    for t in eig_with_form(P, f):
        key = round(t.lam.real, 6) + 1j * round(t.lam.imag, 6)
        r = ref[key]
        a, b = coeff_cond_form(f, P, t), coeff_cond_form(f, P, r)
        assert abs(a - b) <= 1e-8 * b


def test_bound_general_scalar(scalar_quad):
    f = preset(scalar_quad, "frobenius1")
    bc, bn = bound_general(f, scalar_quad)
    assert bc >= 2
    assert bn >= 2 / (3 * math.sqrt(2) / 2)


def test_bound_general_monotone_in_M():
    P = random_poly(2, 4, seed=3)
    s = KroneckerShape(2, 1, 0, 2)
    rng = np.random.default_rng(0)
    small = assemble(general_M(P, 2, 1, 0, random_general_params(s, rng, 0.1)), s, P, 1e-10)
    rng = np.random.default_rng(0)
    big = assemble(general_M(P, 2, 1, 0, random_general_params(s, rng, 10.0)), s, P, 1e-10)
    assert max(big.M_norms) > max(small.M_norms)
    assert bound_general(big, P)[0] > bound_general(small, P)[0]


def test_bound_general_infinite_without_edge():
    P = MatrixPolynomial([np.zeros((2, 2)), np.eye(2), np.eye(2)])
    assert bound_general(preset(P, "frobenius1"), P)[0] == math.inf
    assert rho(P) == math.inf


def test_bound_companion_values():
    P = random_poly(2, 6, seed=4)
    Ps = MatrixPolynomial(P.coeffs / np.array([np.linalg.norm(A, 2) for A in P.coeffs])[:, None, None])
    f = preset(Ps, "exp2_C")
    bc, _ = bound_companion(f, Ps)
    assert bc == pytest.approx(16 * 6 ** 3 * (2 * 1) ** 1.5)
    assert companion_constant(f) == pytest.approx(16 * 216 * 2 ** 1.5)
    s = KroneckerShape(1, 2, 3, 2)
    g = assemble(general_M(P, 1, 2, 3, random_general_params(s, np.random.default_rng(1))), s, P, 1e-10)
    with pytest.raises(NotCompanionError):
        bound_companion(g, P)


def test_bound_cross_scaled_bracket():
    P, _ = scale_to_unit_max(badly_scaled_poly(3, 0))
    lo, hi = bound_cross(preset(P, "exp2_F"), preset(P, "frobenius1"), P)
    assert lo == pytest.approx(1 / (16 * 216 * 6 ** 1.5))
    assert hi == pytest.approx(16 * 216 * 12 ** 1.5)
    with pytest.raises(ConditionDomainError):
        bound_cross(preset(P, "L_eps_eta(6,0,0)"), preset(P, "frobenius1"), P)


def test_self_cross_ratio_is_one():
    P = random_poly(3, 4, seed=5)
    f = preset(P, "frobenius1")
    for r in cross_ratios(P, f, f, reference_eigentriples(P)):
        assert r.ratio == pytest.approx(1, rel=1e-14)
        assert r.inside


def test_rho_and_floor():
    P = MatrixPolynomial([np.eye(2), 0.5 * np.eye(2), np.eye(2)])
    assert rho(P) == pytest.approx(1)
    assert M_norm_floor(P, 2, 0) == pytest.approx(1 / 6)
    assert M_norm_floor(P, 0, 0) == pytest.approx(0.5)


def test_reports_respect_bounds():
    P = random_poly(3, 6, seed=6)
    triples = reference_eigentriples(P)
    for name in companion_presets_for(6):
        f = preset(P, name)
        for r in condition_reports(P, f, triples):
            assert r.ratio_coeff <= 1.05 * r.bound_coeff
            assert r.ratio_norm <= 1.05 * r.bound_norm
            assert r.ratio_coeff <= 1.05 * r.companion_bound_coeff
            assert r.ratio_norm <= 1.05 * r.companion_bound_norm


def test_scaled_unit_edges_below_optimality_constant():
    rng = np.random.default_rng(8)
    coeffs = []
    for _ in range(5):
        A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        coeffs.append(A / np.linalg.norm(A, 2))
    P = MatrixPolynomial(coeffs)
    triples = reference_eigentriples(P)
    for name in companion_presets_for(4):
        f = preset(P, name)
        s = f.shape
        c = 16 * 4 ** 3 * ((s.eps + 1) * (s.eta + 1)) ** 1.5
        for r in condition_reports(P, f, triples):
            assert r.ratio_coeff <= c


def test_condition_csv_columns():
    P = random_poly(2, 2, seed=9)
    buf = io.StringIO()
    write_condition_csv(condition_reports(P, preset(P, "frobenius1"), reference_eigentriples(P)), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ("index,re_lambda,im_lambda,coeff_cond_P,norm_cond_P,coeff_cond_form,"
                        "ratio_coeff,ratio_norm,bound_coeff,bound_norm")
    assert len(lines) == 5

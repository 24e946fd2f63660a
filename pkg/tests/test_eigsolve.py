import numpy as np
import pytest

from kroncond import eigsolve
from kroncond.eigsolve import (
    BackendError,
    Eigentriple,
    companion_pencil,
    eig_with_form,
    forward_errors,
    linearize_form,
    reference_eigentriples,
    refine_eigentriple,
    simplicity_margins,
    write_eigentriples_csv,
)
from kroncond.kronecker import companion_presets_for, preset
from kroncond.matpoly import MatrixPolynomial, random_poly


def _sorted_lams(triples):
    return np.array(sorted((t.lam for t in triples), key=lambda z: (round(z.real, 8), z.imag)))


def test_scalar_frobenius1(scalar_quad):
    triples = eig_with_form(scalar_quad, preset(scalar_quad, "frobenius1"))
    lams = sorted(t.lam.real for t in triples)
    assert lams == pytest.approx([-1, 1], abs=1e-15)
    for t in triples:
        assert abs(abs(t.x[0]) - 1) < 1e-15 and abs(abs(t.y[0]) - 1) < 1e-15
        assert t.residual_right < 1e-14 and t.residual_left < 1e-14


def test_linearize_identity_for_pencils():
    P = random_poly(3, 3, seed=0)
    f = preset(P, "frobenius1")
    A, B = linearize_form(f)
    np.testing.assert_array_equal(A, f.assembled.coeffs[0])
    np.testing.assert_array_equal(B, f.assembled.coeffs[1])


def test_linearize_size_for_cubification():
    P = random_poly(3, 6, seed=1)
    A, B = linearize_form(preset(P, "exp2_C"))
    assert A.shape == B.shape == (18, 18)


def test_companion_pencil_eigenvalues():
    P = random_poly(2, 3, seed=2)
    A, B = companion_pencil(P)
    for t in reference_eigentriples(P):
        assert abs(np.linalg.det(A + t.lam * B)) < 1e-8 * np.linalg.norm(A) ** 6


def test_all_presets_agree_degree6():
    P = random_poly(4, 6, seed=3)
    ref = reference_eigentriples(P)
    assert len(ref) == 24
    for name in companion_presets_for(6):
        comp = eig_with_form(P, preset(P, name))
        assert len(comp) == 24, name
        fe = forward_errors(comp, ref)
        assert not fe.unmatched_reference
        assert fe.max_error < 1e-9, name


def test_reference_scalar(scalar_quad):
    ref = reference_eigentriples(scalar_quad)
    assert sorted(t.lam.real for t in ref) == pytest.approx([-1, 1], abs=1e-15)
    assert all(t.converged for t in ref)


def test_refinement_never_increases_residual():
    P = random_poly(5, 3, seed=4)
    c = np.ones(5) / np.sqrt(5)
    for t in eig_with_form(P, preset(P, "exp1_L4")):
        r = refine_eigentriple(P, t, c)
        assert r.residual_right <= t.residual_right


def test_reference_agrees_with_second_route():
    P = random_poly(6, 3, seed=5)
    fe = forward_errors(eig_with_form(P, preset(P, "frobenius2")), reference_eigentriples(P))
    assert fe.max_error < 1e-10


def test_infinite_eigenvalues_counted():
    A = [np.eye(2), np.eye(2), np.diag([1.0, 0.0])]
    P = MatrixPolynomial(A)
    triples, n_inf = eig_with_form(P, preset(P, "frobenius1"), return_infinite=True)
    assert n_inf == 1
    assert len(triples) == 3


def test_forward_errors_examples():
    ref = [1.0, 2.0 + 1j, -3.0]
    fe = forward_errors(ref, ref)
    assert fe.errors == [0, 0, 0]
    fe = forward_errors([1.0, 2.0 + 1j, -3.0 * (1 + 1e-12)], ref)
    assert fe.by_reference()[2] == pytest.approx(1e-12, rel=1e-3)
    fe = forward_errors([1.0], ref)
    assert len(fe.unmatched_reference) == 2
    with pytest.raises(ValueError):
        forward_errors([], ref)


def test_forward_errors_greedy_ties():
    fe = forward_errors([1.0, 1.0], [1.0, 1.0])
    assert fe.pairs == [(0, 0), (1, 1)]


def test_simplicity_margins():
    m = simplicity_margins([1.0, 1.1, 5.0])
    assert m[0] == pytest.approx(0.1)
    assert m[2] == pytest.approx(3.9 / 5)


def test_backend_selection(monkeypatch):
    P = random_poly(2, 2, seed=6)
    monkeypatch.setenv("KRONCOND_BACKEND", "nope")
    with pytest.raises(BackendError):
        eig_with_form(P, preset(P, "frobenius1"))
    calls = []

    def spy(A, B):
        calls.append(A.shape)
        return eigsolve._qz_backend(A, B)

    eigsolve.register_backend("spy", spy)
    monkeypatch.setenv("KRONCOND_BACKEND", "spy")
    assert len(eig_with_form(P, preset(P, "frobenius1"))) == 4
    assert calls == [(4, 4)]


def test_eigentriple_csv_format():
    import io
    t = Eigentriple(1 + 2j, np.ones(1), np.ones(1), 1e-17, 2e-17, 0.5)
    buf = io.StringIO()
    write_eigentriples_csv([t], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "index,re_lambda,im_lambda,residual_right,residual_left,simplicity_margin"
    assert lines[1].startswith("0,1.0000000000000000e+00,2.0000000000000000e+00,")

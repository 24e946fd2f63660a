"""Eigentriples of a matrix polynomial computed through one of its forms.

The pencil backend solves ``det(lam B + A) = 0`` with left and right
eigenvectors.  Eigenvectors of ``P`` are read off the Kronecker structure of
the form's eigenvectors; :func:`reference_eigentriples` refines them with
Newton's method on a bordered system, evaluating residuals in extended
precision.
"""

from __future__ import annotations

import csv
import os
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .kronecker import BlockKroneckerForm, preset
from .matpoly import MatrixPolynomial, norm_profile

__all__ = [
    "Eigentriple",
    "ForwardErrors",
    "EigenRecoveryError",
    "BackendError",
    "register_backend",
    "get_backend",
    "companion_pencil",
    "linearize_form",
    "eig_with_form",
    "reference_eigentriples",
    "refine_eigentriple",
    "forward_errors",
    "residuals",
    "simplicity_margins",
    "sort_by_modulus",
    "write_eigentriples_csv",
]


class EigenRecoveryError(ArithmeticError):
    """A recovered eigenvector vanished (defective or inconsistent pair)."""


class BackendError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Eigentriple:
    lam: complex
    x: np.ndarray
    y: np.ndarray
    residual_right: float
    residual_left: float
    simplicity_margin: float
    converged: bool = True

    @property
    def is_finite(self) -> bool:
        return bool(np.isfinite(self.lam))


# -- pencil backends --------------------------------------------------------

PencilResult = tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
_BACKENDS: dict[str, Callable[[np.ndarray, np.ndarray], PencilResult]] = {}
_REENTRANT: set[str] = set()
_backend_lock = threading.Lock()


def register_backend(name: str, fn: Callable[[np.ndarray, np.ndarray], PencilResult],
                     reentrant: bool = False) -> None:
    """``fn(A, B)`` must return ``(alpha, beta, VL, VR)`` with eigenvalues
    ``alpha/beta`` of ``det(lam B + A) = 0`` (``beta == 0`` for infinite
    ones), right vectors ``(A + lam B) VR = 0`` and left vectors
    ``VL^* (A + lam B) = 0`` stored by column."""
    _BACKENDS[name] = fn
    if reentrant:
        _REENTRANT.add(name)


def _qz_backend(A: np.ndarray, B: np.ndarray) -> PencilResult:
    # (A + lam B) v = 0  <=>  A v = lam (-B) v
    (alpha, beta), vl, vr = scipy.linalg.eig(A, -B, left=True, right=True,
                                             homogeneous_eigvals=True)
    return alpha, beta, vl, vr


register_backend("scipy", _qz_backend)


def get_backend(name: str | None = None):
    name = name or os.environ.get("KRONCOND_BACKEND", "scipy")
    try:
        fn = _BACKENDS[name]
    except KeyError:
        raise BackendError(f"unknown pencil backend {name!r}; available: {sorted(_BACKENDS)}")
    return name, fn


def _solve_pencil(A: np.ndarray, B: np.ndarray, backend: str | None = None) -> PencilResult:
    name, fn = get_backend(backend)
    try:
        if name in _REENTRANT:
            return fn(A, B)
        with _backend_lock:
            return fn(A, B)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise BackendError(f"pencil backend {name!r} failed: {exc}") from exc


# -- linearisation ----------------------------------------------------------

def companion_pencil(Q: MatrixPolynomial) -> tuple[np.ndarray, np.ndarray]:
    """First Frobenius companion pencil ``lam B + A`` of a square polynomial
    of grade ``g >= 1``::

        [lam Q_g + Q_{g-1}  Q_{g-2} ... Q_0]
        [      -I            lam I         ]
        [                     ...    ...   ]
    """
    g = Q.grade
    m = Q.n
    if g < 1:
        raise ValueError("companion pencil needs grade >= 1")
    if g == 1:
        return Q.coeffs[0].copy(), Q.coeffs[1].copy()
    size = g * m
    A = np.zeros((size, size), dtype=complex)
    B = np.zeros((size, size), dtype=complex)
    B[:m, :m] = Q.coeffs[g]
    for j in range(g):
        A[:m, j * m:(j + 1) * m] = Q.coeffs[g - 1 - j]
    for i in range(1, g):
        A[i * m:(i + 1) * m, (i - 1) * m:i * m] = -np.eye(m)
        B[i * m:(i + 1) * m, i * m:(i + 1) * m] = np.eye(m)
    return A, B


def linearize_form(form: BlockKroneckerForm) -> tuple[np.ndarray, np.ndarray]:
    """Pencil ``(A, B)`` with ``det(lam B + A)`` vanishing at the eigenvalues
    of the form.  Pencils pass through unchanged; higher grades go through
    the first companion pencil of the assembled form (size ``ell k n``)."""
    return companion_pencil(form.assembled)


# -- residuals and margins --------------------------------------------------

def _eval_scale(profile_norms, lam: complex) -> float:
    a = abs(lam)
    return float(sum(w * a ** i for i, w in enumerate(profile_norms)))


def residuals(P: MatrixPolynomial, lam: complex, x: np.ndarray, y: np.ndarray,
              norms=None) -> tuple[float, float]:
    """``||P(lam) x|| / (sum |lam|^i ||A_i|| ||x||)`` and the left analogue."""
    norms = norm_profile(P).per_coeff if norms is None else norms
    Pl = P.horner(lam)
    scale = _eval_scale(norms, lam)
    rr = np.linalg.norm(Pl @ x) / (scale * np.linalg.norm(x))
    rl = np.linalg.norm(y.conj() @ Pl) / (scale * np.linalg.norm(y))
    return float(rr), float(rl)


def simplicity_margins(lams) -> np.ndarray:
    """Distance to the nearest other eigenvalue, relative to ``|lam|``."""
    lams = np.asarray(lams, dtype=complex)
    out = np.full(lams.shape, np.inf)
    for i, lam in enumerate(lams):
        others = np.delete(lams, i)
        if others.size:
            dist = np.abs(others - lam).min()
            out[i] = dist / abs(lam) if lam != 0 else (np.inf if dist > 0 else 0.0)
    return out


def sort_by_modulus(triples: list[Eigentriple]) -> list[Eigentriple]:
    return sorted(triples, key=lambda t: (abs(t.lam), np.angle(t.lam)))


# -- eigenvector extraction --------------------------------------------------

def _take(v: np.ndarray, n: int, idx: int) -> np.ndarray:
    return v[idx * n:(idx + 1) * n]


def _unstack(v: np.ndarray, n: int, count: int, mu: complex, small: bool) -> np.ndarray:
    """``v`` starts with ``[mu^(count-1) u; ...; u]``; return ``u`` from the
    dominant copy."""
    if small:
        return _take(v, n, count - 1).copy()
    return _take(v, n, 0) / mu ** (count - 1)


def eig_with_form(P: MatrixPolynomial, form: BlockKroneckerForm, backend: str | None = None,
                  return_infinite: bool = False):
    """Eigentriples of ``P`` computed from the pencil of ``form``.

    Returns the finite triples (and, with ``return_infinite``, also the
    number of infinite eigenvalues reported by the backend).
    """
    A, B = linearize_form(form)
    alpha, beta, VL, VR = _solve_pencil(A, B, backend)
    shape = form.shape
    n, ell, eps, eta = shape.n, shape.ell, shape.eps, shape.eta
    m = shape.size
    u = np.finfo(float).eps
    finite = np.abs(beta) > 10 * u * np.abs(alpha)
    n_inf = int(np.count_nonzero(~finite))
    idx = np.flatnonzero(finite)
    lams = alpha[idx] / beta[idx]
    margins = simplicity_margins(lams)
    norms = norm_profile(P).per_coeff
    triples = []
    for pos, j in enumerate(idx):
        lam = complex(lams[pos])
        small = abs(lam) <= 1.0
        zr, wl = VR[:, j], VL[:, j]
        if ell > 1:
            # Outer companion pencil: right vector [lam^(ell-1) z; ...; z],
            # left vector starts with w.
            z = _unstack(zr, m, ell, lam, small)
            w = wl[:m]
        else:
            z, w = zr, wl
        x = _unstack(z, n, eps + 1, lam ** ell, small)
        y = _unstack(w, n, eta + 1, np.conj(lam) ** ell, small)
        nx, ny = np.linalg.norm(x), np.linalg.norm(y)
        if nx == 0 or ny == 0 or not (np.isfinite(nx) and np.isfinite(ny)):
            raise EigenRecoveryError(f"zero eigenvector recovered for lambda={lam}")
        x, y = x / nx, y / ny
        rr, rl = residuals(P, lam, x, y, norms)
        triples.append(Eigentriple(lam, x, y, rr, rl, float(margins[pos])))
    if return_infinite:
        return triples, n_inf
    return triples


# -- Newton refinement ------------------------------------------------------

def _horner_ext(coeffs_ext: np.ndarray, lam, v) -> tuple[np.ndarray, np.ndarray]:
    """``P(lam) v`` and ``P'(lam) v`` in extended precision."""
    d = coeffs_ext.shape[0] - 1
    pv = coeffs_ext[d] @ v
    dv = np.zeros_like(pv)
    for i in range(d - 1, -1, -1):
        dv = dv * lam + pv
        pv = pv * lam + coeffs_ext[i] @ v
    return pv, dv


def _newton(coeffs: np.ndarray, lam: complex, x: np.ndarray, c: np.ndarray,
            tol: float, maxit: int):
    """Newton on ``[P(lam) x; c^* x - 1] = 0``.  Returns ``(lam, x, converged)``."""
    ext = coeffs.astype(np.clongdouble)
    cx = np.vdot(c, x)
    if cx == 0:
        c = x / np.linalg.norm(x)
        cx = np.vdot(c, x)
    xe = (x / cx).astype(np.clongdouble)
    le = np.clongdouble(lam)
    ce = c.conj().astype(np.clongdouble)
    n = x.size
    converged = False
    for _ in range(maxit):
        pv, dv = _horner_ext(ext, le, xe)
        F = np.concatenate([pv, [ce @ xe - 1]])
        lam_d = complex(le)
        J = np.zeros((n + 1, n + 1), dtype=complex)
        d = coeffs.shape[0] - 1
        Pl = coeffs[d].copy()
        for i in range(d - 1, -1, -1):
            Pl = Pl * lam_d + coeffs[i]
        J[:n, :n] = Pl
        J[:n, n] = dv.astype(complex)
        J[n, :n] = c.conj()
        try:
            step = np.linalg.solve(J, -F.astype(complex))
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        xe = xe + step[:n].astype(np.clongdouble)
        le = le + np.clongdouble(step[n])
        scale = abs(complex(le)) or 1.0
        if abs(step[n]) / scale < tol:
            converged = True
            break
    return complex(le), xe.astype(complex), converged


def refine_eigentriple(P: MatrixPolynomial, t: Eigentriple, c: np.ndarray,
                       tol: float = 1e-14, maxit: int = 20, norms=None) -> Eigentriple:
    """Refine ``(lam, x)`` on ``P`` and ``(conj(lam), y)`` on ``P^*``.

    The returned triple never has a larger right residual than the input:
    if refinement does not help, the input is kept (and flagged if Newton
    failed to converge).
    """
    norms = norm_profile(P).per_coeff if norms is None else norms
    lam, x, ok_r = _newton(P.coeffs, t.lam, t.x, c, tol, maxit)
    Ph = np.conj(np.transpose(P.coeffs, (0, 2, 1)))
    lam_l, y, ok_l = _newton(Ph, np.conj(lam), t.y, c, tol, maxit)
    x, y = x / np.linalg.norm(x), y / np.linalg.norm(y)
    rr, rl = residuals(P, lam, x, y, norms)
    if not (np.isfinite(rr) and rr <= t.residual_right):
        return Eigentriple(t.lam, t.x, t.y, t.residual_right, t.residual_left,
                          t.simplicity_margin, converged=ok_r and ok_l)
    if not rl <= t.residual_left:
        y, rl = t.y, t.residual_left
    return Eigentriple(lam, x, y, rr, rl, t.simplicity_margin, converged=ok_r and ok_l)


def reference_eigentriples(P: MatrixPolynomial, seed: int = 0, tol: float = 1e-14,
                           maxit: int = 20, backend: str | None = None) -> list[Eigentriple]:
    """Newton-refined eigentriples, started from the first Frobenius form.

    Triples that fail to converge are kept with ``converged=False``.
    """
    start = eig_with_form(P, preset(P, "frobenius1"), backend=backend)
    rng = np.random.Generator(np.random.Philox(seed))
    n = P.n
    c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    c /= np.linalg.norm(c)
    norms = norm_profile(P).per_coeff
    refined = [refine_eigentriple(P, t, c, tol, maxit, norms) for t in start]
    margins = simplicity_margins([t.lam for t in refined])
    return [Eigentriple(t.lam, t.x, t.y, t.residual_right, t.residual_left, float(mg),
                        t.converged) for t, mg in zip(refined, margins)]


# -- forward errors ---------------------------------------------------------

@dataclass
class ForwardErrors:
    """Relative errors of matched pairs ``(reference index, computed index)``."""

    pairs: list[tuple[int, int]] = field(default_factory=list)
    errors: list[float] = field(default_factory=list)
    unmatched_reference: list[int] = field(default_factory=list)
    unmatched_computed: list[int] = field(default_factory=list)

    @property
    def max_error(self) -> float:
        return max(self.errors) if self.errors else 0.0

    def by_reference(self) -> dict[int, float]:
        return {i: e for (i, _), e in zip(self.pairs, self.errors)}


def _lam(v) -> complex:
    return complex(v.lam) if isinstance(v, Eigentriple) else complex(v)


def forward_errors(computed, reference) -> ForwardErrors:
    """Greedy nearest-neighbour matching on ``|ref_i - comp_j| / |ref_i|``.

    Candidate pairs are taken in order of increasing distance (ties by
    reference index, then computed index); each eigenvalue is used once.
    """
    comp = np.array([_lam(v) for v in computed], dtype=complex)
    ref = np.array([_lam(v) for v in reference], dtype=complex)
    if comp.size == 0 or ref.size == 0:
        raise ValueError("forward_errors needs two nonempty lists")
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = np.where(ref == 0, 1.0, np.abs(ref))
        dist = np.abs(ref[:, None] - comp[None, :]) / denom[:, None]
    order = sorted(((dist[i, j], i, j) for i in range(ref.size) for j in range(comp.size)))
    used_r, used_c = set(), set()
    out = ForwardErrors()
    for dv, i, j in order:
        if i in used_r or j in used_c:
            continue
        used_r.add(i)
        used_c.add(j)
        out.pairs.append((i, j))
        out.errors.append(float(dv))
    ranked = sorted(zip(out.pairs, out.errors))
    out.pairs = [p for p, _ in ranked]
    out.errors = [e for _, e in ranked]
    out.unmatched_reference = [i for i in range(ref.size) if i not in used_r]
    out.unmatched_computed = [j for j in range(comp.size) if j not in used_c]
    return out


def write_eigentriples_csv(triples: list[Eigentriple], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index", "re_lambda", "im_lambda", "residual_right", "residual_left",
                "simplicity_margin"])
    for i, t in enumerate(triples):
        w.writerow([i, f"{t.lam.real:.16e}", f"{t.lam.imag:.16e}", f"{t.residual_right:.16e}",
                    f"{t.residual_left:.16e}", f"{t.simplicity_margin:.16e}"])

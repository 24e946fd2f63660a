"""Eigenvalue condition numbers of a polynomial and of its Kronecker forms,
and the a-priori bounds on their ratios."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .kronecker import BlockKroneckerForm, G_block, H_block, is_companion
from .matpoly import MatrixPolynomial, norm_profile

__all__ = [
    "ConditionDomainError",
    "NonSimpleEigenvalueError",
    "NotCompanionError",
    "ConditionReport",
    "CrossRatio",
    "kappa",
    "coeff_cond",
    "norm_cond",
    "form_vectors",
    "coeff_cond_form",
    "bound_general",
    "bound_companion",
    "bound_cross",
    "companion_constant",
    "rho",
    "M_norm_floor",
    "condition_reports",
    "cross_ratios",
    "write_condition_csv",
    "write_cross_csv",
    "SIMPLICITY_THRESHOLD",
]

# Eigenvalues closer than this (relative) to another one are not treated as simple.
SIMPLICITY_THRESHOLD = 1e-8


class ConditionDomainError(ValueError):
    """Condition numbers are defined for finite nonzero eigenvalues only."""


class NonSimpleEigenvalueError(ArithmeticError):
    """``y^* P'(lam) x`` vanished: the eigenvalue is not simple."""


class NotCompanionError(ValueError):
    pass


def _unpack(triple):
    if isinstance(triple, tuple):
        lam, x, y = triple
    else:
        lam, x, y = triple.lam, triple.x, triple.y
    return complex(lam), np.asarray(x, dtype=complex), np.asarray(y, dtype=complex)


def _check_lambda(lam: complex) -> None:
    if not np.isfinite(lam):
        raise ConditionDomainError("infinite eigenvalue")
    if lam == 0:
        raise ConditionDomainError("zero eigenvalue")


def _kappa_core(weights, lam, xnorm, ynorm, ypx) -> float:
    if abs(ypx) < 1e-300:
        raise NonSimpleEigenvalueError(f"|y^* P'(lam) x| = {abs(ypx):.3e} at lam={lam}")
    a = abs(lam)
    num = sum(w * a ** i for i, w in enumerate(weights))
    return float(num * xnorm * ynorm / (a * abs(ypx)))


def kappa(P: MatrixPolynomial, triple, weights) -> float:
    """``(sum |lam|^i w_i) ||x|| ||y|| / (|lam| |y^* P'(lam) x|)``."""
    lam, x, y = _unpack(triple)
    _check_lambda(lam)
    weights = list(weights)
    if len(weights) != P.grade + 1 or min(weights) < 0:
        raise ValueError(f"need {P.grade + 1} nonnegative weights")
    ypx = np.vdot(y, P.horner_derivative(lam) @ x)
    return _kappa_core(weights, lam, np.linalg.norm(x), np.linalg.norm(y), ypx)


def coeff_cond(P: MatrixPolynomial, triple, profile=None) -> float:
    profile = profile or norm_profile(P)
    return kappa(P, triple, profile.per_coeff)


def norm_cond(P: MatrixPolynomial, triple, profile=None) -> float:
    profile = profile or norm_profile(P)
    return kappa(P, triple, [profile.stacked] * (P.grade + 1))


def form_vectors(form: BlockKroneckerForm, lam: complex, x: np.ndarray, y: np.ndarray,
                 route: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """Right/left eigenvectors of the form built from those of ``P``.

    ``route='H'`` uses ``H(lam; eps, eta, M) x`` and
    ``H(conj lam; eta, eps, M^*) y``; ``'G'`` the ``G`` analogues (nonzero
    ``lam`` only); ``'auto'`` picks ``H`` for ``|lam| <= 1``.
    """
    s = form.shape
    if route == "auto":
        route = "H" if abs(lam) <= 1 else "G"
    if route not in ("H", "G"):
        raise ValueError(f"unknown route {route!r}")
    if route == "G" and lam == 0:
        raise ConditionDomainError("the G formulas need a nonzero eigenvalue")
    build = H_block if route == "H" else G_block
    Mh = form.M.conj_transpose()
    z = build(lam, s.eps, s.eta, form.M, s.ell) @ x
    w = build(np.conj(lam), s.eta, s.eps, Mh, s.ell) @ y
    return z, w


def coeff_cond_form(form: BlockKroneckerForm, P: MatrixPolynomial, triple,
                    route: str = "auto", z=None, w=None) -> float:
    """Coefficientwise condition number of ``lam`` as an eigenvalue of the
    form, with its own coefficient norms.  ``z``/``w`` default to the
    formula vectors rebuilt from ``(x, y)``."""
    lam, x, y = _unpack(triple)
    _check_lambda(lam)
    if z is None or w is None:
        z, w = form_vectors(form, lam, x, y, route)
    wlz = np.vdot(w, form.assembled.horner_derivative(lam) @ z)
    return _kappa_core(form.coeff_norms, lam, np.linalg.norm(z), np.linalg.norm(w), wlz)


# -- bounds -----------------------------------------------------------------

def bound_general(form: BlockKroneckerForm, P: MatrixPolynomial, profile=None) -> tuple[float, float]:
    """Upper bounds on ``coeff_cond_L / coeff_cond_P`` and
    ``coeff_cond_L / norm_cond_P`` valid for any Kronecker l-ification."""
    profile = profile or norm_profile(P)
    s = form.shape
    mn = form.M_norms
    sq = sum(v * v for v in mn)
    common = (2 * max(1.0, max(mn)) * (s.ell + 1) * math.sqrt((s.eps + 1) * (s.eta + 1))
              * math.sqrt(1 + s.eps ** 2 * (s.ell + 1) * sq)
              * math.sqrt(1 + s.eta ** 2 * (s.ell + 1) * sq))
    coeff = common / profile.min_edge if profile.min_edge > 0 else math.inf
    norm = common / profile.stacked if profile.stacked > 0 else math.inf
    return coeff, norm


def companion_constant(form: BlockKroneckerForm) -> float:
    """``16 d^3 (eps+1)^(3/2) (eta+1)^(3/2)``."""
    s = form.shape
    return 16.0 * s.degree ** 3 * ((s.eps + 1) * (s.eta + 1)) ** 1.5


def _require_companion(form: BlockKroneckerForm, P: MatrixPolynomial) -> None:
    if not is_companion(form, P).is_companion:
        raise NotCompanionError(f"{form!r} is not a companion form; use bound_general")


def bound_companion(form: BlockKroneckerForm, P: MatrixPolynomial, profile=None,
                    check: bool = True) -> tuple[float, float]:
    """Coefficientwise and normwise ratio bounds for companion forms."""
    if check:
        _require_companion(form, P)
    profile = profile or norm_profile(P)
    top = companion_constant(form) * max(1.0, profile.max_norm ** 3)
    coeff = top / profile.min_edge if profile.min_edge > 0 else math.inf
    return coeff, top / profile.max_norm


def bound_cross(formR: BlockKroneckerForm, formL: BlockKroneckerForm, P: MatrixPolynomial,
                profile=None, check: bool = True) -> tuple[float, float]:
    """Bracket for ``coeff_cond_R / coeff_cond_L`` between two companion forms.

    Both forms need ``k >= 2``: the bracket relies on an identity block in the
    edge coefficients, which a ``k = 1`` form (``P`` itself) does not have.
    """
    for f in (formR, formL):
        if f.shape.k < 2:
            raise ConditionDomainError(f"{f!r} has k=1; the cross-form bracket needs k >= 2")
    if check:
        _require_companion(formR, P)
        _require_companion(formL, P)
    profile = profile or norm_profile(P)
    mm = max(1.0, profile.max_norm ** 3)
    return 1.0 / (companion_constant(formL) * mm), companion_constant(formR) * mm


def rho(P: MatrixPolynomial, profile=None) -> float:
    """``max_i ||A_i||^3 / min(||A_0||, ||A_d||)``."""
    profile = profile or norm_profile(P)
    if profile.min_edge == 0:
        return math.inf
    return profile.max_norm ** 3 / profile.min_edge


def M_norm_floor(P: MatrixPolynomial, eps: int, eta: int, profile=None) -> float:
    """Lower bound on ``max_i ||M_i||_2`` for any body of shape ``(eps, eta)``."""
    profile = profile or norm_profile(P)
    return profile.max_norm / (2 * max(eps + 1, eta + 1))


# -- reports ----------------------------------------------------------------

@dataclass(frozen=True)
class ConditionReport:
    index: int
    lam: complex
    form: str
    coeff_cond_P: float
    norm_cond_P: float
    coeff_cond_form: float
    ratio_coeff: float
    ratio_norm: float
    bound_coeff: float
    bound_norm: float
    companion_bound_coeff: float | None
    companion_bound_norm: float | None
    rho: float


@dataclass(frozen=True)
class CrossRatio:
    index: int
    lam: complex
    form_R: str
    form_L: str
    ratio: float
    lower: float
    upper: float

    @property
    def inside(self) -> bool:
        return self.lower <= self.ratio <= self.upper


def _usable(t, threshold: float) -> bool:
    lam = complex(t.lam)
    return (np.isfinite(lam) and lam != 0 and getattr(t, "converged", True)
            and getattr(t, "simplicity_margin", math.inf) >= threshold)


def condition_reports(P: MatrixPolynomial, form: BlockKroneckerForm, triples,
                      threshold: float = SIMPLICITY_THRESHOLD) -> list[ConditionReport]:
    """One report per finite, nonzero, simple eigentriple (in input order)."""
    profile = norm_profile(P)
    bc, bn = bound_general(form, P, profile)
    comp = is_companion(form, P).is_companion
    cbc, cbn = bound_companion(form, P, profile, check=False) if comp else (None, None)
    r = rho(P, profile)
    out = []
    for i, t in enumerate(triples):
        if not _usable(t, threshold):
            continue
        cp = coeff_cond(P, t, profile)
        npn = norm_cond(P, t, profile)
        cf = coeff_cond_form(form, P, t)
        out.append(ConditionReport(i, complex(t.lam), form.name, cp, npn, cf, cf / cp, cf / npn,
                                   bc, bn, cbc, cbn, r))
    return out


def cross_ratios(P: MatrixPolynomial, formR: BlockKroneckerForm, formL: BlockKroneckerForm,
                 triples, threshold: float = SIMPLICITY_THRESHOLD) -> list[CrossRatio]:
    lo, hi = bound_cross(formR, formL, P)
    out = []
    for i, t in enumerate(triples):
        if not _usable(t, threshold):
            continue
        r = coeff_cond_form(formR, P, t) / coeff_cond_form(formL, P, t)
        out.append(CrossRatio(i, complex(t.lam), formR.name, formL.name, r, lo, hi))
    return out


def _f(v) -> str:
    return "" if v is None else f"{v:.16e}"


def write_condition_csv(reports: list[ConditionReport], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index", "re_lambda", "im_lambda", "coeff_cond_P", "norm_cond_P",
                "coeff_cond_form", "ratio_coeff", "ratio_norm", "bound_coeff", "bound_norm"])
    for r in reports:
        w.writerow([r.index, _f(r.lam.real), _f(r.lam.imag), _f(r.coeff_cond_P),
                    _f(r.norm_cond_P), _f(r.coeff_cond_form), _f(r.ratio_coeff),
                    _f(r.ratio_norm), _f(r.bound_coeff), _f(r.bound_norm)])


def write_cross_csv(rows: list[CrossRatio], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index", "re_lambda", "im_lambda", "form_R", "form_L", "ratio", "lower", "upper"])
    for r in rows:
        w.writerow([r.index, _f(r.lam.real), _f(r.lam.imag), r.form_R, r.form_L, _f(r.ratio),
                    _f(r.lower), _f(r.upper)])

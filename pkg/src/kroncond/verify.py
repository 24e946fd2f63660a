"""Randomized suites checking the factorization identities, eigenvector
formulas, structured-block norm bounds and condition-ratio bounds."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .conditioning import (
    SIMPLICITY_THRESHOLD,
    M_norm_floor,
    bound_companion,
    bound_cross,
    bound_general,
    coeff_cond,
    coeff_cond_form,
    norm_cond,
)
from .eigsolve import reference_eigentriples
from .kronecker import (
    BlockKroneckerForm,
    G_block,
    H_block,
    KroneckerShape,
    R_block,
    S_block,
    assemble,
    companion_presets_for,
    general_M,
    is_companion,
    lambda_block,
    preset,
    random_general_params,
    standard_M,
)
from .matpoly import (
    MatrixPolynomial,
    badly_scaled_poly,
    norm_profile,
    scale_to_unit_max,
)

__all__ = [
    "SuiteConfig",
    "CheckStats",
    "SuiteReport",
    "trial_rng",
    "draw_case",
    "check_factorizations",
    "check_eigvec_formulas",
    "check_lemma_norms",
    "check_bounds",
    "run_all",
    "SUITES",
    "write_report_text",
    "write_report_csv",
]


@dataclass(frozen=True)
class SuiteConfig:
    seed: int = 0
    trials: int = 200
    n_range: tuple[int, int] = (1, 6)
    d_range: tuple[int, int] = (1, 8)
    ell_values: tuple[int, ...] = (1, 2, 3, 4)
    lam_samples: int = 20
    fact_tol: float = 1e-12
    eigvec_tol: float = 1e-10
    deriv_rtol: float = 1e-8
    slack: float = 1.05
    k_max: int = 8
    general_scale: float = 1.0
    only_trials: tuple[int, ...] | None = None

    def __post_init__(self):
        lo, hi = self.n_range
        if not 1 <= lo <= hi:
            raise ValueError(f"empty n range {self.n_range}")
        lo, hi = self.d_range
        if not 1 <= lo <= hi:
            raise ValueError(f"empty d range {self.d_range}")
        if not self.ell_values or min(self.ell_values) < 1:
            raise ValueError("ell_values must be nonempty positive integers")
        if not any(lo <= e * k <= hi for e in self.ell_values for k in range(1, hi + 1)):
            raise ValueError("no degree in d_range is divisible by any ell")
        if self.trials < 0 or self.lam_samples < 1:
            raise ValueError("trials must be >= 0 and lam_samples >= 1")

    def trial_ids(self) -> list[int]:
        if self.only_trials is not None:
            return sorted(set(self.only_trials))
        return list(range(self.trials))


@dataclass
class CheckStats:
    passed: int = 0
    failed: int = 0
    # largest value/limit seen; <= 1 means every instance passed
    worst: float = 0.0

    @property
    def total(self) -> int:
        return self.passed + self.failed


@dataclass
class SuiteReport:
    seed: int
    checks: dict[str, CheckStats] = field(default_factory=dict)
    offending: list[tuple[int, int, str, str]] = field(default_factory=list)
    skipped: int = 0

    def record(self, check: str, trial: int, value: float, limit: float, detail: str = "") -> bool:
        st = self.checks.setdefault(check, CheckStats())
        util = value / limit if limit > 0 else (0.0 if value == 0 else math.inf)
        if not np.isfinite(value):
            util = math.inf
        st.worst = max(st.worst, util)
        ok = util <= 1.0
        if ok:
            st.passed += 1
        else:
            st.failed += 1
            self.offending.append((self.seed, trial, check,
                                   f"{detail} value={value:.3e} limit={limit:.3e}".strip()))
        return ok

    @property
    def passed(self) -> int:
        return sum(s.passed for s in self.checks.values())

    @property
    def failed(self) -> int:
        return sum(s.failed for s in self.checks.values())

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def merge(self, other: SuiteReport) -> SuiteReport:
        for name, st in other.checks.items():
            mine = self.checks.setdefault(name, CheckStats())
            mine.passed += st.passed
            mine.failed += st.failed
            mine.worst = max(mine.worst, st.worst)
        self.offending.extend(other.offending)
        self.offending.sort(key=lambda r: (r[0], r[1], r[2]))
        self.skipped += other.skipped
        return self


# -- random draws -----------------------------------------------------------

def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream per trial, so any failure replays in isolation."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


def _cgauss(rng: np.random.Generator, *shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _draw_poly(rng: np.random.Generator, n: int, d: int) -> MatrixPolynomial:
    return MatrixPolynomial(_cgauss(rng, d + 1, n, n))


def draw_case(config: SuiteConfig, trial: int) -> tuple[MatrixPolynomial, BlockKroneckerForm, str]:
    """Random ``(P, form)`` for one trial: shape, body kind and coefficients
    all come from the trial's own stream."""
    rng = trial_rng(config.seed, trial)
    dlo, dhi = config.d_range
    choices = [(e, k) for e in config.ell_values for k in range(1, dhi // e + 1)
               if dlo <= e * k <= dhi]
    ell, k = choices[rng.integers(len(choices))]
    n = int(rng.integers(config.n_range[0], config.n_range[1] + 1))
    eps = int(rng.integers(0, k))
    eta = k - 1 - eps
    P = _draw_poly(rng, n, ell * k)
    shape = KroneckerShape(ell, eps, eta, n)
    kind = "general" if rng.random() < 0.5 else "standard"
    if kind == "general":
        params = random_general_params(shape, rng, config.general_scale)
        M = general_M(P, ell, eps, eta, params)
        tol = 1e-10
    else:
        M = standard_M(P, ell, eps, eta)
        tol = 0.0
    form = assemble(M, shape, target=P, tol=tol, name=f"{kind}({ell},{eps},{eta})")
    return P, form, kind


def _sample_lambdas(rng: np.random.Generator, count: int) -> list[complex]:
    """Half inside the closed unit disk, half outside (moduli up to 3)."""
    out = []
    for i in range(count):
        r = rng.random() if i % 2 == 0 else 1.0 + 2.0 * rng.random()
        out.append(complex(r * np.exp(2j * np.pi * rng.random())))
    return out


# -- checks -----------------------------------------------------------------

def _fact_trial(config: SuiteConfig, trial: int, report: SuiteReport) -> None:
    P, form, kind = draw_case(config, trial)
    s = form.shape
    n = s.n
    rng = trial_rng(config.seed, trial)
    rng.bit_generator.advance(1 << 20)
    MT = form.M.transpose()
    for lam in _sample_lambdas(rng, config.lam_samples):
        L = form.assembled(lam)
        Pl = P(lam)
        nL = np.linalg.norm(L, 2)
        nP = np.linalg.norm(Pl, 2)
        er = np.zeros((s.k * n, n), complex)
        er[s.eta * n:(s.eta + 1) * n] = Pl
        e0 = np.zeros((s.k * n, n), complex)
        e0[:n] = Pl
        el = np.zeros((n, s.k * n), complex)
        el[:, s.eps * n:(s.eps + 1) * n] = Pl
        el0 = np.zeros((n, s.k * n), complex)
        el0[:, :n] = Pl
        cases = (
            ("fact_right_H", H_block(lam, s.eps, s.eta, form.M, s.ell), er, True),
            ("fact_right_G", G_block(lam, s.eps, s.eta, form.M, s.ell), e0, True),
            ("fact_left_H", H_block(lam, s.eta, s.eps, MT, s.ell).T, el, False),
            ("fact_left_G", G_block(lam, s.eta, s.eps, MT, s.ell).T, el0, False),
        )
        for name, F, rhs, right in cases:
            res = np.linalg.norm((L @ F if right else F @ L) - rhs, 2)
            limit = config.fact_tol * (nL * np.linalg.norm(F, 2) + nP)
            report.record(name, trial, res, limit, f"{kind} lam={lam:.3g}")


def check_factorizations(config: SuiteConfig) -> SuiteReport:
    """All four one-sided factorizations at sampled points inside and outside
    the unit disk."""
    report = SuiteReport(config.seed)
    for t in config.trial_ids():
        _fact_trial(config, t, report)
    return report


def _usable(t) -> bool:
    return (t.converged and np.isfinite(t.lam) and t.lam != 0
            and t.simplicity_margin >= SIMPLICITY_THRESHOLD)


def _eigvec_trial(config: SuiteConfig, trial: int, report: SuiteReport) -> None:
    P, form, kind = draw_case(config, trial)
    s = form.shape
    d = s.degree
    Mh = form.M.conj_transpose()
    triples = reference_eigentriples(P, seed=trial)
    for idx, t in enumerate(triples):
        if not (t.converged and np.isfinite(t.lam)):
            report.skipped += 1
            continue
        lam = complex(t.lam)
        La = form.assembled(lam)
        # coefficient scale: ||L(lam)|| itself vanishes at an eigenvalue when k n = 1
        nL = sum(abs(lam) ** i * v for i, v in enumerate(form.coeff_norms))
        dL = form.assembled.horner_derivative(lam)
        ypx = abs(np.vdot(t.y, P.horner_derivative(lam) @ t.x))
        routes = ["H"] if lam == 0 else ["H", "G"]
        for route in routes:
            build = H_block if route == "H" else G_block
            z = build(lam, s.eps, s.eta, form.M, s.ell) @ t.x
            w = build(np.conj(lam), s.eta, s.eps, Mh, s.ell) @ t.y
            tag = f"{kind} #{idx} lam={lam:.3g}"
            report.record(f"eigvec_right_{route}", trial, np.linalg.norm(La @ z),
                          config.eigvec_tol * nL * np.linalg.norm(z), tag)
            report.record(f"eigvec_left_{route}", trial, np.linalg.norm(w.conj() @ La),
                          config.eigvec_tol * nL * np.linalg.norm(w), tag)
            if not _usable(t):
                continue
            wlz = abs(np.vdot(w, dL @ z))
            expect = ypx if route == "H" else abs(lam) ** (d - s.ell) * ypx
            report.record(f"deriv_identity_{route}", trial, abs(wlz - expect),
                          config.deriv_rtol * expect, tag)


def check_eigvec_formulas(config: SuiteConfig) -> SuiteReport:
    """Formula-built eigenvectors of the form annihilate it, and the derivative
    identities linking ``w^* L' z`` to ``y^* P' x`` hold."""
    report = SuiteReport(config.seed)
    for t in config.trial_ids():
        _eigvec_trial(config, t, report)
    return report


def _lemma_trial(config: SuiteConfig, trial: int, report: SuiteReport) -> None:
    rng = trial_rng(config.seed, trial)
    k = int(rng.integers(1, config.k_max + 1))
    ell = int(rng.integers(1, min(3, max(config.ell_values)) + 1))
    # equality cases (lam = 1) need a hair of room for rounding
    tight = 1.0 + 1e-12
    for lam in [1.0 + 0j] + _sample_lambdas(rng, config.lam_samples):
        a = abs(lam)
        big = a > 1
        tag = f"k={k} ell={ell} lam={lam:.3g}"
        lam_norm = np.linalg.norm(lambda_block(k, ell, 1, lam), 2)
        report.record("lemma_Lambda", trial, lam_norm * (a ** (-k * ell) if big else 1.0),
                      tight * math.sqrt(k + 1), tag)
        sc = a ** (-(k - 1) * ell) if big else 1.0
        report.record("lemma_R", trial, np.linalg.norm(R_block(k, ell, 1, lam), 2) * sc,
                      tight * k, tag)
        report.record("lemma_S", trial, np.linalg.norm(S_block(k, ell, 1, lam), 2) * sc,
                      tight * k, tag)


def check_lemma_norms(config: SuiteConfig) -> SuiteReport:
    """Norm bounds on the structured blocks ``Lambda_k``, ``R_k``, ``S_k``."""
    report = SuiteReport(config.seed)
    for t in config.trial_ids():
        _lemma_trial(config, t, report)
    return report


def _bound_poly(config: SuiteConfig, trial: int) -> tuple[MatrixPolynomial, str]:
    """Mostly random Gaussian polynomials; every fourth trial is the badly
    scaled degree-6 family, alternating unscaled and scaled."""
    if trial % 4 == 3:
        rng = trial_rng(config.seed, trial)
        n = int(rng.integers(config.n_range[0], config.n_range[1] + 1))
        P = badly_scaled_poly(n, config.seed * 100003 + trial)
        if trial % 8 == 7:
            return scale_to_unit_max(P)[0], "badly_scaled/scaled"
        return P, "badly_scaled"
    P, _, _ = draw_case(config, trial)
    return P, "random"


def _bounds_trial(config: SuiteConfig, trial: int, report: SuiteReport) -> None:
    P, label = _bound_poly(config, trial)
    d = P.grade
    prof = norm_profile(P)
    rng = trial_rng(config.seed, trial)
    rng.bit_generator.advance(1 << 21)
    forms = [preset(P, name) for name in companion_presets_for(d)]
    companions = [f for f in forms if is_companion(f, P).is_companion]
    # one non-companion body per trial exercises the general bound
    ells = [e for e in range(1, d + 1) if d % e == 0]
    ell = ells[rng.integers(len(ells))]
    k = d // ell
    eps = int(rng.integers(0, k))
    shape = KroneckerShape(ell, eps, k - 1 - eps, P.n)
    Mg = general_M(P, ell, eps, k - 1 - eps, random_general_params(shape, rng, config.general_scale))
    forms.append(assemble(Mg, shape, target=P, tol=1e-10, name=f"general({ell},{eps},{k - 1 - eps})"))

    for f in forms:
        s = f.shape
        report.record("M_norm_floor", trial, M_norm_floor(P, s.eps, s.eta, prof),
                      config.slack * max(f.M_norms), f"{label} {f.name}")

    triples = [t for t in reference_eigentriples(P, seed=trial) if _usable(t)]
    if not triples:
        report.skipped += 1
        return
    cp = [coeff_cond(P, t, prof) for t in triples]
    npn = [norm_cond(P, t, prof) for t in triples]
    cf: dict[int, list[float]] = {}
    for fi, f in enumerate(forms):
        bc, bn = bound_general(f, P, prof)
        comp = f in companions
        cbc, cbn = bound_companion(f, P, prof, check=False) if comp else (None, None)
        vals = [coeff_cond_form(f, P, t) for t in triples]
        cf[fi] = vals
        for i, v in enumerate(vals):
            tag = f"{label} {f.name} lam={complex(triples[i].lam):.3g}"
            report.record("ratio_coeff_general", trial, v / cp[i], config.slack * bc, tag)
            report.record("ratio_norm_general", trial, v / npn[i], config.slack * bn, tag)
            if comp:
                report.record("ratio_coeff_companion", trial, v / cp[i], config.slack * cbc, tag)
                report.record("ratio_norm_companion", trial, v / npn[i], config.slack * cbn, tag)
    comp_idx = [i for i, f in enumerate(forms) if f in companions and f.shape.k >= 2]
    for a in comp_idx:
        for b in comp_idx:
            if a == b:
                continue
            lo, hi = bound_cross(forms[a], forms[b], P, prof, check=False)
            for i in range(len(triples)):
                r = cf[a][i] / cf[b][i]
                tag = f"{label} {forms[a].name}/{forms[b].name}"
                report.record("cross_upper", trial, r, config.slack * hi, tag)
                report.record("cross_lower", trial, lo, config.slack * r, tag)


def check_bounds(config: SuiteConfig) -> SuiteReport:
    """Observed condition ratios against the general, companion and
    cross-form bounds, plus the floor on body coefficient norms."""
    report = SuiteReport(config.seed)
    for t in config.trial_ids():
        _bounds_trial(config, t, report)
    return report


SUITES = {
    "factorizations": check_factorizations,
    "eigvec": check_eigvec_formulas,
    "lemma": check_lemma_norms,
    "bounds": check_bounds,
}


def run_all(config: SuiteConfig, suites=None) -> dict[str, SuiteReport]:
    names = list(SUITES) if suites is None else list(suites)
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}")
    return {name: SUITES[name](config) for name in names}


# -- output -----------------------------------------------------------------

def write_report_text(reports: dict[str, SuiteReport], fh) -> None:
    for suite, rep in reports.items():
        status = "ok" if rep.ok else "FAILED"
        fh.write(f"[{suite}] {status}: {rep.passed} passed, {rep.failed} failed"
                 f", {rep.skipped} skipped (seed {rep.seed})\n")
        for name in sorted(rep.checks):
            st = rep.checks[name]
            fh.write(f"  {name:<24} {st.passed:>7} passed {st.failed:>5} failed"
                     f"  worst value/limit {st.worst:.3e}\n")
        for seed, trial, check, detail in rep.offending:
            fh.write(f"  FAIL seed={seed} trial={trial} {check}: {detail}\n")


def write_report_csv(reports: dict[str, SuiteReport], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["suite", "check", "passed", "failed", "worst_utilization"])
    for suite, rep in reports.items():
        for name in sorted(rep.checks):
            st = rep.checks[name]
            w.writerow([suite, name, st.passed, st.failed, f"{st.worst:.16e}"])

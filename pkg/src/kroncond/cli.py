"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 bad or missing data, 3 numerical
failure (including failed verification checks).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import LinAlgError

from . import verify as vfy
from .conditioning import (
    SIMPLICITY_THRESHOLD,
    bound_companion,
    bound_cross,
    bound_general,
    coeff_cond,
    coeff_cond_form,
    condition_reports,
    cross_ratios,
    norm_cond,
    rho,
    write_condition_csv,
    write_cross_csv,
)
from .eigsolve import (
    BackendError,
    eig_with_form,
    forward_errors,
    reference_eigentriples,
    refine_eigentriple,
    sort_by_modulus,
    write_eigentriples_csv,
)
from .kronecker import (
    KroneckerShape,
    assemble,
    general_M,
    is_companion,
    preset,
    random_general_params,
    read_form,
    recovery_error,
    standard_M,
    write_form,
)
from .matpoly import (
    MatrixPolynomial,
    badly_scaled_poly,
    norm_profile,
    random_poly,
    read_poly,
    scale_to_unit_max,
    write_poly,
)

NLEVP_ENV = "KRONCOND_NLEVP_DIR"
DEFAULT_POLY = "poly.txt"
DEFAULT_FORM = "form.txt"

EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    scaled: bool = False
    presets: list[str] = field(default_factory=list)
    input_path: Path | None = None
    out_dir: Path = Path(".")
    tol: float = 1e-14

    def __post_init__(self):
        if self.experiment not in ("exp1", "exp2", "exp3"):
            raise UsageError(f"unknown experiment {self.experiment!r}")


# -- helpers ----------------------------------------------------------------

def _fmt(v: float) -> str:
    return f"{v:.16e}"


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(path) -> MatrixPolynomial:
    path = Path(path)
    if not path.exists():
        raise DataError(f"input not found: {path}")
    return read_poly(path)


def _input_poly(args) -> MatrixPolynomial:
    path = Path(args.input) if args.input else Path(args.out) / DEFAULT_POLY
    P = _load(path)
    if args.scale:
        P, _ = scale_to_unit_max(P)
    return P


def _benchmark_path(name: str) -> Path:
    root = os.environ.get(NLEVP_ENV)
    if not root:
        raise DataError(f"benchmark {name!r} needs ${NLEVP_ENV} pointing at the ingestion "
                        f"directory (expected {name}/A0.mtx, A1.mtx, ... or {name}.txt inside it)")
    base = Path(root)
    for cand in (base / name, base / f"{name}.txt"):
        if cand.exists():
            return cand
    raise DataError(f"benchmark {name!r} not found under {base} "
                    f"(expected {base / name}/A<i>.mtx or {base / name}.txt)")


def _form_for(args, P: MatrixPolynomial):
    if getattr(args, "form", None):
        form = read_form(args.form)
        if recovery_error(form.M, form.shape, P) > 1e-10:
            raise DataError(f"form in {args.form} is not an l-ification of the input polynomial")
        return form
    return preset(P, args.preset)


def _kv(items: list[str]) -> dict[str, int]:
    out = {}
    for it in items:
        key, sep, val = it.partition("=")
        if not sep:
            raise UsageError(f"expected key=value, got {it!r}")
        try:
            out[key.strip()] = int(val)
        except ValueError:
            raise UsageError(f"{key} must be an integer, got {val!r}") from None
    return out


# -- subcommands ------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.random is not None:
        kv = _kv(args.random)
        unknown = set(kv) - {"n", "d"}
        if unknown or not {"n", "d"} <= set(kv):
            raise UsageError("--random takes n=<size> d=<degree>")
        P = random_poly(kv["n"], kv["d"], args.seed)
    elif args.badly_scaled is not None:
        kv = _kv(args.badly_scaled)
        if set(kv) != {"n"}:
            raise UsageError("--badly-scaled takes n=<size>")
        P = badly_scaled_poly(kv["n"], args.seed)
    else:
        P = _load(args.input)
    if args.scale:
        P, _ = scale_to_unit_max(P)
    out = _out_dir(args)
    target = Path(args.output) if args.output else out / DEFAULT_POLY
    write_poly(P, target)
    print(f"wrote {target} (n={P.n}, grade={P.grade})")
    return 0


def cmd_build(args) -> int:
    P = _input_poly(args)
    if args.shape:
        try:
            ell, eps, eta = (int(v) for v in args.shape.split(","))
        except ValueError:
            raise UsageError("--shape takes ell,eps,eta") from None
        shape = KroneckerShape.for_degree(P.grade, ell, eps, eta, P.n)
        if args.general:
            rng = np.random.Generator(np.random.Philox(args.seed))
            M = general_M(P, ell, eps, eta, random_general_params(shape, rng, args.param_scale))
            name = f"general({ell},{eps},{eta})"
        else:
            M = standard_M(P, ell, eps, eta)
            name = f"L_eps_eta({ell},{eps},{eta})"
        form = assemble(M, shape, target=P, tol=args.tol or 1e-10, name=name)
    else:
        form = preset(P, args.preset)
    out = _out_dir(args)
    target = Path(args.output) if args.output else out / DEFAULT_FORM
    write_form(form, target)
    s = form.shape
    census = is_companion(form, P)
    kind = "strict companion" if census.strict else ("companion" if census.is_companion else "general")
    print(f"{form.name}: ell={s.ell} eps={s.eps} eta={s.eta} n={s.n} size={s.size} ({kind}); "
          f"recovery error {recovery_error(form.M, s, P):.3e}; wrote {target}")
    return 0


def _triples(args, P, form):
    triples = eig_with_form(P, form)
    if args.refine:
        rng = np.random.Generator(np.random.Philox(args.seed))
        c = rng.standard_normal(P.n) + 1j * rng.standard_normal(P.n)
        c /= np.linalg.norm(c)
        norms = norm_profile(P).per_coeff
        triples = [refine_eigentriple(P, t, c, args.tol or 1e-14, 20, norms) for t in triples]
    return sort_by_modulus(triples)


def cmd_eig(args) -> int:
    P = _input_poly(args)
    form = _form_for(args, P)
    triples = _triples(args, P, form)
    out = _out_dir(args)
    target = out / (args.output or "eigentriples.csv")
    with open(target, "w", newline="", encoding="utf-8") as fh:
        write_eigentriples_csv(triples, fh)
    print(f"{len(triples)} finite eigentriples via {form.name}; wrote {target}")
    return 0


def cmd_cond(args) -> int:
    P = _input_poly(args)
    form = _form_for(args, P)
    triples = sort_by_modulus(reference_eigentriples(P, seed=args.seed, tol=args.tol or 1e-14))
    reports = condition_reports(P, form, triples)
    out = _out_dir(args)
    target = out / (args.output or "condition.csv")
    with open(target, "w", newline="", encoding="utf-8") as fh:
        write_condition_csv(reports, fh)
    bc, bn = bound_general(form, P)
    line = f"{form.name}: {len(reports)} simple eigenvalues, rho={rho(P):.3e}, general bounds {bc:.3e}/{bn:.3e}"
    if is_companion(form, P).is_companion:
        cc, cn = bound_companion(form, P, check=False)
        line += f", companion bounds {cc:.3e}/{cn:.3e}"
    print(f"{line}; wrote {target}")
    return 0


def cmd_compare(args) -> int:
    P = _input_poly(args)
    names = [s.strip() for s in args.presets.split(",") if s.strip()]
    if not names:
        raise UsageError("--presets needs at least one name")
    base = preset(P, args.against)
    triples = sort_by_modulus(reference_eigentriples(P, seed=args.seed, tol=args.tol or 1e-14))
    rows = []
    for name in names:
        rows += cross_ratios(P, preset(P, name), base, triples)
    out = _out_dir(args)
    target = out / (args.output or "cross.csv")
    with open(target, "w", newline="", encoding="utf-8") as fh:
        write_cross_csv(rows, fh)
    outside = sum(not r.inside for r in rows)
    print(f"{len(rows)} cross ratios vs {base.name}, {outside} outside the bracket; wrote {target}")
    return 0


def cmd_verify(args) -> int:
    suites = list(vfy.SUITES) if "all" in args.suite else args.suite
    kw = dict(seed=args.seed, trials=args.trials)
    if args.tol is not None:
        kw["fact_tol"] = args.tol
    config = vfy.SuiteConfig(**kw)
    reports = vfy.run_all(config, suites)
    out = _out_dir(args)
    with open(out / "verify_report.txt", "w", encoding="utf-8") as fh:
        vfy.write_report_text(reports, fh)
    with open(out / "verify_report.csv", "w", newline="", encoding="utf-8") as fh:
        vfy.write_report_csv(reports, fh)
    vfy.write_report_text(reports, sys.stdout)
    return 0 if all(r.ok for r in reports.values()) else EXIT_NUMERICAL


# -- experiments ------------------------------------------------------------

EXP1_PRESETS = ["frobenius1", "exp1_L2", "exp1_L3", "exp1_L4"]

# (numerators, denominator) per degree for the cross-form ratios
EXP2_LAYOUT = {
    3: (["exp1_L2", "exp1_L3", "exp1_L4"], "frobenius1"),
    4: (["frobenius1"], "exp2_Q"),
    6: (["exp2_F", "exp2_Q", "exp2_C"], "frobenius1"),
}

EXP3_LAYOUT = {
    3: ["frobenius1", "exp1_L2", "exp1_L3", "exp1_L4"],
    4: ["frobenius1", "exp2_Q"],
    6: ["frobenius1", "exp2_F", "exp2_Q", "exp2_C"],
}


def _usable(t) -> bool:
    return (t.converged and np.isfinite(t.lam) and t.lam != 0
            and t.simplicity_margin >= SIMPLICITY_THRESHOLD)


def _variants(P: MatrixPolynomial, scaled_only: bool):
    Ps, _ = scale_to_unit_max(P)
    return [("scaled", Ps)] if scaled_only else [("unscaled", P), ("scaled", Ps)]


def _exp1(config: ExperimentConfig, P: MatrixPolynomial) -> list[str]:
    if P.grade != 3:
        raise DataError(f"exp1 needs a degree-3 polynomial, got grade {P.grade}")
    if config.scaled:
        P, _ = scale_to_unit_max(P)
    names = config.presets or EXP1_PRESETS
    ref = sort_by_modulus(reference_eigentriples(P, seed=config.seed, tol=config.tol))
    prof = norm_profile(P)
    cols = {}
    for name in names:
        comp = eig_with_form(P, preset(P, name))
        cols[name] = forward_errors(comp, ref).by_reference()
    path = config.out_dir / "exp1_forward_errors.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "re_lambda", "im_lambda", "abs_lambda", "norm_cond_P"]
                   + [f"err_{n}" for n in names])
        for i, t in enumerate(ref):
            nc = _fmt(norm_cond(P, t, prof)) if _usable(t) else ""
            w.writerow([i, _fmt(t.lam.real), _fmt(t.lam.imag), _fmt(abs(t.lam)), nc]
                       + [_fmt(cols[n][i]) if i in cols[n] else "" for n in names])
    worst = max((max(c.values()) for c in cols.values() if c), default=0.0)
    print(f"exp1: {len(ref)} eigenvalues, worst forward error {worst:.3e}; wrote {path}")
    return [path.name]


def _exp2(config: ExperimentConfig, P: MatrixPolynomial) -> list[str]:
    if P.grade not in EXP2_LAYOUT:
        raise DataError(f"exp2 needs degree 3, 4 or 6, got grade {P.grade}")
    nums, den = EXP2_LAYOUT[P.grade]
    if config.presets:
        nums = config.presets
    ref = sort_by_modulus(reference_eigentriples(P, seed=config.seed, tol=config.tol))
    ref = [t for t in ref if _usable(t)]
    path = config.out_dir / "exp2_ratios.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variant", "index", "re_lambda", "im_lambda", "numerator", "denominator",
                    "ratio", "lower", "upper"])
        for variant, Pv in _variants(P, config.scaled):
            fden = preset(Pv, den)
            dvals = [coeff_cond_form(fden, Pv, t) for t in ref]
            for name in nums:
                fnum = preset(Pv, name)
                lo, hi = bound_cross(fnum, fden, Pv, check=False)
                for i, t in enumerate(ref):
                    r = coeff_cond_form(fnum, Pv, t) / dvals[i]
                    w.writerow([variant, i, _fmt(t.lam.real), _fmt(t.lam.imag), name, den,
                                _fmt(r), _fmt(lo), _fmt(hi)])
    print(f"exp2: {len(ref)} simple eigenvalues, ratios {', '.join(nums)} vs {den}; wrote {path}")
    return [path.name]


def _exp3(config: ExperimentConfig, P: MatrixPolynomial) -> list[str]:
    if P.grade not in EXP3_LAYOUT:
        raise DataError(f"exp3 needs degree 3, 4 or 6, got grade {P.grade}")
    names = config.presets or EXP3_LAYOUT[P.grade]
    ref = sort_by_modulus(reference_eigentriples(P, seed=config.seed, tol=config.tol))
    ref = [t for t in ref if _usable(t)]
    path = config.out_dir / "exp3_ratios.csv"
    rpath = config.out_dir / "exp3_rho.csv"
    rho_rows = []
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variant", "index", "re_lambda", "im_lambda", "form", "ratio", "bound_coeff"])
        for variant, Pv in _variants(P, config.scaled):
            prof = norm_profile(Pv)
            cp = [coeff_cond(Pv, t, prof) for t in ref]
            for name in names:
                f = preset(Pv, name)
                bc, _ = bound_general(f, Pv, prof)
                for i, t in enumerate(ref):
                    w.writerow([variant, i, _fmt(t.lam.real), _fmt(t.lam.imag), name,
                                _fmt(coeff_cond_form(f, Pv, t) / cp[i]), _fmt(bc)])
            rho_rows.append((variant, rho(Pv, prof), prof.max_norm, prof.min_edge))
    with open(rpath, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variant", "rho", "max_norm", "min_edge"])
        for variant, r, mx, me in rho_rows:
            w.writerow([variant, _fmt(r), _fmt(mx), _fmt(me)])
    summary = ", ".join(f"{v} rho={r:.3e}" for v, r, _, _ in rho_rows)
    print(f"exp3: {len(ref)} simple eigenvalues, {summary}; wrote {path} and {rpath}")
    return [path.name, rpath.name]


_PLOT_HEADER = '''"""Plots for {exp}; reads only the CSV files next to this script."""

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def rows(name):
    with open(HERE / name, newline="") as fh:
        return list(csv.DictReader(fh))

'''

_PLOT_BODY = {
    "exp1": '''
data = rows("exp1_forward_errors.csv")
cols = [c for c in data[0] if c.startswith("err_")]
fig, ax = plt.subplots(figsize=(10, 5))
for c in cols:
    pts = [(int(r["index"]) + 1, float(r[c])) for r in data if r[c]]
    ax.semilogy([p[0] for p in pts], [max(p[1], 1e-17) for p in pts], marker=".", label=c[4:])
ax.set_xlabel("eigenvalue index (increasing |lambda|)")
ax.set_ylabel("relative forward error")
ax.legend()
fig.savefig(HERE / "exp1_forward_errors.png", dpi=150, bbox_inches="tight")
''',
    "exp2": '''
data = rows("exp2_ratios.csv")
variants = sorted({r["variant"] for r in data}, reverse=True)
fig, axes = plt.subplots(len(variants), 1, figsize=(10, 4.5 * len(variants)), squeeze=False)
for ax, variant in zip(axes[:, 0], variants):
    curves = defaultdict(list)
    for r in data:
        if r["variant"] == variant:
            curves[(r["numerator"], r["denominator"])].append((int(r["index"]) + 1, float(r["ratio"])))
    for (num, den), pts in curves.items():
        ax.semilogy([p[0] for p in pts], [p[1] for p in pts], marker=".", label=f"{num} / {den}")
    ax.set_title(variant)
    ax.set_xlabel("eigenvalue index (increasing |lambda|)")
    ax.set_ylabel("coeff cond ratio")
    ax.legend()
fig.savefig(HERE / "exp2_ratios.png", dpi=150, bbox_inches="tight")
''',
    "exp3": '''
data = rows("exp3_ratios.csv")
rho = {r["variant"]: float(r["rho"]) for r in rows("exp3_rho.csv")}
variants = sorted({r["variant"] for r in data}, reverse=True)
fig, axes = plt.subplots(len(variants), 1, figsize=(10, 4.5 * len(variants)), squeeze=False)
for ax, variant in zip(axes[:, 0], variants):
    curves = defaultdict(list)
    for r in data:
        if r["variant"] == variant:
            curves[r["form"]].append((int(r["index"]) + 1, float(r["ratio"])))
    for form, pts in curves.items():
        ax.semilogy([p[0] for p in pts], [p[1] for p in pts], marker=".", label=form)
    ax.set_title(f"{variant} (rho = {rho[variant]:.2e})")
    ax.set_xlabel("eigenvalue index (increasing |lambda|)")
    ax.set_ylabel("coeff cond form / coeff cond P")
    ax.legend()
fig.savefig(HERE / "exp3_ratios.png", dpi=150, bbox_inches="tight")
''',
}


def write_plot_script(exp: str, out_dir: Path) -> Path:
    path = out_dir / f"plot_{exp}.py"
    path.write_text(_PLOT_HEADER.format(exp=exp) + _PLOT_BODY[exp], encoding="utf-8")
    return path


def cmd_experiment(config: ExperimentConfig, P: MatrixPolynomial) -> list[str]:
    config.out_dir.mkdir(parents=True, exist_ok=True)
    runner = {"exp1": _exp1, "exp2": _exp2, "exp3": _exp3}[config.experiment]
    files = runner(config, P)
    files.append(write_plot_script(config.experiment, config.out_dir).name)
    return files


def _experiment_poly(args) -> MatrixPolynomial:
    if args.input and args.benchmark:
        raise UsageError("use either --input or --benchmark")
    if args.benchmark:
        return _load(_benchmark_path(args.benchmark))
    if args.input:
        return _load(args.input)
    if args.experiment == "exp1":
        return random_poly(30, 3, args.seed)
    return badly_scaled_poly(10, args.seed)


def _run_experiment(args) -> int:
    config = ExperimentConfig(
        experiment=args.experiment, seed=args.seed, scaled=args.scale,
        presets=[s.strip() for s in (args.presets or "").split(",") if s.strip()],
        input_path=Path(args.input) if args.input else None,
        out_dir=Path(args.out), tol=args.tol or 1e-14)
    cmd_experiment(config, _experiment_poly(args))
    return 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--scale", action="store_true",
                        help="divide P by max ||A_i||_2 before analysis")
    common.add_argument("--out", default=".", help="output directory (default .)")
    common.add_argument("--tol", type=float, default=None, help="tolerance override")

    p = _Parser(prog="kroncond", parents=[common],
                description="Block Kronecker l-ifications of matrix polynomials: "
                            "construction, eigensolving and eigenvalue conditioning.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="generate or convert a polynomial")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--random", nargs="+", metavar="KEY=VAL", help="n=<size> d=<degree>")
    src.add_argument("--badly-scaled", nargs="+", metavar="KEY=VAL",
                     help="n=<size>: degree-6 polynomial with coefficient scales 1,1e3,1,1e4,1e4,1e2,1")
    src.add_argument("--input", help="polynomial file or directory of A<i>.mtx files")
    g.add_argument("--output", help=f"target file (default OUT/{DEFAULT_POLY})")
    g.set_defaults(func=cmd_gen)

    def with_input(sp):
        sp.add_argument("--input", help=f"polynomial file or mtx directory (default OUT/{DEFAULT_POLY})")
        sp.add_argument("--output", help="output file name")

    b = sub.add_parser("build", parents=[common], help="assemble a block Kronecker form")
    with_input(b)
    how = b.add_mutually_exclusive_group()
    how.add_argument("--preset", default="frobenius1")
    how.add_argument("--shape", metavar="ELL,EPS,ETA")
    b.add_argument("--general", action="store_true",
                   help="with --shape: random admissible body instead of the standard one")
    b.add_argument("--param-scale", type=float, default=1.0)
    b.set_defaults(func=cmd_build)

    e = sub.add_parser("eig", parents=[common], help="eigentriples through a form")
    with_input(e)
    e.add_argument("--preset", default="frobenius1")
    e.add_argument("--form", help="form file written by build (overrides --preset)")
    e.add_argument("--refine", action="store_true", help="replace by Newton-refined triples")
    e.set_defaults(func=cmd_eig)

    c = sub.add_parser("cond", parents=[common], help="condition numbers and bounds")
    with_input(c)
    c.add_argument("--preset", default="frobenius1")
    c.add_argument("--form", help="form file written by build (overrides --preset)")
    c.set_defaults(func=cmd_cond)

    cm = sub.add_parser("compare", parents=[common], help="cross-form condition ratios")
    with_input(cm)
    cm.add_argument("--presets", required=True, help="comma-separated numerator presets")
    cm.add_argument("--against", default="frobenius1")
    cm.set_defaults(func=cmd_compare)

    v = sub.add_parser("verify", parents=[common], help="run the randomized check suites")
    v.add_argument("--suite", action="append", choices=["all", *vfy.SUITES], default=None)
    v.add_argument("--trials", type=int, default=200)
    v.set_defaults(func=cmd_verify)

    x = sub.add_parser("experiment", parents=[common], help="run exp1, exp2 or exp3")
    x.add_argument("experiment", choices=["exp1", "exp2", "exp3"])
    x.add_argument("--input", help="polynomial file or mtx directory")
    x.add_argument("--benchmark", help=f"problem name under ${NLEVP_ENV}")
    x.add_argument("--presets", help="comma-separated preset override")
    x.set_defaults(func=_run_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "suite", "unset") is None:
        args.suite = ["all"]
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"kroncond: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, LinAlgError, BackendError) as exc:
        print(f"kroncond: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, OSError, ValueError) as exc:
        print(f"kroncond: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

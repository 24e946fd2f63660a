"""Block Kronecker l-ifications of square matrix polynomials.

A block Kronecker form of shape ``(ell, eps, eta, n)`` is the grade-``ell``
matrix polynomial::

    [ M(lam)                  L_eta(lam**ell)^T (x) I_n ]
    [ L_eps(lam**ell) (x) I_n          0                ]

where ``M`` is ``(eta+1)n x (eps+1)n``.  It is an l-ification of ``P`` when
``(Lambda_eta^T (x) I) M (Lambda_eps (x) I) = P``.  Builders here produce the
structured factors, the body ``M`` (standard or general solution), named
companion presets, and the assembled form.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .matpoly import (
    DimensionMismatchError,
    MatrixPolynomial,
    PolynomialFormatError,
    poly_from_lines,
    poly_to_text,
)

__all__ = [
    "KroneckerShape",
    "BlockKroneckerForm",
    "GeneralMParams",
    "CompanionCensus",
    "NotAnLificationError",
    "ShapeError",
    "lambda_block",
    "L_block",
    "R_block",
    "S_block",
    "H_block",
    "G_block",
    "polymatmul",
    "standard_M",
    "general_M",
    "random_general_params",
    "recover_Q",
    "recovery_error",
    "antidiagonal_residual",
    "assemble",
    "preset",
    "preset_names",
    "companion_presets_for",
    "is_companion",
    "write_form",
    "read_form",
    "form_to_text",
]


class ShapeError(ValueError):
    """Degree/divisibility or block-size constraint violated."""


class NotAnLificationError(ValueError):
    """The assembled form does not reproduce the target polynomial."""


@dataclass(frozen=True)
class KroneckerShape:
    ell: int
    eps: int
    eta: int
    n: int

    def __post_init__(self):
        if self.ell < 1 or self.eps < 0 or self.eta < 0 or self.n < 1:
            raise ShapeError(f"invalid shape {self}")

    @property
    def k(self) -> int:
        return self.eps + self.eta + 1

    @property
    def degree(self) -> int:
        return self.ell * self.k

    @property
    def size(self) -> int:
        return self.k * self.n

    @classmethod
    def for_degree(cls, d: int, ell: int, eps: int, eta: int, n: int) -> KroneckerShape:
        if d % ell:
            raise ShapeError(f"degree {d} is not divisible by ell={ell}")
        if eps + eta + 1 != d // ell:
            raise ShapeError(f"eps + eta + 1 = {eps + eta + 1} but d/ell = {d // ell}")
        return cls(ell, eps, eta, n)


# -- structured factors -----------------------------------------------------

def lambda_block(k: int, ell: int, n: int, lam: complex) -> np.ndarray:
    """``Lambda_k(lam**ell) (x) I_n``: blocks ``mu**k I, ..., mu I, I``."""
    mu = complex(lam) ** ell
    col = np.array([mu ** (k - i) for i in range(k + 1)], dtype=complex)
    return np.kron(col[:, None], np.eye(n))


def L_block(k: int, ell: int, n: int) -> MatrixPolynomial:
    """``L_k(lam**ell) (x) I_n`` as a grade-``ell`` polynomial (``kn x (k+1)n``)."""
    c = np.zeros((ell + 1, k * n, (k + 1) * n), dtype=complex)
    if k:
        eye = np.eye(k * n)
        c[0, :, : k * n] = -eye
        c[ell, :, n:] += eye
    return MatrixPolynomial(c)


def R_block(k: int, ell: int, n: int, lam: complex) -> np.ndarray:
    """Lower block-Toeplitz ``R_k(lam**ell)``; last block column is zero."""
    mu = complex(lam) ** ell
    out = np.zeros((k * n, (k + 1) * n), dtype=complex)
    eye = np.eye(n)
    for i in range(k):
        for j in range(i + 1):
            out[i * n:(i + 1) * n, j * n:(j + 1) * n] = mu ** (i - j) * eye
    return out


def S_block(k: int, ell: int, n: int, lam: complex) -> np.ndarray:
    """Upper block-Toeplitz ``S_k(lam**ell)``; first block column is zero."""
    mu = complex(lam) ** ell
    out = np.zeros((k * n, (k + 1) * n), dtype=complex)
    eye = np.eye(n)
    for i in range(k):
        for j in range(i + 1, k + 1):
            out[i * n:(i + 1) * n, j * n:(j + 1) * n] = mu ** (k - 1 - (j - 1 - i)) * eye
    return out


def _block_size(M: MatrixPolynomial, p: int, q: int) -> int:
    rows, cols = M.shape
    if cols % (p + 1) or rows % (q + 1) or cols // (p + 1) != rows // (q + 1):
        raise DimensionMismatchError(
            f"M of size {rows}x{cols} does not match (p, q) = ({p}, {q})")
    return cols // (p + 1)


def H_block(lam: complex, p: int, q: int, M: MatrixPolynomial, ell: int | None = None) -> np.ndarray:
    """``[Lambda_p(lam^ell) (x) I; R_q(lam^ell) M(lam) (Lambda_p(lam^ell) (x) I)]``."""
    ell = M.grade if ell is None else ell
    n = _block_size(M, p, q)
    top = lambda_block(p, ell, n, lam)
    if q == 0:
        return top
    bottom = R_block(q, ell, n, lam) @ (M.horner(lam) @ top)
    return np.vstack([top, bottom])


def G_block(lam: complex, p: int, q: int, M: MatrixPolynomial, ell: int | None = None) -> np.ndarray:
    """``[lam^(q ell) Lambda_p (x) I; -S_q(lam^ell) M(lam) (Lambda_p (x) I)]``."""
    ell = M.grade if ell is None else ell
    n = _block_size(M, p, q)
    top = lambda_block(p, ell, n, lam)
    if q == 0:
        return top
    bottom = -S_block(q, ell, n, lam) @ (M.horner(lam) @ top)
    return np.vstack([complex(lam) ** (q * ell) * top, bottom])


# -- polynomial helpers -----------------------------------------------------

def polymatmul(A: MatrixPolynomial, B: MatrixPolynomial) -> MatrixPolynomial:
    """Product of matrix polynomials (coefficient convolution)."""
    if A.shape[1] != B.shape[0]:
        raise DimensionMismatchError(f"cannot multiply {A.shape} by {B.shape}")
    out = np.zeros((A.grade + B.grade + 1, A.shape[0], B.shape[1]), dtype=complex)
    for i, a in enumerate(A.coeffs):
        for j, b in enumerate(B.coeffs):
            out[i + j] += a @ b
    return MatrixPolynomial(out)


def _blocks_to_poly(blocks, ell: int, n: int) -> MatrixPolynomial:
    """Grade-``ell`` polynomial from a nested list of grade-``ell`` ``n x n``
    block coefficient arrays (``None`` = zero block)."""
    rows, cols = len(blocks), len(blocks[0])
    c = np.zeros((ell + 1, rows * n, cols * n), dtype=complex)
    for i, row in enumerate(blocks):
        for j, b in enumerate(row):
            if b is not None:
                c[:, i * n:(i + 1) * n, j * n:(j + 1) * n] = b
    return MatrixPolynomial(c)


def _check_target(P: MatrixPolynomial, ell: int, eps: int, eta: int) -> KroneckerShape:
    return KroneckerShape.for_degree(P.grade, ell, eps, eta, P.n)


def _B_coeffs(P: MatrixPolynomial, ell: int, j: int) -> np.ndarray:
    """Coefficients (grade ``ell``) of ``B_j``: ``B_1`` carries ``A_0..A_ell``,
    ``B_j`` for ``j >= 2`` carries ``A_{ell(j-1)+1}..A_{ell j}`` on
    ``lam..lam**ell``."""
    n = P.n
    b = np.zeros((ell + 1, n, n), dtype=complex)
    if j == 1:
        b[:] = P.coeffs[: ell + 1]
    else:
        b[1:] = P.coeffs[ell * (j - 1) + 1: ell * j + 1]
    return b


# -- bodies M ---------------------------------------------------------------

def standard_M(P: MatrixPolynomial, ell: int, eps: int, eta: int) -> MatrixPolynomial:
    """The particular solution with ``B_k .. B_{eta+1}`` along the first block
    row and ``B_{eta+1} .. B_1`` down the last block column."""
    shape = _check_target(P, ell, eps, eta)
    k = shape.k
    blocks = [[None] * (eps + 1) for _ in range(eta + 1)]
    for c in range(eps + 1):
        blocks[0][c] = _B_coeffs(P, ell, k - c)
    for r in range(eta + 1):
        blocks[r][eps] = _B_coeffs(P, ell, eta + 1 - r)
    return _blocks_to_poly(blocks, ell, P.n)


@dataclass(frozen=True)
class GeneralMParams:
    """Free parameters of the general solution.

    ``B``: ``(eta+1)n x eps n``; ``C``: ``eta n x (eps+1)n``; ``D``: grade
    ``ell-2`` polynomial of size ``eta n x eps n`` (``None`` when it does not
    exist).
    """

    B: np.ndarray
    C: np.ndarray
    D: MatrixPolynomial | None = None

    def validate(self, shape: KroneckerShape) -> None:
        n, eps, eta, ell = shape.n, shape.eps, shape.eta, shape.ell
        if self.B.shape != ((eta + 1) * n, eps * n):
            raise DimensionMismatchError(f"B has shape {self.B.shape}")
        if self.C.shape != (eta * n, (eps + 1) * n):
            raise DimensionMismatchError(f"C has shape {self.C.shape}")
        has_d = ell >= 2 and eps > 0 and eta > 0
        if self.D is None:
            return
        if not has_d:
            if np.any(self.D.coeffs):
                raise DimensionMismatchError("D must be absent for this shape")
            return
        if self.D.shape != (eta * n, eps * n) or self.D.grade > ell - 2:
            raise DimensionMismatchError(
                f"D must be grade <= {ell - 2} of size {(eta * n, eps * n)}")

    @classmethod
    def zeros(cls, shape: KroneckerShape) -> GeneralMParams:
        n, eps, eta = shape.n, shape.eps, shape.eta
        return cls(np.zeros(((eta + 1) * n, eps * n), complex),
                   np.zeros((eta * n, (eps + 1) * n), complex), None)


def random_general_params(shape: KroneckerShape, rng: np.random.Generator,
                          scale: float = 1.0) -> GeneralMParams:
    n, eps, eta, ell = shape.n, shape.eps, shape.eta, shape.ell

    def cg(*s):
        return scale * (rng.standard_normal(s) + 1j * rng.standard_normal(s))

    D = None
    if ell >= 2 and eps > 0 and eta > 0:
        D = MatrixPolynomial(cg(ell - 1, eta * n, eps * n))
    return GeneralMParams(cg((eta + 1) * n, eps * n), cg(eta * n, (eps + 1) * n), D)


def general_M(P: MatrixPolynomial, ell: int, eps: int, eta: int,
              params: GeneralMParams) -> MatrixPolynomial:
    """``M0 + (lam [0; D] + B)(L_eps (x) I) + (L_eta^T (x) I)(lam [0, -D] + C)``."""
    shape = _check_target(P, ell, eps, eta)
    params.validate(shape)
    n = shape.n
    M0 = standard_M(P, ell, eps, eta)
    gx = max(ell - 1, 0)
    X = np.zeros((gx + 1, (eta + 1) * n, eps * n), dtype=complex)
    Y = np.zeros((gx + 1, eta * n, (eps + 1) * n), dtype=complex)
    X[0] = params.B
    Y[0] = params.C
    if params.D is not None and eps > 0 and eta > 0:
        for t, Dt in enumerate(params.D.coeffs):
            X[t + 1, n:, :] = Dt
            Y[t + 1, :, n:] = -Dt
    corr = (polymatmul(MatrixPolynomial(X), L_block(eps, ell, n)).coeffs
            + polymatmul(L_block(eta, ell, n).transpose(), MatrixPolynomial(Y)).coeffs)
    out = np.zeros_like(corr)
    out[: ell + 1] += M0.coeffs
    out += corr
    # Terms above lam**ell cancel exactly between the two corrections.
    if np.any(out[ell + 1:]):
        raise ArithmeticError("general_M: high-order terms did not cancel")
    return MatrixPolynomial(out[: ell + 1])


def recover_Q(M: MatrixPolynomial, shape: KroneckerShape) -> MatrixPolynomial:
    """``(Lambda_eta(lam^ell)^T (x) I) M (Lambda_eps(lam^ell) (x) I)`` computed
    coefficientwise, as a polynomial of grade ``ell k``."""
    n, ell, eps, eta = shape.n, shape.ell, shape.eps, shape.eta
    if M.shape != ((eta + 1) * n, (eps + 1) * n):
        raise DimensionMismatchError(f"M has size {M.shape}, shape expects "
                                     f"{((eta + 1) * n, (eps + 1) * n)}")
    if M.grade > ell:
        raise DimensionMismatchError(f"M has grade {M.grade} > ell={ell}")
    Q = np.zeros((shape.degree + 1, n, n), dtype=complex)
    for i in range(eta + 1):
        for j in range(eps + 1):
            off = ell * (eta - i + eps - j)
            for s, Ms in enumerate(M.coeffs):
                Q[off + s] += Ms[i * n:(i + 1) * n, j * n:(j + 1) * n]
    return MatrixPolynomial(Q)


def recovery_error(M: MatrixPolynomial, shape: KroneckerShape, P: MatrixPolynomial) -> float:
    """``max_i ||Q_i - A_i||_2`` relative to the largest coefficient norm of
    ``P`` or ``M`` (cancellation in general solutions scales with ``M``)."""
    Q = recover_Q(M, shape)
    if Q.grade != P.grade:
        raise DimensionMismatchError(f"grade {Q.grade} vs target grade {P.grade}")
    err = max(np.linalg.norm(q - a, 2) for q, a in zip(Q.coeffs, P.coeffs))
    scale = max(max(np.linalg.norm(a, 2) for a in P.coeffs),
                max(np.linalg.norm(m, 2) for m in M.coeffs))
    if scale == 0:
        return float(err)
    return float(err / scale)


def antidiagonal_residual(M: MatrixPolynomial, shape: KroneckerShape,
                          P: MatrixPolynomial) -> float:
    """Fast check of the block anti-diagonal sum conditions.

    With 0-based block indices ``(i, j)`` of ``M``::

        sum_{i+j=t} [M_ell]_ij + sum_{i+j=t-1} [M_0]_ij = A_{d - t ell},  t = 0..k
        sum_{i+j=s} [M_{ell-t}]_ij = A_{d - s ell - t},  s = 0..k-1, t = 1..ell-1

    Returns the largest absolute residual.
    """
    n, ell, eps, eta, k, d = shape.n, shape.ell, shape.eps, shape.eta, shape.k, shape.degree
    Mc = M.with_grade(ell).coeffs

    def antidiag(t: int, s: int) -> np.ndarray:
        acc = np.zeros((n, n), dtype=complex)
        for i in range(eta + 1):
            j = s - i
            if 0 <= j <= eps:
                acc += Mc[t, i * n:(i + 1) * n, j * n:(j + 1) * n]
        return acc

    worst = 0.0
    for t in range(k + 1):
        lhs = antidiag(ell, t) + antidiag(0, t - 1)
        worst = max(worst, float(np.abs(lhs - P.coeffs[d - t * ell]).max()))
    for s in range(k):
        for t in range(1, ell):
            lhs = antidiag(ell - t, s)
            worst = max(worst, float(np.abs(lhs - P.coeffs[d - s * ell - t]).max()))
    return worst


# -- assembled forms --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BlockKroneckerForm:
    shape: KroneckerShape
    M: MatrixPolynomial
    assembled: MatrixPolynomial
    name: str = ""
    notes: dict = field(default_factory=dict)

    @property
    def ell(self) -> int:
        return self.shape.ell

    @cached_property
    def coeff_norms(self) -> tuple[float, ...]:
        """Spectral norms of the assembled coefficients."""
        return tuple(float(np.linalg.norm(c, 2)) for c in self.assembled.coeffs)

    @cached_property
    def M_norms(self) -> tuple[float, ...]:
        return tuple(float(np.linalg.norm(c, 2)) for c in self.M.coeffs)

    def __repr__(self) -> str:
        s = self.shape
        return (f"BlockKroneckerForm({self.name or 'custom'}: ell={s.ell}, eps={s.eps}, "
                f"eta={s.eta}, n={s.n})")


def assemble(M: MatrixPolynomial, shape: KroneckerShape, target: MatrixPolynomial | None = None,
             tol: float = 1e-12, name: str = "") -> BlockKroneckerForm:
    """Place ``M`` and the two ``L`` blocks into the ``kn x kn`` form.

    When ``target`` is given the form is checked to be an l-ification of it.
    """
    n, ell, eps, eta = shape.n, shape.ell, shape.eps, shape.eta
    if M.shape != ((eta + 1) * n, (eps + 1) * n):
        raise DimensionMismatchError(f"M has size {M.shape} for shape {shape}")
    M = M.with_grade(ell)
    if target is not None:
        err = recovery_error(M, shape, target)
        if not err <= tol:
            raise NotAnLificationError(
                f"body does not reproduce the target polynomial (relative error {err:.3e})")
    size = shape.size
    top = (eta + 1) * n
    left = (eps + 1) * n
    c = np.zeros((ell + 1, size, size), dtype=complex)
    c[:, :top, :left] = M.coeffs
    c[:, :top, left:] = L_block(eta, ell, n).transpose().coeffs
    c[:, top:, :left] = L_block(eps, ell, n).coeffs
    return BlockKroneckerForm(shape, M, MatrixPolynomial(c), name)


def _form_from_blocks(P: MatrixPolynomial, ell: int, eps: int, eta: int,
                      spec: dict[int, list[list]], name: str) -> BlockKroneckerForm:
    """Build a form from a block layout: ``spec[t][i][j]`` is a signed
    coefficient index (``+i`` -> ``A_i``, ``-i`` -> ``-A_i``; ``None`` -> 0).
    ``'-0'`` denotes ``-A_0``."""
    shape = _check_target(P, ell, eps, eta)
    n = P.n
    c = np.zeros((ell + 1, (eta + 1) * n, (eps + 1) * n), dtype=complex)
    for t, rows in spec.items():
        for i, row in enumerate(rows):
            for j, entry in enumerate(row):
                if entry is None:
                    continue
                sign, idx = (-1.0, int(entry[1:])) if isinstance(entry, str) else (
                    (-1.0, -entry) if entry < 0 else (1.0, entry))
                c[t, i * n:(i + 1) * n, j * n:(j + 1) * n] = sign * P.coeffs[idx]
    return assemble(MatrixPolynomial(c), shape, target=P, name=name)


def _frobenius(P: MatrixPolynomial, second: bool) -> BlockKroneckerForm:
    d = P.grade
    if d < 1:
        raise ShapeError("Frobenius forms need grade >= 1")
    lead = [d] + [None] * (d - 1)
    rest = list(range(d - 1, -1, -1))
    if second:
        spec = {1: [[v] for v in lead], 0: [[v] for v in rest]}
        return _form_from_blocks(P, 1, 0, d - 1, spec, "frobenius2")
    return _form_from_blocks(P, 1, d - 1, 0, {1: [lead], 0: [rest]}, "frobenius1")


def _need_grade(P: MatrixPolynomial, name: str, *grades: int) -> None:
    if P.grade not in grades:
        want = " or ".join(str(g) for g in grades)
        raise ShapeError(f"preset {name} needs a polynomial of degree {want}, got {P.grade}")


def _exp1(P: MatrixPolynomial, which: int) -> BlockKroneckerForm:
    name = f"exp1_L{which}"
    _need_grade(P, name, 3)
    if which == 2:
        spec = {1: [[3, None], [None, None]], 0: [[2, 1], [None, 0]]}
    elif which == 3:
        spec = {1: [[3, None], [None, 1]], 0: [[2, None], [None, 0]]}
    else:
        # lam A3 - A2 | lam A2 + A1 ; lam A2 + A1 | -lam A1 + A0
        spec = {1: [[3, 2], [2, -1]], 0: [[-2, 1], [1, 0]]}
    return _form_from_blocks(P, 1, 1, 1, spec, name)


def _exp2_Q(P: MatrixPolynomial) -> BlockKroneckerForm:
    _need_grade(P, "exp2_Q", 4, 6)
    if P.grade == 4:
        f = assemble(standard_M(P, 2, 1, 0), KroneckerShape(2, 1, 0, P.n), target=P,
                     name="exp2_Q")
        return f
    # [lam^2 A6 + lam A5, A2 ; lam^2 A4 + lam A3, lam A1 + A0]
    spec = {2: [[6, None], [4, None]], 1: [[5, None], [3, 1]], 0: [[None, 2], [None, 0]]}
    return _form_from_blocks(P, 2, 1, 1, spec, "exp2_Q")


def _standard(P: MatrixPolynomial, ell: int, eps: int, eta: int, name: str) -> BlockKroneckerForm:
    shape = _check_target(P, ell, eps, eta)
    return assemble(standard_M(P, ell, eps, eta), shape, target=P, name=name)


_PARAM = re.compile(r"^(\w+?)\s*(?:\(([\d,\s]*)\))?$")


def preset_names() -> list[str]:
    return ["frobenius1", "frobenius2", "frobenius_like1(ell)", "frobenius_like2(ell)",
            "L_eps_eta(ell,eps,eta)", "exp1_L2", "exp1_L3", "exp1_L4",
            "exp2_F", "exp2_Q", "exp2_C"]


def preset(P: MatrixPolynomial, name: str) -> BlockKroneckerForm:
    """Named companion layouts.

    ``frobenius1``/``frobenius2`` are the classical first/second companion
    pencils; ``frobenius_like1(ell)``/``frobenius_like2(ell)`` use
    ``(eps, eta) = (k-1, 0)`` / ``(0, k-1)`` with the standard body;
    ``L_eps_eta(ell,eps,eta)`` is the standard body of any shape.  The
    ``exp1_*`` pencils need degree 3, ``exp2_F``/``exp2_C`` degree 6 and
    ``exp2_Q`` degree 4 (Frobenius-like quadratification) or 6.
    """
    m = _PARAM.match(name.strip())
    if not m:
        raise ShapeError(f"unknown preset {name!r}")
    base, args = m.group(1), m.group(2)
    nums = [int(a) for a in args.split(",") if a.strip()] if args else []
    d = P.grade
    if base in ("frobenius1", "frobenius2") and not nums:
        return _frobenius(P, base == "frobenius2")
    if base in ("frobenius_like1", "frobenius_like2") and len(nums) == 1:
        ell = nums[0]
        if ell < 1 or d % ell:
            raise ShapeError(f"degree {d} is not divisible by ell={ell}")
        k = d // ell
        eps, eta = (k - 1, 0) if base.endswith("1") else (0, k - 1)
        return _standard(P, ell, eps, eta, f"{base}({ell})")
    if base == "L_eps_eta" and len(nums) == 3:
        ell, eps, eta = nums
        return _standard(P, ell, eps, eta, f"L_eps_eta({ell},{eps},{eta})")
    if base in ("exp1_L2", "exp1_L3", "exp1_L4") and not nums:
        return _exp1(P, int(base[-1]))
    if base == "exp2_F" and not nums:
        _need_grade(P, base, 6)
        return _standard(P, 1, 2, 3, base)
    if base == "exp2_Q" and not nums:
        return _exp2_Q(P)
    if base == "exp2_C" and not nums:
        _need_grade(P, base, 6)
        return _standard(P, 3, 1, 0, base)
    raise ShapeError(f"unknown preset {name!r}; known: {', '.join(preset_names())}")


def companion_presets_for(d: int) -> list[str]:
    """Every companion preset name applicable to degree ``d``."""
    names = ["frobenius1", "frobenius2"]
    for ell in range(1, d + 1):
        if d % ell:
            continue
        k = d // ell
        for eps in range(k):
            names.append(f"L_eps_eta({ell},{eps},{k - 1 - eps})")
    if d == 3:
        names += ["exp1_L2", "exp1_L3", "exp1_L4"]
    if d == 4:
        names.append("exp2_Q")
    if d == 6:
        names += ["exp2_F", "exp2_Q", "exp2_C"]
    return names


# -- companion classification -----------------------------------------------

@dataclass(frozen=True)
class CompanionCensus:
    """Per-block classification of an assembled form.

    ``entries`` lists ``(t, i, j, label)`` for every nonzero ``n x n`` block
    of coefficient ``t``; labels are ``I``, ``-I``, ``A<i>``, ``-A<i>`` or
    ``other``.
    """

    is_companion: bool
    strict: bool
    entries: tuple[tuple[int, int, int, str], ...]

    def count(self, label: str) -> int:
        return sum(1 for e in self.entries if e[3] == label)

    def __bool__(self) -> bool:
        return self.is_companion


def is_companion(form: BlockKroneckerForm, P: MatrixPolynomial,
                 allow_negative: bool = True) -> CompanionCensus:
    """Classify every block of every coefficient of ``form.assembled``.

    Blocks ``0`` and ``+-I`` (the latter is forced by the ``L`` blocks) are
    always admitted; ``-A_i`` only when ``allow_negative`` is true.
    ``strict`` reports whether no ``-A_i`` block was needed.
    """
    n = form.shape.n
    k = form.shape.k
    eye = np.eye(n)
    entries = []
    ok = True
    strict = True
    for t, coeff in enumerate(form.assembled.coeffs):
        for i in range(k):
            for j in range(k):
                blk = coeff[i * n:(i + 1) * n, j * n:(j + 1) * n]
                if not np.any(blk):
                    continue
                if np.array_equal(blk, eye):
                    label = "I"
                elif np.array_equal(blk, -eye):
                    label = "-I"
                else:
                    label = "other"
                    for idx, a in enumerate(P.coeffs):
                        if np.array_equal(blk, a):
                            label = f"A{idx}"
                            break
                    else:
                        for idx, a in enumerate(P.coeffs):
                            if np.array_equal(blk, -a):
                                label = f"-A{idx}"
                                strict = False
                                break
                if label == "other" or (label.startswith("-A") and not allow_negative):
                    ok = False
                entries.append((t, i, j, label))
    return CompanionCensus(ok, strict, tuple(entries))


# -- serialisation ----------------------------------------------------------

_SHAPE_LINE = re.compile(r"^kronshape\s+ell=(\d+)\s+eps=(\d+)\s+eta=(\d+)\s+n=(\d+)(?:\s+name=(\S+))?\s*$")


def form_to_text(form: BlockKroneckerForm) -> str:
    s = form.shape
    name = f" name={form.name}" if form.name and not any(c.isspace() for c in form.name) else ""
    return (f"kronshape ell={s.ell} eps={s.eps} eta={s.eta} n={s.n}{name}\n"
            + poly_to_text(form.assembled))


def write_form(form: BlockKroneckerForm, path) -> None:
    Path(path).write_text(form_to_text(form), encoding="utf-8")


def read_form(path) -> BlockKroneckerForm:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise PolynomialFormatError("empty form file")
    m = _SHAPE_LINE.match(lines[0].strip())
    if not m:
        raise PolynomialFormatError(f"bad kronshape line: {lines[0]!r}")
    shape = KroneckerShape(*(int(g) for g in m.groups()[:4]))
    full = poly_from_lines(lines[1:])
    if full.shape != (shape.size, shape.size) or full.grade != shape.ell:
        raise DimensionMismatchError("assembled polynomial does not match kronshape header")
    top, left = (shape.eta + 1) * shape.n, (shape.eps + 1) * shape.n
    M = MatrixPolynomial(full.coeffs[:, :top, :left])
    form = assemble(M, shape, name=m.group(5) or "")
    if not np.array_equal(form.assembled.coeffs, full.coeffs):
        raise PolynomialFormatError("off-diagonal blocks are not the Kronecker L blocks")
    return form

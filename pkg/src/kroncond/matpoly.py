"""Matrix polynomials P(lam) = sum_i A_i lam**i with complex coefficients.

A :class:`MatrixPolynomial` stores its coefficients as a read-only array of
shape ``(grade + 1, rows, cols)``.  Analysis routines require square,
non-degenerate polynomials; storage and IO accept anything so that blocks of
structured forms (and all-zero polynomials) can still be represented.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np


__all__ = [
    "MatrixPolynomial",
    "CoeffNormProfile",
    "DegeneratePolynomialError",
    "PolynomialFormatError",
    "DimensionMismatchError",
    "evaluate",
    "evaluate_derivative",
    "reversal",
    "norm_profile",
    "scale_to_unit_max",
    "random_poly",
    "badly_scaled_poly",
    "is_regular",
    "read_poly",
    "write_poly",
    "read_mtx_dir",
    "format_complex",
    "parse_complex",
    "BADLY_SCALED_FACTORS",
]

# Coefficient scale factors of the badly scaled degree-6 test polynomial.
BADLY_SCALED_FACTORS = (1.0, 1e3, 1.0, 1e4, 1e4, 1e2, 1.0)


class DegeneratePolynomialError(ValueError):
    """Raised when an analysis operation receives an all-zero polynomial."""


class PolynomialFormatError(ValueError):
    """Malformed polynomial file."""


class DimensionMismatchError(ValueError):
    """Coefficients (or blocks) with inconsistent sizes."""


class MatrixPolynomial:
    """Matrix polynomial of a fixed grade with complex coefficients.

    Parameters
    ----------
    coeffs : sequence of 2-D arrays or 3-D array
        ``A_0, ..., A_d``.  All coefficients must share one shape.

    The instance is immutable: the coefficient array is copied and flagged
    read-only.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs):
        if isinstance(coeffs, MatrixPolynomial):
            arr = coeffs._c
        else:
            mats = [np.atleast_2d(np.asarray(a, dtype=complex)) for a in coeffs]
            if not mats:
                raise ValueError("a matrix polynomial needs at least one coefficient")
            shape = mats[0].shape
            for i, a in enumerate(mats):
                if a.ndim != 2 or a.shape != shape:
                    raise DimensionMismatchError(
                        f"coefficient {i} has shape {a.shape}, expected {shape}")
            arr = np.stack(mats)
        arr = np.array(arr, dtype=complex, copy=True)
        arr.setflags(write=False)
        self._c = arr

    # -- basic attributes -------------------------------------------------
    @property
    def coeffs(self) -> np.ndarray:
        """Read-only array of shape ``(grade + 1, rows, cols)``."""
        return self._c

    @property
    def grade(self) -> int:
        return self._c.shape[0] - 1

    @property
    def shape(self) -> tuple[int, int]:
        return self._c.shape[1], self._c.shape[2]

    @property
    def n(self) -> int:
        rows, cols = self.shape
        if rows != cols:
            raise DimensionMismatchError(f"polynomial is {rows}x{cols}, not square")
        return rows

    @property
    def is_square(self) -> bool:
        return self.shape[0] == self.shape[1]

    def degree(self) -> int:
        """Index of the last nonzero coefficient, or -1 for the zero polynomial."""
        nz = [i for i in range(self.grade + 1) if np.any(self._c[i])]
        return nz[-1] if nz else -1

    @property
    def is_degenerate(self) -> bool:
        return not np.any(self._c)

    def __getitem__(self, i: int) -> np.ndarray:
        return self._c[i]

    def __len__(self) -> int:
        return self.grade + 1

    def __repr__(self) -> str:
        r, c = self.shape
        return f"MatrixPolynomial(shape={r}x{c}, grade={self.grade})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatrixPolynomial):
            return NotImplemented
        return self._c.shape == other._c.shape and bool(np.array_equal(self._c, other._c))

    __hash__ = None

    # -- structural helpers -----------------------------------------------
    def horner(self, lam: complex) -> np.ndarray:
        """Evaluate without the degeneracy check (used for structural blocks)."""
        out = self._c[-1].copy()
        for a in self._c[-2::-1]:
            out = out * lam + a
        return out

    def horner_derivative(self, lam: complex) -> np.ndarray:
        d = self.grade
        if d == 0:
            return np.zeros(self.shape, dtype=complex)
        out = d * self._c[d]
        for i in range(d - 1, 0, -1):
            out = out * lam + i * self._c[i]
        return out

    def __call__(self, lam: complex) -> np.ndarray:
        return evaluate(self, lam)

    def transpose(self) -> MatrixPolynomial:
        return MatrixPolynomial(np.transpose(self._c, (0, 2, 1)))

    def conj_transpose(self) -> MatrixPolynomial:
        """Polynomial with coefficients A_i^*, so that it evaluates to
        ``P(conj(lam))^*`` at ``lam``."""
        return MatrixPolynomial(np.conj(np.transpose(self._c, (0, 2, 1))))

    def scaled(self, factor: complex) -> MatrixPolynomial:
        return MatrixPolynomial(self._c * factor)

    def with_grade(self, grade: int) -> MatrixPolynomial:
        """Pad with zero coefficients (or drop trailing zero ones) to ``grade``."""
        if grade >= self.grade:
            pad = np.zeros((grade - self.grade,) + self.shape, dtype=complex)
            return MatrixPolynomial(np.concatenate([self._c, pad]))
        if np.any(self._c[grade + 1:]):
            raise ValueError(f"cannot lower grade to {grade}: nonzero coefficients")
        return MatrixPolynomial(self._c[: grade + 1])


def _require_analysable(P: MatrixPolynomial) -> None:
    if P.is_degenerate:
        raise DegeneratePolynomialError("the zero polynomial cannot be analysed")


def evaluate(P: MatrixPolynomial, lam: complex) -> np.ndarray:
    """``sum_i A_i lam**i`` by Horner's rule."""
    _require_analysable(P)
    return P.horner(lam)


def evaluate_derivative(P: MatrixPolynomial, lam: complex) -> np.ndarray:
    """``sum_i i A_i lam**(i-1)``."""
    _require_analysable(P)
    return P.horner_derivative(lam)


def reversal(P: MatrixPolynomial) -> MatrixPolynomial:
    """``rev P(lam) = lam**grade * P(1/lam)``; the grade is preserved."""
    return MatrixPolynomial(P.coeffs[::-1])


@dataclass(frozen=True)
class CoeffNormProfile:
    """Spectral norms of the coefficients of a polynomial."""

    per_coeff: tuple[float, ...]
    stacked: float
    max_norm: float
    min_edge: float

    @property
    def grade(self) -> int:
        return len(self.per_coeff) - 1


def _spectral_norm(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[0])


def norm_profile(P: MatrixPolynomial) -> CoeffNormProfile:
    per = tuple(_spectral_norm(a) for a in P.coeffs)
    stacked = _spectral_norm(np.concatenate(list(P.coeffs), axis=1))
    return CoeffNormProfile(
        per_coeff=per,
        stacked=stacked,
        max_norm=max(per),
        min_edge=min(per[0], per[-1]),
    )


def scale_to_unit_max(P: MatrixPolynomial) -> tuple[MatrixPolynomial, float]:
    """Divide ``P`` by ``max_i ||A_i||_2``.  Eigenvalues are unchanged."""
    _require_analysable(P)
    gamma = norm_profile(P).max_norm
    if gamma == 1.0:
        return P, 1.0
    return P.scaled(1.0 / gamma), gamma


# -- random generation ------------------------------------------------------

def _generator(seed: int) -> np.random.Generator:
    # Philox is counter based; the draw order below is part of the contract.
    return np.random.Generator(np.random.Philox(int(seed)))


def _complex_gaussian(rng: np.random.Generator, n: int) -> np.ndarray:
    # Real part (row-major n x n) is drawn before the imaginary part.
    re = rng.standard_normal((n, n))
    im = rng.standard_normal((n, n))
    return re + 1j * im


def random_poly(n: int, d: int, seed: int) -> MatrixPolynomial:
    """Degree-``d`` polynomial with standard complex Gaussian coefficients.

    Coefficients are drawn in order ``A_0, ..., A_d`` from a Philox stream
    seeded with ``seed``.
    """
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    rng = _generator(seed)
    return MatrixPolynomial([_complex_gaussian(rng, n) for _ in range(d + 1)])


def badly_scaled_poly(n: int, seed: int) -> MatrixPolynomial:
    """Degree-6 polynomial whose Gaussian coefficients are multiplied by
    ``1, 1e3, 1, 1e4, 1e4, 1e2, 1``."""
    if n < 1:
        raise ValueError("need n >= 1")
    rng = _generator(seed)
    return MatrixPolynomial([s * _complex_gaussian(rng, n) for s in BADLY_SCALED_FACTORS])


def is_regular(P: MatrixPolynomial, seed: int = 0) -> bool:
    """Probabilistic regularity certificate.

    ``P`` is declared regular if ``P(lam_j)`` is numerically nonsingular at
    one of ``n*d + 1`` pseudo-random points on the unit circle.
    """
    _require_analysable(P)
    n = P.n
    count = n * max(P.grade, 1) + 1
    angles = _generator(seed).uniform(0.0, 2.0 * math.pi, size=count)
    tol = max(n, 1) * np.finfo(float).eps
    for theta in angles:
        s = np.linalg.svd(P.horner(complex(math.cos(theta), math.sin(theta))), compute_uv=False)
        if s[0] > 0 and s[-1] > tol * s[0]:
            return True
    return False


# -- text IO ----------------------------------------------------------------

_HEADER = re.compile(r"^matpoly\s+v1\s+n=(\d+)\s+grade=(\d+)\s*$")
_COEFF = re.compile(r"^coeff\s+(\d+)\s*$")


def format_complex(z: complex) -> str:
    """``<re>+<im>i`` with 17 significant digits."""
    z = complex(z)
    return f"{z.real:.16e}{z.imag:+.16e}i"


def parse_complex(token: str) -> complex:
    if not token.endswith("i"):
        raise PolynomialFormatError(f"bad complex entry {token!r}")
    try:
        return complex(token[:-1] + "j")
    except ValueError as exc:
        raise PolynomialFormatError(f"bad complex entry {token!r}") from exc


def poly_to_text(P: MatrixPolynomial) -> str:
    rows, cols = P.shape
    if rows != cols:
        raise DimensionMismatchError("the text format stores square polynomials only")
    lines = [f"matpoly v1 n={rows} grade={P.grade}"]
    for i, a in enumerate(P.coeffs):
        lines.append(f"coeff {i}")
        for row in a:
            lines.append(" ".join(format_complex(v) for v in row))
    return "\n".join(lines) + "\n"


def poly_from_lines(lines: list[str]) -> MatrixPolynomial:
    lines = [ln.strip() for ln in lines if ln.strip()]
    if not lines:
        raise PolynomialFormatError("empty polynomial file")
    m = _HEADER.match(lines[0])
    if not m:
        raise PolynomialFormatError(f"bad header line: {lines[0]!r}")
    n, grade = int(m.group(1)), int(m.group(2))
    if n < 1:
        raise PolynomialFormatError("n must be positive")
    expected = 1 + (grade + 1) * (n + 1)
    if len(lines) != expected:
        raise DimensionMismatchError(
            f"expected {expected} non-empty lines for n={n}, grade={grade}, got {len(lines)}")
    coeffs = []
    pos = 1
    for i in range(grade + 1):
        cm = _COEFF.match(lines[pos])
        if not cm or int(cm.group(1)) != i:
            raise PolynomialFormatError(f"expected 'coeff {i}', got {lines[pos]!r}")
        pos += 1
        mat = np.empty((n, n), dtype=complex)
        for r in range(n):
            toks = lines[pos].split()
            if len(toks) != n:
                raise DimensionMismatchError(
                    f"coefficient {i} row {r} has {len(toks)} entries, expected {n}")
            mat[r] = [parse_complex(t) for t in toks]
            pos += 1
        coeffs.append(mat)
    return MatrixPolynomial(coeffs)


def write_poly(P: MatrixPolynomial, path) -> None:
    Path(path).write_text(poly_to_text(P), encoding="utf-8")


def read_poly(path) -> MatrixPolynomial:
    """Read the text format, or a directory of ``A<i>.mtx`` files."""
    path = Path(path)
    if path.is_dir():
        return read_mtx_dir(path)
    return poly_from_lines(path.read_text(encoding="utf-8").splitlines())


_MTX_NAME = re.compile(r"^A(\d+)\.mtx$")


def read_mtx_dir(path) -> MatrixPolynomial:
    """Read ``A0.mtx ... Ad.mtx`` (Matrix Market) from a directory.

    A missing index below the largest one present is taken as a zero
    coefficient and reported with a warning.
    """
    import scipy.io

    path = Path(path)
    found: dict[int, np.ndarray] = {}
    for f in sorted(path.iterdir()):
        m = _MTX_NAME.match(f.name)
        if m:
            a = scipy.io.mmread(str(f))
            if hasattr(a, "toarray"):
                a = a.toarray()
            found[int(m.group(1))] = np.asarray(a, dtype=complex)
    if not found:
        raise PolynomialFormatError(f"no A<i>.mtx files in {path}")
    shapes = {a.shape for a in found.values()}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"coefficient shapes differ: {sorted(shapes)}")
    shape = shapes.pop()
    if shape[0] != shape[1]:
        raise DimensionMismatchError(f"coefficients are {shape[0]}x{shape[1]}, not square")
    grade = max(found)
    coeffs = []
    for i in range(grade + 1):
        if i not in found:
            warnings.warn(f"{path}: A{i}.mtx missing, using a zero coefficient", stacklevel=2)
            coeffs.append(np.zeros(shape, dtype=complex))
        else:
            coeffs.append(found[i])
    return MatrixPolynomial(coeffs)

"""Block Kronecker l-ifications of matrix polynomials and the conditioning of
their eigenvalues."""

from .conditioning import (
    ConditionReport,
    bound_companion,
    bound_cross,
    bound_general,
    coeff_cond,
    coeff_cond_form,
    condition_reports,
    cross_ratios,
    kappa,
    norm_cond,
    rho,
)
from .eigsolve import (
    Eigentriple,
    eig_with_form,
    forward_errors,
    reference_eigentriples,
)
from .kronecker import (
    BlockKroneckerForm,
    KroneckerShape,
    assemble,
    general_M,
    is_companion,
    preset,
    standard_M,
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

__version__ = "0.1.0"

__all__ = [
    "ConditionReport",
    "bound_companion",
    "bound_cross",
    "bound_general",
    "coeff_cond",
    "coeff_cond_form",
    "condition_reports",
    "cross_ratios",
    "kappa",
    "norm_cond",
    "rho",
    "Eigentriple",
    "eig_with_form",
    "forward_errors",
    "reference_eigentriples",
    "BlockKroneckerForm",
    "KroneckerShape",
    "assemble",
    "general_M",
    "is_companion",
    "preset",
    "standard_M",
    "MatrixPolynomial",
    "badly_scaled_poly",
    "norm_profile",
    "random_poly",
    "read_poly",
    "scale_to_unit_max",
    "write_poly",
]

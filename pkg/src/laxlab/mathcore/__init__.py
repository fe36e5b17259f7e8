"""Dense linear algebra, quadrature, and special functions."""

from .linalg import (
    block_j,
    cholesky_borel,
    lu_determinant,
    pfaffian,
    qr_decompose,
    skew_borel,
    symmetric_eigen,
    symmetric_eigensystem,
)
from .quadrature import (
    gauss_jacobi_rule,
    gauss_legendre_rule,
    half_line_rule,
    integrate,
    interval_rule,
    union_rule,
)
from .special import (
    airy_ai,
    airy_ai_prime,
    airy_ai_vec,
    bessel_j,
    bessel_j_prime,
    special_eval,
)

__all__ = [
    "block_j",
    "cholesky_borel",
    "lu_determinant",
    "pfaffian",
    "qr_decompose",
    "skew_borel",
    "symmetric_eigen",
    "symmetric_eigensystem",
    "gauss_jacobi_rule",
    "gauss_legendre_rule",
    "half_line_rule",
    "integrate",
    "interval_rule",
    "union_rule",
    "airy_ai",
    "airy_ai_prime",
    "airy_ai_vec",
    "bessel_j",
    "bessel_j_prime",
    "special_eval",
]

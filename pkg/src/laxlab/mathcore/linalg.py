"""Dense linear algebra: determinants, Pfaffians, Borel-type factorizations.

Standard factorizations (LU determinant, QR, Cholesky, symmetric
eigensolve) wrap numpy's LAPACK bindings behind the conventions the rest
of the library relies on.  The skew-symmetric pieces (Pfaffian via
Parlett-Reid elimination, skew-Borel decomposition onto the block
lower-triangular group) are implemented here directly.
"""

import numpy as np

from ..errors import (
    DegenerateFlagError,
    DimensionError,
    NotPositiveDefiniteError,
    SingularMatrixError,
    SymmetryError,
)

SKEW_TOL = 1e-12


def _as_square(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def _require_skew(m):
    m = _as_square(m)
    scale = np.abs(m).max() if m.size else 0.0
    if scale and np.abs(m + m.T).max() > SKEW_TOL * scale:
        raise SymmetryError("matrix is not skew-symmetric")
    return 0.5 * (m - m.T)


def _require_symmetric(m):
    m = _as_square(m)
    scale = np.abs(m).max() if m.size else 0.0
    if scale and np.abs(m - m.T).max() > SKEW_TOL * scale:
        raise SymmetryError("matrix is not symmetric")
    return 0.5 * (m + m.T)


def lu_determinant(m):
    """Determinant via partially pivoted elimination (LAPACK getrf)."""
    m = _as_square(m)
    if m.shape[0] == 0:
        return 1.0
    return float(np.linalg.det(m))


def pfaffian(m):
    """Pfaffian of an even-dimensional skew-symmetric matrix.

    Parlett-Reid-style skew elimination with partial pivoting and exact
    sign tracking; sign convention pf([[0,1],[-1,0]]) = +1.
    """
    a = _require_skew(m).copy()
    n = a.shape[0]
    if n % 2:
        raise DimensionError("pfaffian requires even dimension")
    if n == 0:
        return 1.0
    sign = 1.0
    value = 1.0
    for k in range(0, n - 1, 2):
        # Pivot: bring the largest entry of column k below the diagonal
        # into position (k+1, k) by a symmetric row/column swap.
        col = np.abs(a[k + 1:, k])
        p = k + 1 + int(np.argmax(col))
        if a[p, k] == 0.0:
            return 0.0
        if p != k + 1:
            a[[k + 1, p], :] = a[[p, k + 1], :]
            a[:, [k + 1, p]] = a[:, [p, k + 1]]
            sign = -sign
        value *= a[k, k + 1]
        if k + 2 < n:
            # Gauss-transform congruence: zero row/column k beyond k+1.
            tau = a[k, k + 2:] / a[k, k + 1]
            col1 = a[k + 2:, k + 1]
            a[k + 2:, k + 2:] += np.outer(tau, col1) - np.outer(col1, tau)
    return float(sign * value)


def cholesky_borel(m):
    """Lower-triangular S with S m S^T = I for symmetric positive definite m.

    S is the inverse of the Cholesky factor L (m = L L^T).
    """
    m = _require_symmetric(m)
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            "matrix is not positive definite (nonpositive pivot)"
        ) from exc
    n = m.shape[0]
    s = np.linalg.solve(chol, np.eye(n))
    return np.tril(s)


def block_j(n2):
    """The skew matrix J = diag([[0,1],[-1,0]], ...) of even size n2."""
    if n2 % 2:
        raise DimensionError("J requires even dimension")
    j = np.zeros((n2, n2))
    for k in range(0, n2, 2):
        j[k, k + 1] = 1.0
        j[k + 1, k] = -1.0
    return j


def skew_borel(m):
    """Skew-Borel factor Q with Q m Q^T = J, i.e. m = Q^{-1} J Q^{-T}.

    Q is lower triangular with 2x2 diagonal blocks proportional to the
    identity.  Built by skew Gram-Schmidt against the form <x,y> = x m y^T,
    normalizing consecutive pairs.  A nonpositive pair pivot (ratio of
    consecutive leading Pfaffians) cannot be scaled onto +J by a real
    block of this shape and raises the degenerate flag.
    """
    m = _require_skew(m)
    n = m.shape[0]
    if n % 2:
        raise DimensionError("skew_borel requires even dimension")
    q = np.zeros((n, n))
    scale = np.abs(m).max() if n else 1.0

    def form(x, y):
        return float(x @ m @ y)

    for k in range(0, n, 2):
        u = np.zeros(n)
        v = np.zeros(n)
        u[k] = 1.0
        v[k + 1] = 1.0
        for i in range(0, k, 2):
            qa, qb = q[i], q[i + 1]
            u = u - form(u, qb) * qa + form(u, qa) * qb
            v = v - form(v, qb) * qa + form(v, qa) * qb
        d = form(u, v)
        if not d > SKEW_TOL * max(scale, 1.0) * 1e-4:
            raise DegenerateFlagError(
                f"leading Pfaffian ratio nonpositive or vanishing at block {k // 2}"
            )
        s = np.sqrt(d)
        q[k] = u / s
        q[k + 1] = v / s
    return q


def qr_decompose(m):
    """QR factorization with the positive-diagonal-R uniqueness convention."""
    m = _as_square(m)
    q, r = np.linalg.qr(m)
    diag = np.diag(r)
    if np.any(np.abs(diag) < 1e-300):
        raise SingularMatrixError("matrix is rank deficient")
    signs = np.sign(diag)
    return q * signs, signs[:, None] * r


def symmetric_eigen(m):
    """Eigenvalues of a symmetric matrix, sorted ascending."""
    m = _require_symmetric(m)
    return np.sort(np.linalg.eigvalsh(m))


def symmetric_eigensystem(m):
    """(eigenvalues, eigenvectors) of a symmetric matrix, ascending."""
    m = _require_symmetric(m)
    return np.linalg.eigh(m)

import math

import mpmath
import numpy as np
import pytest

from laxlab.errors import (
    DegenerateFlagError,
    DimensionError,
    DomainError,
    NotPositiveDefiniteError,
    SymmetryError,
)
from laxlab.intervals import IntervalUnion
from laxlab.mathcore import (
    airy_ai,
    airy_ai_prime,
    bessel_j,
    bessel_j_prime,
    block_j,
    cholesky_borel,
    gauss_legendre_rule,
    integrate,
    lu_determinant,
    pfaffian,
    qr_decompose,
    skew_borel,
    special_eval,
    symmetric_eigen,
    union_rule,
)


# ----- oracles (written before the implementations they check) -----

def cofactor_det(m):
    """O(n!) cofactor-expansion determinant, the independent oracle."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n == 1:
        return m[0, 0]
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += ((-1) ** j) * m[0, j] * cofactor_det(minor)
    return total


def pfaffian_4x4_oracle(a):
    """Classical 4x4 expansion a12 a34 - a13 a24 + a14 a23."""
    return a[0, 1] * a[2, 3] - a[0, 2] * a[1, 3] + a[0, 3] * a[1, 2]


def airy_series_oracle(x, digits=40):
    """40-digit Maclaurin evaluation of Ai via the two standard series."""
    with mpmath.workdps(digits):
        one_third = mpmath.mpf(1) / 3
        c1 = mpmath.mpf(3) ** (-mpmath.mpf(2) / 3) / mpmath.gamma(2 * one_third)
        c2 = mpmath.mpf(3) ** (-one_third) / mpmath.gamma(one_third)
        xm = mpmath.mpf(x)
        f = mpmath.mpf(1)
        g = xm
        total = c1 * f - c2 * g
        term_f, term_g = f, g
        for k in range(1, 200):
            term_f *= xm ** 3 / ((3 * k) * (3 * k - 1))
            term_g *= xm ** 3 / ((3 * k + 1) * (3 * k))
            total += c1 * term_f - c2 * term_g
            if abs(term_f) < mpmath.mpf(10) ** (-digits - 5) and abs(
                term_g
            ) < mpmath.mpf(10) ** (-digits - 5):
                break
        return float(total)


# ----- determinants -----

def test_lu_determinant_identity():
    assert lu_determinant(np.eye(3)) == pytest.approx(1.0)


def test_lu_determinant_2x2_closed_form():
    m = np.array([[1.0, 0.5], [0.5, 1.0 / 3.0]])
    assert lu_determinant(m) == pytest.approx(1.0 / 12.0, abs=1e-15)


def test_lu_determinant_matches_cofactor_oracle():
    rng = np.random.default_rng(7)
    mu = rng.uniform(size=11)
    m = np.array([[mu[i + j] for j in range(6)] for i in range(6)])
    assert lu_determinant(m) == pytest.approx(cofactor_det(m), abs=1e-12)


def test_lu_determinant_rejects_nonsquare():
    with pytest.raises(DimensionError):
        lu_determinant(np.zeros((2, 3)))


# ----- pfaffian -----

def test_pfaffian_2x2():
    assert pfaffian(np.array([[0.0, 3.0], [-3.0, 0.0]])) == pytest.approx(3.0)


def test_pfaffian_4x4_expansion():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(4, 4))
    a = a - a.T
    assert pfaffian(a) == pytest.approx(pfaffian_4x4_oracle(a), rel=1e-12)


def test_pfaffian_squares_to_determinant():
    rng = np.random.default_rng(5)
    for _ in range(20):
        a = rng.normal(size=(8, 8))
        a = a - a.T
        pf = pfaffian(a)
        det = lu_determinant(a)
        assert pf * pf == pytest.approx(det, rel=1e-10)


def test_pfaffian_sign_convention():
    assert pfaffian(block_j(6)) == pytest.approx(1.0)


def test_pfaffian_odd_dimension_is_error():
    with pytest.raises(DimensionError):
        pfaffian(np.zeros((3, 3)))


def test_pfaffian_rejects_non_skew():
    with pytest.raises(SymmetryError):
        pfaffian(np.eye(4))


# ----- cholesky-borel -----

def test_cholesky_borel_identity():
    assert np.allclose(cholesky_borel(np.eye(4)), np.eye(4))


def test_cholesky_borel_diagonal():
    s = cholesky_borel(np.diag([4.0, 9.0]))
    assert np.allclose(s, np.diag([0.5, 1.0 / 3.0]))


def test_cholesky_borel_reconstructs_identity():
    mu = [1.0 / (k + 1) for k in range(8)]
    m = np.array([[mu[i + j] for j in range(4)] for i in range(4)])
    s = cholesky_borel(m)
    assert np.abs(s @ m @ s.T - np.eye(4)).max() < 1e-10
    assert np.allclose(s, np.tril(s))


def test_cholesky_borel_rejects_indefinite():
    with pytest.raises(NotPositiveDefiniteError):
        cholesky_borel(np.diag([1.0, -1.0]))


# ----- skew-borel -----

def test_skew_borel_fixed_point():
    assert np.allclose(skew_borel(block_j(4)), np.eye(4))


def test_skew_borel_scaling():
    q = skew_borel(2.0 * block_j(4))
    assert np.allclose(q, np.eye(4) / math.sqrt(2.0))


def test_skew_borel_reconstruction():
    rng = np.random.default_rng(11)
    for _ in range(10):
        a = rng.normal(size=(6, 6))
        a = a - a.T + 4.0 * block_j(6)  # bias towards positive leading pfaffians
        try:
            q = skew_borel(a)
        except DegenerateFlagError:
            continue
        assert np.abs(q @ a @ q.T - block_j(6)).max() < 1e-10
        # block-lower-triangular with scalar 2x2 diagonal blocks
        for k in range(0, 6, 2):
            assert q[k, k] == pytest.approx(q[k + 1, k + 1], rel=1e-12)
            assert q[k, k + 1] == 0.0
            if k + 2 < 6:
                assert np.abs(q[k, k + 2:]).max() == 0.0
                assert np.abs(q[k + 1, k + 2:]).max() == 0.0


def test_skew_borel_degenerate_flag():
    a = np.zeros((4, 4))
    a[0, 1] = 1e-30
    a[1, 0] = -1e-30
    a[2, 3] = 1.0
    a[3, 2] = -1.0
    with pytest.raises(DegenerateFlagError):
        skew_borel(a)


# ----- qr -----

def test_qr_identity():
    q, r = qr_decompose(np.eye(3))
    assert np.allclose(q, np.eye(3))
    assert np.allclose(r, np.eye(3))


def test_qr_permutation_positive_diagonal():
    m = np.array([[0.0, 1.0], [1.0, 0.0]])
    q, r = qr_decompose(m)
    assert np.allclose(q, m)
    assert np.allclose(r, np.eye(2))


def test_qr_contract_on_matrix_exponential():
    rng = np.random.default_rng(13)
    d = rng.normal(size=6)
    e = rng.uniform(0.5, 1.5, size=5)
    l0 = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    # exp(l0) via eigendecomposition (symmetric)
    w, v = np.linalg.eigh(l0)
    m = (v * np.exp(w)) @ v.T
    q, r = qr_decompose(m)
    assert np.abs(q.T @ q - np.eye(6)).max() < 1e-12
    assert np.abs(np.tril(r, -1)).max() < 1e-12
    assert np.all(np.diag(r) > 0)
    assert np.abs(q @ r - m).max() < 1e-12 * np.abs(m).max()


# ----- eigen -----

def test_symmetric_eigen_diagonal():
    assert np.allclose(symmetric_eigen(np.diag([3.0, 1.0, 2.0])), [1, 2, 3])


def test_symmetric_eigen_swap():
    assert np.allclose(symmetric_eigen(np.array([[0.0, 1.0], [1.0, 0.0]])), [-1, 1])


def test_symmetric_eigen_trace_det():
    rng = np.random.default_rng(17)
    m = rng.normal(size=(8, 8))
    m = m + m.T
    lam = symmetric_eigen(m)
    assert lam.sum() == pytest.approx(np.trace(m), abs=1e-10)
    assert np.prod(lam) == pytest.approx(lu_determinant(m), rel=1e-10)


def test_symmetric_eigen_rejects_asymmetric():
    with pytest.raises(SymmetryError):
        symmetric_eigen(np.array([[0.0, 1.0], [0.0, 0.0]]))


# ----- quadrature -----

def test_gauss_legendre_order_one():
    x, w = gauss_legendre_rule(1, (-1.0, 1.0))
    assert x[0] == pytest.approx(0.0, abs=1e-15)
    assert w[0] == pytest.approx(2.0)


def test_gauss_legendre_polynomial_exactness():
    x, w = gauss_legendre_rule(2, (-1.0, 1.0))
    assert np.dot(w, x ** 2) == pytest.approx(2.0 / 3.0, abs=1e-15)
    for order in (3, 5, 8):
        x, w = gauss_legendre_rule(order, (0.0, 1.0))
        for deg in range(2 * order):
            assert np.dot(w, x ** deg) == pytest.approx(
                1.0 / (deg + 1), abs=1e-13
            ), (order, deg)


def test_gauss_legendre_exponential():
    x, w = gauss_legendre_rule(20, (0.0, 1.0))
    assert np.dot(w, np.exp(x)) == pytest.approx(math.e - 1.0, abs=1e-14)


def test_gauss_legendre_rejects_infinite_interval():
    with pytest.raises(DomainError):
        gauss_legendre_rule(10, (0.0, math.inf))


def test_union_rule_gaussian_integral():
    E = IntervalUnion.full_line()
    val = integrate(lambda z: np.exp(-z * z), E, 80, scale=1.0)
    assert val == pytest.approx(math.sqrt(math.pi), abs=1e-12)


def test_union_rule_disjoint_pieces():
    E = IntervalUnion([(0.0, 1.0), (2.0, 3.0)])
    x, w = union_rule(E, 16)
    assert np.dot(w, np.ones_like(x)) == pytest.approx(2.0, abs=1e-13)


# ----- special functions -----

def test_airy_matches_series_oracle():
    for x in [-4.0, -1.5, 0.0, 0.5, 1.0, 2.5, 4.0]:
        assert airy_ai(x) == pytest.approx(airy_series_oracle(x), abs=1e-13)


def test_airy_against_mpmath_wide_range():
    for x in np.linspace(-15.0, 15.0, 61):
        ref = float(mpmath.airyai(x))
        refp = float(mpmath.airyai(x, 1))
        assert abs(airy_ai(x) - ref) < 1e-12, x
        assert abs(airy_ai_prime(x) - refp) < 1e-12, x


def test_airy_negative_envelope():
    for x in [-6.0, -10.0, -14.0]:
        bound = 1.05 / (math.sqrt(math.pi) * abs(x) ** 0.25)
        assert abs(airy_ai(x)) < bound


def test_bessel_j0_at_zero():
    assert bessel_j(0, 0.0) == pytest.approx(1.0)


def test_bessel_against_mpmath():
    for nu in [0.0, 0.25, 1.0, -0.75, 2.5]:
        for x in [0.1, 1.0, 4.0, 7.9, 8.1, 15.0, 40.0, 100.0]:
            ref = float(mpmath.besselj(nu, x))
            assert abs(bessel_j(nu, x) - ref) < 1e-12, (nu, x)


def test_bessel_prime_against_mpmath():
    for nu in [0.0, 0.25]:
        for x in [0.5, 3.0, 12.0, 50.0]:
            ref = float(mpmath.besselj(nu, x, 1))
            assert abs(bessel_j_prime(nu, x) - ref) < 1e-11, (nu, x)


def test_bessel_domain_errors():
    with pytest.raises(DomainError):
        bessel_j(-1.5, 1.0)
    with pytest.raises(DomainError):
        bessel_j(0.0, -1.0)


def test_special_eval_dispatch():
    assert special_eval("airy_ai", 1.0) == pytest.approx(airy_ai(1.0))
    assert special_eval("bessel_j", 2.0, nu=0.25) == pytest.approx(
        bessel_j(0.25, 2.0)
    )
    with pytest.raises(DomainError):
        special_eval("nope", 1.0)

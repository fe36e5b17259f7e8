import math

import numpy as np
import pytest

from laxlab.errors import (
    DivergenceError,
    PrecisionError,
    SingularTauError,
    UsageError,
)
from laxlab.intervals import IntervalUnion
from laxlab.mathcore import gauss_legendre_rule, union_rule
from laxlab.twotoda import (
    BiMoments,
    BoundaryOperators,
    bimoments,
    biorthopoly_eval,
    cd_kernel,
    coupled_pde_residual,
    dlog_tau2,
    evolve_bimoments,
    h_norms,
    kp_in_t_residual,
    tau2_table,
    wronskian_bracket_residual,
    wronskian_identity_residual,
)


# ----- oracles -----

def mc_mu11_oracle(c, rng, count=400_000):
    """Monte Carlo of int int x y e^{-(x^2+y^2)/2 + c x y} dx dy using a
    wide Gaussian proposal (variance 2 per coordinate)."""
    s2 = 2.0
    x = rng.normal(scale=math.sqrt(s2), size=count)
    y = rng.normal(scale=math.sqrt(s2), size=count)
    log_q = -(x ** 2 + y ** 2) / (2.0 * s2) - math.log(2.0 * math.pi * s2)
    log_f = -(x ** 2 + y ** 2) / 2.0 + c * x * y
    vals = x * y * np.exp(log_f - log_q)
    return vals.mean(), vals.std(ddof=1) / math.sqrt(count)


def gram_schmidt_h_oracle(mu, n):
    """h_0..h_{n-1} by explicit bi-orthogonalization of monomials in the
    bi-moment pairing <x^i, y^j> = mu_{ij}; independent of determinants."""
    left = []  # coefficient vectors of p1_k
    right = []  # coefficient vectors of p2_k
    hs = []
    size = n + 1
    for k in range(n):
        a = np.zeros(size)
        a[k] = 1.0
        b = np.zeros(size)
        b[k] = 1.0
        for i in range(k):
            a -= (a @ mu[:size, :size] @ right[i]) / hs[i] * left[i]
            b -= (left[i] @ mu[:size, :size] @ b) / hs[i] * right[i]
        left.append(a)
        right.append(b)
        hs.append(a @ mu[:size, :size] @ b)
    return np.array(hs)


def full_plane_rule(c, order=64):
    scale = math.sqrt(2.0 / (1.0 - abs(c)))
    return union_rule(IntervalUnion.full_line(), order, scale)


def rho0(c, x, y):
    return np.exp(-0.5 * x ** 2 - 0.5 * y ** 2 + c * x * y)


# ----- construction -----

def test_mu00_closed_form():
    c = 0.4
    m = bimoments(c, N=2)
    assert m.m[0, 0] == pytest.approx(
        2.0 * math.pi / math.sqrt(1.0 - c * c), rel=1e-12
    )


def test_c0_factorizes():
    m = bimoments(0.0, N=4)
    assert abs(m.m[1, 0]) < 1e-12
    # mu_{ij} = (1-D gaussian moment i) * (moment j)
    g = [math.sqrt(2.0 * math.pi), 0.0, math.sqrt(2.0 * math.pi)]
    assert m.m[2, 2] == pytest.approx(g[2] * g[2], rel=1e-12)


def test_mu11_matches_mc_oracle():
    rng = np.random.default_rng(33)
    est, err = mc_mu11_oracle(0.5, rng)
    m = bimoments(0.5, N=2)
    assert abs(m.m[1, 1] - est) < 3.0 * err


def test_coupling_bound_enforced():
    with pytest.raises(DivergenceError):
        bimoments(1.0, N=2)


# ----- evolution -----

def test_evolution_identity_and_group_law():
    m = bimoments(0.3, N=40)
    assert evolve_bimoments(m, None, None) is m
    t1, t2 = [0.04], [-0.02]
    s1, s2 = [0.03], [0.01]
    a = evolve_bimoments(evolve_bimoments(m, t1, s1), t2, s2)
    b = evolve_bimoments(m, [t1[0] + t2[0]], [s1[0] + s2[0]])
    k = min(a.size, b.size)
    assert np.abs(a.m[:k, :k] - b.m[:k, :k]).max() < 1e-12 * np.abs(b.m).max()


def test_evolution_matches_quadrature_on_box():
    c, t1, s1 = 0.5, 0.07, -0.05
    box = IntervalUnion([(0.0, 1.0)])
    m = bimoments(c, (box, box), N=16, order=48)
    out = evolve_bimoments(m, [t1], [s1])
    x, wx = gauss_legendre_rule(48, (0.0, 1.0))
    y, wy = gauss_legendre_rule(48, (0.0, 1.0))
    kernel = rho0(c, x[:, None], y[None, :]) * np.exp(
        t1 * x[:, None] - s1 * y[None, :]
    )
    for i in range(3):
        for j in range(3):
            direct = (wx * x ** i) @ kernel @ (wy * y ** j)
            assert out.m[i, j] == pytest.approx(direct, abs=1e-9)


# ----- tau tables and bi-orthogonality -----

def test_tau1_is_mu00():
    m = bimoments(0.2, N=3)
    assert tau2_table(m, 1)[1] == m.m[0, 0]


def test_tau2_matches_gram_schmidt_oracle():
    m = bimoments(0.5, N=5)
    hs = gram_schmidt_h_oracle(m.m, 2)
    assert tau2_table(m, 2)[2] == pytest.approx(hs[0] * hs[1], rel=1e-10)


def test_c0_degenerate_flagged():
    m = bimoments(0.0, N=5)
    with pytest.raises(SingularTauError):
        biorthopoly_eval(m, 1, 2, 0.5)
    with pytest.raises(SingularTauError):
        h_norms(m, 2)


def test_biorthopoly_monic_degree_zero():
    m = bimoments(0.5, N=4)
    assert biorthopoly_eval(m, 1, 0, 0.7) == 1.0
    assert biorthopoly_eval(m, 2, 0, -0.3) == 1.0


def test_biorthogonality_under_quadrature():
    c = 0.5
    m = bimoments(c, N=8)
    hs = h_norms(m, 4)
    x, wx = full_plane_rule(c)
    y, wy = full_plane_rule(c)
    kernel = rho0(c, x[:, None], y[None, :])
    for i in range(4):
        pi = biorthopoly_eval(m, 1, i, x)
        for j in range(4):
            qj = biorthopoly_eval(m, 2, j, y)
            val = (wx * pi) @ kernel @ (wy * qj)
            target = hs[i] if i == j else 0.0
            assert val == pytest.approx(target, abs=1e-9 * max(1.0, abs(hs[i])))


def test_h_matches_tau_ratio():
    m = bimoments(0.5, N=6)
    taus = tau2_table(m, 4)
    hs = h_norms(m, 4)
    for j in range(4):
        assert hs[j] == pytest.approx(taus[j + 1] / taus[j], rel=1e-12)


# ----- CD kernel -----

def test_cd_kernel_n1():
    m = bimoments(0.3, N=3)
    assert cd_kernel(m, 1, 0.4, -0.2) == pytest.approx(1.0 / m.m[0, 0], rel=1e-12)


def test_cd_kernel_projects_low_degree_polynomials():
    c = 0.5
    n = 3
    m = bimoments(c, N=8)
    x, wx = full_plane_rule(c)
    y, wy = full_plane_rule(c)
    kernel = rho0(c, x[:, None], y[None, :])  # rho0(w, z) on (w=x, z=y)
    rng = np.random.default_rng(7)
    coeffs = rng.normal(size=n)  # random polynomial of degree < n
    f = sum(ck * x ** k for k, ck in enumerate(coeffs))
    for y0 in (-0.8, 0.3, 1.1):
        kvals = np.array([cd_kernel(m, n, y0, z) for z in y])
        g = (wx * f) @ kernel @ (wy * kvals)
        target = sum(ck * y0 ** k for k, ck in enumerate(coeffs))
        assert g == pytest.approx(target, abs=1e-8 * max(1.0, abs(target)))


def test_cd_kernel_trace_is_n():
    c = 0.5
    m = bimoments(c, N=8)
    x, wx = full_plane_rule(c)
    y, wy = full_plane_rule(c)
    kernel = rho0(c, x[:, None], y[None, :])
    for n in (1, 2, 3):
        kmat = np.array([[cd_kernel(m, n, xi, yj) for yj in y] for xi in x])
        trace = wx @ (kmat * kernel) @ wy
        assert trace == pytest.approx(n, abs=1e-8)


# ----- exact derivative identities -----

def test_dlog_first_order_against_fd():
    m = bimoments(0.5, N=30)

    def f(t1):
        return math.log(tau2_table(evolve_bimoments(m, [t1], None), 2)[2])

    from laxlab.fd import central_diff

    fd = central_diff(f, 1, 1e-2, richardson=True)
    assert dlog_tau2(m, 2, tlist=(1,)) == pytest.approx(fd, abs=1e-9)


def test_kp_in_t_and_s():
    m = bimoments(0.5, N=10)
    for n in (2, 3):
        assert abs(kp_in_t_residual(m, n, "t")) < 1e-6
        assert abs(kp_in_t_residual(m, n, "s")) < 1e-6


def test_wronskian_identities():
    m = bimoments(0.5, N=8)
    r1, r2 = wronskian_identity_residual(m, 2)
    assert abs(r1) < 1e-8
    assert abs(r2) < 1e-8


def test_wronskian_bracket_identity():
    m = bimoments(0.5, N=8)
    assert abs(wronskian_bracket_residual(m, 2)) < 1e-8


def test_wronskian_scale_invariance():
    m = bimoments(0.5, N=8)
    doubled = BiMoments(m=2.0 * m.m, c=m.c, E1=m.E1, E2=m.E2)
    a = wronskian_identity_residual(m, 2)
    b = wronskian_identity_residual(doubled, 2)
    assert a[0] == pytest.approx(b[0], abs=1e-10)
    assert a[1] == pytest.approx(b[1], abs=1e-10)


# ----- boundary operators and the coupled PDE -----

def smooth_test_function(p):
    a, b, c = p
    return math.exp(0.3 * a - 0.2 * b + 0.1 * c) + math.sin(a * b + 0.5 * c)


def test_operator_brackets():
    ops = BoundaryOperators()
    p0 = (0.4, -0.3, 0.5)
    c = p0[2]
    f = smooth_test_function
    pairs = [
        ("a1", "b1", lambda p: 0.0),
        ("a2", "b2", lambda p: 0.0),
        ("a1", "a2", lambda p: (1 + c * c) / (1 - c * c) * ops.a1(f)(p)),
        ("a2", "b1", lambda p: 2 * c / (1 - c * c) * ops.a1(f)(p)),
        ("a1", "b2", lambda p: -2 * c / (1 - c * c) * ops.b1(f)(p)),
        ("b1", "b2", lambda p: (1 + c * c) / (1 - c * c) * ops.b1(f)(p)),
    ]
    for name_x, name_y, rhs in pairs:
        X = getattr(ops, name_x)
        Y = getattr(ops, name_y)
        lhs = X(Y(f))(p0) - Y(X(f))(p0)
        assert lhs == pytest.approx(rhs(p0), abs=1e-6)


def test_coupled_pde_residual_small():
    assert abs(coupled_pde_residual(0.5, 0.3, 0.3, 1)) < 1e-3


def test_coupled_pde_symmetry():
    r_ab = coupled_pde_residual(0.5, 0.5, 0.1, 1)
    r_ba = coupled_pde_residual(0.5, 0.1, 0.5, 1)
    # swapping a and b flips the sign of the residual up to FD error
    assert abs(abs(r_ab) - abs(r_ba)) < 5e-3


def test_coupled_pde_rejects_bad_coupling():
    with pytest.raises(UsageError):
        coupled_pde_residual(0.0, 0.3, 0.3, 1)
    with pytest.raises(UsageError):
        coupled_pde_residual(1.2, 0.3, 0.3, 1)
